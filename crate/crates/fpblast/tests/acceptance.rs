//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (visible with `cargo test --test acceptance -- --nocapture`).

use std::time::{Duration, Instant};

use num_bigint::BigUint;

use fpblast::backend::{model_satisfies, solve, Engine};
use fpblast::bitvec::{CompiledCircuit, Context, SatStatus};
use fpblast::difftest::{random_fp_queries, run_sweep, SweepOp, SweepOptions};
use fpblast::fpformat::{formats, fp_const, fp_from_ieeebv, mk_literal, RoundingMode};
use fpblast::fpops;
use fpblast::oracle;
use fpblast::pipeline::{pack, unpack};

fn pass(name: &str, detail: &str) {
    println!("acceptance {:<28} PASS  {}", name, detail);
}

/// Criterion 1: the demonstration prints the four exact decimal expansions
/// byte-identical to the known values, reports eq(w,z)=false and
/// lt(w,z)=true, matches the committed golden file, and runs in under a
/// second.
#[test]
fn criterion_1_fig1_constants() {
    let start = Instant::now();
    let report = fpblast::demo::fig1_report();
    let elapsed = start.elapsed();

    let expansions = [
        "0.1000000000000000055511151231257827021181583404541015625",
        "0.200000000000000011102230246251565404236316680908203125",
        "0.3000000000000000444089209850062616169452667236328125",
        "0.299999999999999988897769753748434595763683319091796875",
    ];
    let mut cursor = 0;
    for s in expansions {
        let at = report[cursor..]
            .find(s)
            .unwrap_or_else(|| panic!("expansion missing or out of order: {}", s));
        cursor += at + s.len();
    }
    assert!(report.contains("fp.eq(w, z) = false"));
    assert!(report.contains("fp.lt(w, z) = true"));

    let golden = include_str!("fixtures/demo_fig1.txt");
    assert_eq!(report, golden, "demo output must be byte-stable");
    assert!(elapsed < Duration::from_secs(1), "took {:?}", elapsed);
    pass(
        "1 fig1-constants",
        "four expansions exact, eq false, lt true",
    );
}

/// Criterion 2: the half-precision literal 0.125 encodes exactly.
#[test]
fn criterion_2_literal_encoding() {
    let x = mk_literal(formats::fp16(), "0.125", RoundingMode::Rne).unwrap();
    assert_eq!(
        x.bits().as_const().unwrap(),
        &BigUint::from(0b0011000000000000u32)
    );
    pass("2 literal-0.125", "fp16 literal is 0x3000");
}

/// Criterion 3: exhaustive fp8 oracle-equivalence sweep over every operator
/// group, all five rounding modes, with seeded fused multiply-add triples.
#[test]
fn criterion_3_fp8_exhaustive_sweep() {
    let start = Instant::now();
    let mut opts = SweepOptions::new(formats::fp8());
    opts.samples = None; // exhaustive binaries and unaries
    opts.seed = 0xACCE;
    let report = run_sweep(&opts).unwrap();
    assert!(
        report.total_cases() >= 4 * 5 * 65536 + 100_000,
        "sweep too small: {}",
        report.total_cases()
    );
    assert_eq!(
        report.total_mismatches(),
        0,
        "mismatches:\n{}",
        report.render()
    );
    pass(
        "3 fp8-sweep",
        &format!(
            "{} cases, 0 mismatches, {:?}",
            report.total_cases(),
            start.elapsed()
        ),
    );
}

/// Criterion 4: fp16 sampled sweep, 10^5 seeded pairs per binary operator
/// per rounding mode.
#[test]
fn criterion_4_fp16_sampled_sweep() {
    let start = Instant::now();
    let mut opts = SweepOptions::new(formats::fp16());
    opts.ops = vec![SweepOp::Add, SweepOp::Sub, SweepOp::Mul, SweepOp::Div];
    opts.samples = Some(100_000);
    opts.seed = 42;
    let report = run_sweep(&opts).unwrap();
    assert_eq!(report.total_cases(), 4 * 5 * 100_000);
    assert_eq!(
        report.total_mismatches(),
        0,
        "mismatches:\n{}",
        report.render()
    );
    pass(
        "4 fp16-sampled-sweep",
        &format!("2000000 cases, 0 mismatches, {:?}", start.elapsed()),
    );
}

/// Criterion 5: pack(unpack(x)) is the identity on every non-NaN fp8 and
/// fp16 pattern (both with and without subnormal normalization); NaN
/// patterns map to the canonical NaN.
#[test]
fn criterion_5_pipeline_round_trip() {
    for f in [formats::fp8(), formats::fp16()] {
        let canonical = u64::try_from(oracle::canonical_nan_bits(f)).unwrap();
        for normalize in [false, true] {
            let mut ctx = Context::new();
            let xbits = ctx.mk_var("x", f.total_width()).unwrap();
            let x = fp_from_ieeebv(&xbits, f).unwrap();
            let packed = pack(&unpack(&x, normalize), f);
            let circuit = CompiledCircuit::compile(std::slice::from_ref(packed.bits())).unwrap();
            let mut out = Vec::with_capacity(1);
            for pattern in 0..(1u64 << f.total_width()) {
                circuit.run(&[pattern], &mut out);
                let is_nan = oracle::decode(&BigUint::from(pattern), f).is_nan();
                let expect = if is_nan { canonical } else { pattern };
                assert_eq!(
                    out[0], expect,
                    "{} pattern {:#x} normalize {}",
                    f, pattern, normalize
                );
            }
        }
    }
    pass("5 pipeline-round-trip", "fp8 and fp16, 0 failures");
}

/// Criterion 6: special-value tables. Signed zeroes compare equal, NaN
/// makes every comparison false (so not-equal holds), division by zero
/// returns a signed infinity, infinity times zero and the square root of a
/// negative number are invalid.
#[test]
fn criterion_6_special_value_tables() {
    let f = formats::fp8();
    let fp8 = |p: u64| fp_const(BigUint::from(p), f);
    let truth = |e: &fpblast::bitvec::expr::BvExpr| e.as_const().unwrap() == &BigUint::from(1u8);

    let pz = fp8(0x00);
    let nz = fp8(0x80);
    let one = mk_literal(f, "1.0", RoundingMode::Rne).unwrap();
    let nan = fp8(0x79);
    let pinf = fp8(0x78);

    // eq(+0, -0) = true.
    assert!(truth(
        &fpops::fp_compare(fpops::FpCmpKind::Eq, &pz, &nz).unwrap()
    ));
    // Every comparison with NaN is false, hence "not equal" is true.
    for kind in fpops::FpCmpKind::ALL {
        assert!(!truth(&fpops::fp_compare(kind, &nan, &one).unwrap()));
        assert!(!truth(&fpops::fp_compare(kind, &one, &nan).unwrap()));
        assert!(!truth(&fpops::fp_compare(kind, &nan, &nan).unwrap()));
    }
    // 1.0 / ±0 = ±inf.
    let r = fpops::fp_div(RoundingMode::Rne, &one, &pz).unwrap();
    assert_eq!(r.bits().as_const().unwrap(), &BigUint::from(0x78u8));
    let r = fpops::fp_div(RoundingMode::Rne, &one, &nz).unwrap();
    assert_eq!(r.bits().as_const().unwrap(), &BigUint::from(0xF8u8));
    // inf * 0 = NaN.
    let r = fpops::fp_mul(RoundingMode::Rne, &pinf, &pz).unwrap();
    assert_eq!(r.bits().as_const().unwrap(), &BigUint::from(0x79u8));
    // sqrt(-1) = NaN.
    let neg_one = mk_literal(f, "-1.0", RoundingMode::Rne).unwrap();
    let r = fpops::fp_sqrt(RoundingMode::Rne, &neg_one);
    assert_eq!(r.bits().as_const().unwrap(), &BigUint::from(0x79u8));
    pass("6 special-values", "zero/NaN/infinity defaults all hold");
}

/// Criterion 7: backend soundness on 50 generated queries. The brute-force
/// engine decides each one and every sat model re-evaluates all assertions
/// to true. When an external QF_BV solver is available (FPBLAST_SOLVER or
/// z3 on PATH), its status must agree on every query.
#[test]
fn criterion_7_backend_soundness() {
    let external = std::env::var("FPBLAST_SOLVER")
        .ok()
        .filter(|p| !p.is_empty())
        .or_else(|| {
            let probe = std::process::Command::new("z3").arg("--version").output();
            probe.is_ok().then(|| "z3".to_string())
        });

    let queries = random_fp_queries(50, 7);
    let mut disagreements = 0;
    let mut checked_externally = 0;
    for (i, q) in queries.iter().enumerate() {
        let brute = solve(q, &Engine::default(), Duration::from_secs(30)).unwrap();
        match brute.status {
            SatStatus::Sat => {
                assert!(
                    model_satisfies(q, brute.model.as_ref().unwrap()).unwrap(),
                    "query {}: unsound model",
                    i
                );
            }
            SatStatus::Unsat => {}
            SatStatus::Unknown => panic!("query {} exceeded the brute-force budget", i),
        }
        if let Some(path) = &external {
            let engine = Engine::ExternalSmt { path: path.clone() };
            let ext = solve(q, &engine, Duration::from_secs(60)).unwrap();
            checked_externally += 1;
            if ext.status != brute.status {
                disagreements += 1;
                eprintln!(
                    "query {}: brute={:?} external={:?}",
                    i, brute.status, ext.status
                );
            }
            if let Some(model) = &ext.model {
                assert!(
                    model_satisfies(q, model).unwrap(),
                    "query {}: unsound external model",
                    i
                );
            }
        }
    }
    assert_eq!(disagreements, 0);
    let detail = if let Some(path) = external {
        format!(
            "50 queries, {} external checks via {}",
            checked_externally, path
        )
    } else {
        "50 queries, brute-only (no external solver installed)".to_string()
    };
    pass("7 backend-soundness", &detail);
}

/// Criterion 8: the feature matrix in JSON form matches the committed
/// fixture exactly, with the remainder/min/max/real conversions unsupported.
#[test]
fn criterion_8_feature_matrix() {
    let json = fpblast::features::render_json();
    let golden = include_str!("fixtures/features.json");
    assert_eq!(json, golden);
    for row in [
        "{\"feature\": \"Remainder operator\", \"supported\": false}",
        "{\"feature\": \"Minimum operator\", \"supported\": false}",
        "{\"feature\": \"Maximum operator\", \"supported\": false}",
        "{\"feature\": \"Convert to FP from real\", \"supported\": false}",
        "{\"feature\": \"Convert to real from FP\", \"supported\": false}",
        "{\"feature\": \"Fused multiply-add operator\", \"supported\": true}",
    ] {
        assert!(json.contains(row), "missing row: {}", row);
    }
    pass("8 feature-matrix", "matches the committed fixture");
}
