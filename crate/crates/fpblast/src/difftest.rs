//! Differential sweeps: concrete evaluation of the blasted circuits against
//! the exact-arithmetic oracle, exhaustively for small formats and with
//! seeded sampling for larger ones.

use num_bigint::BigUint;
use thiserror::Error;

use crate::bitvec::{CompiledCircuit, Context};
use crate::fpformat::{formats, FpBits, FpFormat, RoundingMode};
use crate::fpops;
use crate::oracle::{self, OracleValue, TieBehavior};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum SweepError {
    #[error(
        "binary operators over {0} need --samples (exhaustive sweeps are limited to 8-bit formats)"
    )]
    NeedsSamples(FpFormat),
    #[error("format {0} is too wide for the fast evaluator")]
    TooWide(FpFormat),
    #[error("unknown op name `{0}`")]
    UnknownOp(String),
}

/// Operators the sweep can exercise.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepOp {
    Add,
    Sub,
    Mul,
    Div,
    Fma,
    Sqrt,
    Abs,
    Neg,
    Rti,
    Classify,
    Compare,
    ToSbv,
    ToUbv,
    ToFp,
    FromSbv,
    FromUbv,
}

impl SweepOp {
    pub const ALL: [SweepOp; 16] = [
        SweepOp::Add,
        SweepOp::Sub,
        SweepOp::Mul,
        SweepOp::Div,
        SweepOp::Fma,
        SweepOp::Sqrt,
        SweepOp::Abs,
        SweepOp::Neg,
        SweepOp::Rti,
        SweepOp::Classify,
        SweepOp::Compare,
        SweepOp::ToSbv,
        SweepOp::ToUbv,
        SweepOp::ToFp,
        SweepOp::FromSbv,
        SweepOp::FromUbv,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            SweepOp::Add => "add",
            SweepOp::Sub => "sub",
            SweepOp::Mul => "mul",
            SweepOp::Div => "div",
            SweepOp::Fma => "fma",
            SweepOp::Sqrt => "sqrt",
            SweepOp::Abs => "abs",
            SweepOp::Neg => "neg",
            SweepOp::Rti => "rti",
            SweepOp::Classify => "classify",
            SweepOp::Compare => "compare",
            SweepOp::ToSbv => "to_sbv",
            SweepOp::ToUbv => "to_ubv",
            SweepOp::ToFp => "to_fp",
            SweepOp::FromSbv => "from_sbv",
            SweepOp::FromUbv => "from_ubv",
        }
    }

    pub fn from_name(name: &str) -> Result<SweepOp, SweepError> {
        SweepOp::ALL
            .iter()
            .copied()
            .find(|op| op.name() == name)
            .ok_or_else(|| SweepError::UnknownOp(name.to_string()))
    }

    fn uses_rounding_mode(&self) -> bool {
        !matches!(
            self,
            SweepOp::Abs
                | SweepOp::Neg
                | SweepOp::Classify
                | SweepOp::Compare
                | SweepOp::ToSbv
                | SweepOp::ToUbv
        )
    }
}

#[derive(Debug, Clone)]
pub struct SweepOptions {
    pub format: FpFormat,
    pub ops: Vec<SweepOp>,
    pub modes: Vec<RoundingMode>,
    /// None: exhaustive (binary operators then require a small format).
    /// Some(n): n seeded samples per operator and mode.
    pub samples: Option<u64>,
    pub seed: u64,
    /// Harness self-test: flip the reference RNE tie rule for addition so a
    /// seeded defect must surface as mismatches.
    pub mutate_oracle_rne_ties: bool,
    /// Counterexamples to keep per operator.
    pub max_report: usize,
}

impl SweepOptions {
    pub fn new(format: FpFormat) -> Self {
        SweepOptions {
            format,
            ops: SweepOp::ALL.to_vec(),
            modes: RoundingMode::ALL.to_vec(),
            samples: None,
            seed: 0,
            mutate_oracle_rne_ties: false,
            max_report: 10,
        }
    }
}

#[derive(Debug, Clone)]
pub struct OpReport {
    pub op: String,
    pub cases: u64,
    pub mismatches: u64,
    pub examples: Vec<String>,
}

#[derive(Debug, Clone, Default)]
pub struct SweepReport {
    pub per_op: Vec<OpReport>,
}

impl SweepReport {
    pub fn total_cases(&self) -> u64 {
        self.per_op.iter().map(|r| r.cases).sum()
    }

    pub fn total_mismatches(&self) -> u64 {
        self.per_op.iter().map(|r| r.mismatches).sum()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for r in &self.per_op {
            out.push_str(&format!(
                "{:<10} {:>12} cases  {:>8} mismatches  {}\n",
                r.op,
                r.cases,
                r.mismatches,
                if r.mismatches == 0 { "ok" } else { "FAIL" }
            ));
            for ex in &r.examples {
                out.push_str(&format!("    {}\n", ex));
            }
        }
        out.push_str(&format!(
            "total: {} cases, {} mismatches\n",
            self.total_cases(),
            self.total_mismatches()
        ));
        out
    }
}

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

struct Tally {
    cases: u64,
    mismatches: u64,
    examples: Vec<String>,
    max_report: usize,
}

impl Tally {
    fn new(max_report: usize) -> Self {
        Tally {
            cases: 0,
            mismatches: 0,
            examples: Vec::new(),
            max_report,
        }
    }

    fn record(&mut self, ok: bool, detail: impl FnOnce() -> String) {
        self.cases += 1;
        if !ok {
            self.mismatches += 1;
            if self.examples.len() < self.max_report {
                self.examples.push(detail());
            }
        }
    }

    fn into_report(self, op: &str) -> OpReport {
        OpReport {
            op: op.to_string(),
            cases: self.cases,
            mismatches: self.mismatches,
            examples: self.examples,
        }
    }
}

fn decode_u64(bits: u64, f: FpFormat) -> OracleValue {
    oracle::decode(&BigUint::from(bits), f)
}

fn to_u64(b: &BigUint) -> u64 {
    u64::try_from(b.clone()).expect("fits u64 for sweep formats")
}

/// Pairs of operand patterns: the full square when exhaustive, otherwise
/// seeded samples.
fn operand_pairs(f: FpFormat, samples: Option<u64>, seed: u64) -> Vec<(u64, u64)> {
    let w = f.total_width();
    match samples {
        None => {
            let n = 1u64 << w;
            let mut v = Vec::with_capacity((n * n) as usize);
            for x in 0..n {
                for y in 0..n {
                    v.push((x, y));
                }
            }
            v
        }
        Some(count) => {
            let mask = (1u64 << w) - 1;
            let mut state = seed;
            (0..count)
                .map(|_| {
                    let r = splitmix64(&mut state);
                    (r & mask, (r >> w) & mask)
                })
                .collect()
        }
    }
}

fn singles(f: FpFormat, samples: Option<u64>, seed: u64) -> Vec<u64> {
    let w = f.total_width();
    if w <= 16 && samples.is_none() {
        (0..(1u64 << w)).collect()
    } else {
        let count = samples.unwrap_or(100_000);
        let mask = if w >= 64 { u64::MAX } else { (1u64 << w) - 1 };
        let mut state = seed ^ 0x5331;
        (0..count).map(|_| splitmix64(&mut state) & mask).collect()
    }
}

/// Build-and-compile helper: declares `x` (and `y`, `z` as needed) of the
/// format's width and compiles the circuit for fast evaluation.
fn compile_binary(
    f: FpFormat,
    rm: RoundingMode,
    op: SweepOp,
) -> Result<(CompiledCircuit, Vec<String>), SweepError> {
    let mut ctx = Context::new();
    let w = f.total_width();
    let x = fp_var(&mut ctx, "x", f);
    let y = fp_var(&mut ctx, "y", f);
    let expr = match op {
        SweepOp::Add => fpops::fp_add(rm, &x, &y).unwrap(),
        SweepOp::Sub => fpops::fp_sub(rm, &x, &y).unwrap(),
        SweepOp::Mul => fpops::fp_mul(rm, &x, &y).unwrap(),
        SweepOp::Div => fpops::fp_div(rm, &x, &y).unwrap(),
        _ => unreachable!("not a binary arithmetic op"),
    };
    let circuit = CompiledCircuit::compile(std::slice::from_ref(expr.bits()))
        .map_err(|_| SweepError::TooWide(f))?;
    let names = circuit.inputs().iter().map(|(n, _, _)| n.clone()).collect();
    let _ = w;
    Ok((circuit, names))
}

fn fp_var(ctx: &mut Context, name: &str, f: FpFormat) -> FpBits {
    let bits = ctx.mk_var(name, f.total_width()).unwrap();
    crate::fpformat::fp_from_ieeebv(&bits, f).unwrap()
}

/// Bind positional inputs by name. The compiled input order is sorted by
/// name; this maps logical operands onto it.
fn bind(names: &[String], values: &[(&str, u64)]) -> Vec<u64> {
    names
        .iter()
        .map(|n| {
            values
                .iter()
                .find(|(name, _)| name == n)
                .map(|(_, v)| *v)
                .unwrap_or(0)
        })
        .collect()
}

/// Run the configured sweeps. Each operator is compiled once per rounding
/// mode and evaluated over the operand set; the oracle provides the expected
/// pattern for every case.
pub fn run_sweep(opts: &SweepOptions) -> Result<SweepReport, SweepError> {
    let f = opts.format;
    if f.total_width() > 32 {
        return Err(SweepError::TooWide(f));
    }
    let binary_exhaustive_ok = f.total_width() <= 8;
    let mut report = SweepReport::default();

    for op in &opts.ops {
        let modes: &[RoundingMode] = if op.uses_rounding_mode() {
            &opts.modes
        } else {
            &[RoundingMode::Rne]
        };
        let mut tally = Tally::new(opts.max_report);
        match op {
            SweepOp::Add | SweepOp::Sub | SweepOp::Mul | SweepOp::Div => {
                if opts.samples.is_none() && !binary_exhaustive_ok {
                    return Err(SweepError::NeedsSamples(f));
                }
                let pairs = operand_pairs(f, opts.samples, opts.seed);
                for &rm in modes {
                    let (circuit, names) = compile_binary(f, rm, *op)?;
                    let mut out = Vec::with_capacity(1);
                    for &(xv, yv) in &pairs {
                        let inputs = bind(&names, &[("x", xv), ("y", yv)]);
                        circuit.run(&inputs, &mut out);
                        let got = out[0];
                        let dx = decode_u64(xv, f);
                        let dy = decode_u64(yv, f);
                        let ties = if opts.mutate_oracle_rne_ties && *op == SweepOp::Add {
                            TieBehavior::ToOddSelfTest
                        } else {
                            TieBehavior::ToEven
                        };
                        let want = match op {
                            SweepOp::Add => oracle::round_add(&dx, &dy, f, rm, ties),
                            SweepOp::Sub => oracle::sub(&dx, &dy, f, rm),
                            SweepOp::Mul => oracle::mul(&dx, &dy, f, rm),
                            SweepOp::Div => oracle::div(&dx, &dy, f, rm),
                            _ => unreachable!(),
                        };
                        tally.record(got == to_u64(&want), || {
                            format!(
                                "{} rm={} x={:#06x} y={:#06x} expected={:#06x} got={:#06x}",
                                op.name(),
                                rm,
                                xv,
                                yv,
                                to_u64(&want),
                                got
                            )
                        });
                    }
                }
            }
            SweepOp::Fma => {
                let count = opts.samples.unwrap_or(100_000);
                let w = f.total_width();
                let mask = (1u64 << w) - 1;
                for &rm in modes {
                    let mut ctx = Context::new();
                    let x = fp_var(&mut ctx, "x", f);
                    let y = fp_var(&mut ctx, "y", f);
                    let z = fp_var(&mut ctx, "z", f);
                    let expr = fpops::fp_fma(rm, &x, &y, &z).unwrap();
                    let circuit = CompiledCircuit::compile(std::slice::from_ref(expr.bits()))
                        .map_err(|_| SweepError::TooWide(f))?;
                    let names: Vec<String> =
                        circuit.inputs().iter().map(|(n, _, _)| n.clone()).collect();
                    let mut state = opts.seed ^ (rm.code() << 8);
                    let mut out = Vec::with_capacity(1);
                    for _ in 0..count {
                        let r = splitmix64(&mut state);
                        let r2 = splitmix64(&mut state);
                        let (xv, yv, zv) = (r & mask, (r >> w) & mask, r2 & mask);
                        let inputs = bind(&names, &[("x", xv), ("y", yv), ("z", zv)]);
                        circuit.run(&inputs, &mut out);
                        let got = out[0];
                        let want = oracle::fma(
                            &decode_u64(xv, f),
                            &decode_u64(yv, f),
                            &decode_u64(zv, f),
                            f,
                            rm,
                        );
                        tally.record(got == to_u64(&want), || {
                            format!(
                                "fma rm={} x={:#06x} y={:#06x} z={:#06x} expected={:#06x} got={:#06x}",
                                rm, xv, yv, zv, to_u64(&want), got
                            )
                        });
                    }
                }
            }
            SweepOp::Sqrt | SweepOp::Rti => {
                let inputs_set = singles(f, opts.samples, opts.seed);
                for &rm in modes {
                    let mut ctx = Context::new();
                    let x = fp_var(&mut ctx, "x", f);
                    let expr = match op {
                        SweepOp::Sqrt => fpops::fp_sqrt(rm, &x),
                        _ => fpops::fp_round_to_integral(rm, &x),
                    };
                    let circuit = CompiledCircuit::compile(std::slice::from_ref(expr.bits()))
                        .map_err(|_| SweepError::TooWide(f))?;
                    let mut out = Vec::with_capacity(1);
                    for &xv in &inputs_set {
                        circuit.run(&[xv], &mut out);
                        let got = out[0];
                        let dx = decode_u64(xv, f);
                        let want = match op {
                            SweepOp::Sqrt => oracle::sqrt(&dx, f, rm),
                            _ => oracle::round_to_integral(&dx, f, rm),
                        };
                        tally.record(got == to_u64(&want), || {
                            format!(
                                "{} rm={} x={:#06x} expected={:#06x} got={:#06x}",
                                op.name(),
                                rm,
                                xv,
                                to_u64(&want),
                                got
                            )
                        });
                    }
                }
            }
            SweepOp::Abs | SweepOp::Neg => {
                let inputs_set = singles(f, opts.samples, opts.seed);
                let mut ctx = Context::new();
                let x = fp_var(&mut ctx, "x", f);
                let expr = match op {
                    SweepOp::Abs => fpops::fp_abs(&x),
                    _ => fpops::fp_neg(&x),
                };
                let circuit = CompiledCircuit::compile(std::slice::from_ref(expr.bits()))
                    .map_err(|_| SweepError::TooWide(f))?;
                let mut out = Vec::with_capacity(1);
                for &xv in &inputs_set {
                    circuit.run(&[xv], &mut out);
                    let got = out[0];
                    let big = BigUint::from(xv);
                    let want = match op {
                        SweepOp::Abs => oracle::abs_bits(&big, f),
                        _ => oracle::neg_bits(&big, f),
                    };
                    tally.record(got == to_u64(&want), || {
                        format!(
                            "{} x={:#06x} expected={:#06x} got={:#06x}",
                            op.name(),
                            xv,
                            to_u64(&want),
                            got
                        )
                    });
                }
            }
            SweepOp::Classify => {
                let inputs_set = singles(f, opts.samples, opts.seed);
                let kinds = [
                    (fpops::FpClassKind::Normal, oracle::ClassKind::Normal),
                    (fpops::FpClassKind::Subnormal, oracle::ClassKind::Subnormal),
                    (fpops::FpClassKind::Zero, oracle::ClassKind::Zero),
                    (fpops::FpClassKind::Inf, oracle::ClassKind::Inf),
                    (fpops::FpClassKind::Nan, oracle::ClassKind::Nan),
                    (fpops::FpClassKind::Negative, oracle::ClassKind::Negative),
                    (fpops::FpClassKind::Positive, oracle::ClassKind::Positive),
                ];
                let mut ctx = Context::new();
                let x = fp_var(&mut ctx, "x", f);
                let exprs: Vec<_> = kinds.iter().map(|(fk, _)| fpops::fp_is(*fk, &x)).collect();
                let circuit =
                    CompiledCircuit::compile(&exprs).map_err(|_| SweepError::TooWide(f))?;
                let mut out = Vec::with_capacity(kinds.len());
                for &xv in &inputs_set {
                    circuit.run(&[xv], &mut out);
                    let big = BigUint::from(xv);
                    for (i, (fk, ok)) in kinds.iter().enumerate() {
                        let want = oracle::classify(*ok, &big, f);
                        tally.record(out[i] == want as u64, || {
                            format!(
                                "classify {:?} x={:#06x} expected={} got={}",
                                fk, xv, want as u64, out[i]
                            )
                        });
                    }
                }
            }
            SweepOp::Compare => {
                let kinds = [
                    (fpops::FpCmpKind::Lt, oracle::CmpKind::Lt),
                    (fpops::FpCmpKind::Le, oracle::CmpKind::Le),
                    (fpops::FpCmpKind::Gt, oracle::CmpKind::Gt),
                    (fpops::FpCmpKind::Ge, oracle::CmpKind::Ge),
                    (fpops::FpCmpKind::Eq, oracle::CmpKind::Eq),
                ];
                if opts.samples.is_none() && !binary_exhaustive_ok {
                    return Err(SweepError::NeedsSamples(f));
                }
                let pairs = operand_pairs(f, opts.samples, opts.seed);
                let mut ctx = Context::new();
                let x = fp_var(&mut ctx, "x", f);
                let y = fp_var(&mut ctx, "y", f);
                let exprs: Vec<_> = kinds
                    .iter()
                    .map(|(fk, _)| fpops::fp_compare(*fk, &x, &y).unwrap())
                    .collect();
                let circuit =
                    CompiledCircuit::compile(&exprs).map_err(|_| SweepError::TooWide(f))?;
                let names: Vec<String> =
                    circuit.inputs().iter().map(|(n, _, _)| n.clone()).collect();
                let mut out = Vec::with_capacity(kinds.len());
                for &(xv, yv) in &pairs {
                    let inputs = bind(&names, &[("x", xv), ("y", yv)]);
                    circuit.run(&inputs, &mut out);
                    let dx = decode_u64(xv, f);
                    let dy = decode_u64(yv, f);
                    for (i, (fk, ok)) in kinds.iter().enumerate() {
                        let want = oracle::compare(*ok, &dx, &dy);
                        tally.record(out[i] == want as u64, || {
                            format!(
                                "compare {:?} x={:#06x} y={:#06x} expected={} got={}",
                                fk, xv, yv, want as u64, out[i]
                            )
                        });
                    }
                }
            }
            SweepOp::ToSbv | SweepOp::ToUbv => {
                let signed = *op == SweepOp::ToSbv;
                let inputs_set = singles(f, opts.samples, opts.seed);
                for width in [4u32, 8] {
                    let mut ctx = Context::new();
                    let x = fp_var(&mut ctx, "x", f);
                    let expr = if signed {
                        fpops::fp_to_sbv(&mut ctx, &x, width).unwrap()
                    } else {
                        fpops::fp_to_ubv(&mut ctx, &x, width).unwrap()
                    };
                    let circuit = CompiledCircuit::compile(std::slice::from_ref(&expr))
                        .map_err(|_| SweepError::TooWide(f))?;
                    let names: Vec<String> =
                        circuit.inputs().iter().map(|(n, _, _)| n.clone()).collect();
                    // Two sentinel values prove the invalid path routes to
                    // the unconstrained fresh variable.
                    let sentinels = [0u64, (1u64 << width) - 1];
                    let mut out = Vec::with_capacity(1);
                    for &xv in &inputs_set {
                        let want = oracle::to_int(&decode_u64(xv, f), width, signed);
                        let mut ok = true;
                        let mut got_report = 0u64;
                        for &s in &sentinels {
                            let inputs = bind(&names, &[("x", xv), ("fpcast_fresh_0", s)]);
                            circuit.run(&inputs, &mut out);
                            got_report = out[0];
                            let expect = match &want {
                                Some(v) => to_u64(v),
                                None => s,
                            };
                            ok &= out[0] == expect;
                        }
                        tally.record(ok, || {
                            format!(
                                "{} w={} x={:#06x} expected={:?} got={:#x}",
                                op.name(),
                                width,
                                xv,
                                want.as_ref().map(to_u64),
                                got_report
                            )
                        });
                    }
                }
            }
            SweepOp::ToFp => {
                // Convert to a partner format and back-convert its patterns.
                let partner = if f == formats::fp16() {
                    formats::fp8()
                } else {
                    formats::fp16()
                };
                for &rm in modes {
                    for (src, dst) in [(f, partner), (partner, f)] {
                        let mut ctx = Context::new();
                        let x = fp_var(&mut ctx, "x", src);
                        let expr = fpops::fp_to_fp(&x, dst, rm);
                        let circuit = CompiledCircuit::compile(std::slice::from_ref(expr.bits()))
                            .map_err(|_| SweepError::TooWide(f))?;
                        let mut out = Vec::with_capacity(1);
                        for xv in singles(src, opts.samples, opts.seed) {
                            circuit.run(&[xv], &mut out);
                            let want = oracle::to_fp(&decode_u64(xv, src), dst, rm);
                            tally.record(out[0] == to_u64(&want), || {
                                format!(
                                    "to_fp {}->{} rm={} x={:#06x} expected={:#06x} got={:#06x}",
                                    src,
                                    dst,
                                    rm,
                                    xv,
                                    to_u64(&want),
                                    out[0]
                                )
                            });
                        }
                    }
                }
            }
            SweepOp::FromSbv | SweepOp::FromUbv => {
                let signed = *op == SweepOp::FromSbv;
                for &rm in modes {
                    for width in [4u32, 8] {
                        let mut ctx = Context::new();
                        let bv = ctx.mk_var("n", width).unwrap();
                        let expr = fpops::sbv_to_fp(&bv, signed, f, rm);
                        let circuit = CompiledCircuit::compile(std::slice::from_ref(expr.bits()))
                            .map_err(|_| SweepError::TooWide(f))?;
                        let mut out = Vec::with_capacity(1);
                        for nv in 0u64..(1 << width) {
                            circuit.run(&[nv], &mut out);
                            let want = oracle::from_int(&BigUint::from(nv), width, signed, f, rm);
                            tally.record(out[0] == to_u64(&want), || {
                                format!(
                                    "{} w={} rm={} n={:#x} expected={:#06x} got={:#06x}",
                                    op.name(),
                                    width,
                                    rm,
                                    nv,
                                    to_u64(&want),
                                    out[0]
                                )
                            });
                        }
                    }
                }
            }
        }
        report.per_op.push(tally.into_report(op.name()));
    }
    Ok(report)
}

/// Small randomized constraint queries over one fp8 variable (and sometimes
/// a 4-bit integer variable), each within a 12-free-bit budget so the
/// brute-force engine can decide them. Used to cross-check engines.
pub fn random_fp_queries(count: usize, seed: u64) -> Vec<crate::backend::Query> {
    use crate::backend::Query;
    use crate::fpformat::{fp_const, fp_from_ieeebv};
    use crate::ir;

    let f = formats::fp8();
    let mut state = seed ^ 0xF00D;
    let mut queries = Vec::with_capacity(count);
    for _ in 0..count {
        let mut ctx = Context::new();
        let xbits = ctx.mk_var("x", 8).unwrap();
        let x = fp_from_ieeebv(&xbits, f).unwrap();
        let mut q = Query::new();
        q.declare("x", 8);

        let n_asserts = 1 + (splitmix64(&mut state) % 2) as usize;
        for _ in 0..n_asserts {
            let c = fp_const(BigUint::from(splitmix64(&mut state) & 0xFF), f);
            let assertion = match splitmix64(&mut state) % 6 {
                0 => {
                    let kind = match splitmix64(&mut state) % 5 {
                        0 => fpops::FpCmpKind::Lt,
                        1 => fpops::FpCmpKind::Le,
                        2 => fpops::FpCmpKind::Gt,
                        3 => fpops::FpCmpKind::Ge,
                        _ => fpops::FpCmpKind::Eq,
                    };
                    fpops::fp_compare(kind, &x, &c).unwrap()
                }
                1 => {
                    let kind = match splitmix64(&mut state) % 4 {
                        0 => fpops::FpClassKind::Normal,
                        1 => fpops::FpClassKind::Subnormal,
                        2 => fpops::FpClassKind::Nan,
                        _ => fpops::FpClassKind::Negative,
                    };
                    let p = fpops::fp_is(kind, &x);
                    if splitmix64(&mut state).is_multiple_of(2) {
                        p
                    } else {
                        ir::b_not(&p)
                    }
                }
                2 => {
                    // The sum with a constant hits a chosen pattern.
                    let rm = RoundingMode::ALL[(splitmix64(&mut state) % 5) as usize];
                    let sum = fpops::fp_add(rm, &x, &c).unwrap();
                    let target = fp_const(BigUint::from(splitmix64(&mut state) & 0xFF), f);
                    fpops::fp_compare(fpops::FpCmpKind::Eq, &sum, &target).unwrap()
                }
                3 => {
                    let prod = fpops::fp_mul(RoundingMode::Rne, &x, &x).unwrap();
                    fpops::fp_compare(fpops::FpCmpKind::Le, &prod, &c).unwrap()
                }
                4 => {
                    // A 4-bit integer that must convert onto x.
                    let n = ctx.mk_var("n", 4).unwrap();
                    q.declare("n", 4);
                    let as_fp = fpops::sbv_to_fp(&n, false, f, RoundingMode::Rne);
                    fpops::fp_compare(fpops::FpCmpKind::Eq, &as_fp, &x).unwrap()
                }
                _ => {
                    let sq = fpops::fp_sqrt(RoundingMode::Rne, &x);
                    fpops::fp_compare(fpops::FpCmpKind::Ge, &sq, &c).unwrap()
                }
            };
            q.assert(assertion).unwrap();
        }
        queries.push(q);
    }
    queries
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fp8_add_rne_exhaustive_clean() {
        let mut opts = SweepOptions::new(formats::fp8());
        opts.ops = vec![SweepOp::Add];
        opts.modes = vec![RoundingMode::Rne];
        let report = run_sweep(&opts).unwrap();
        assert_eq!(report.total_cases(), 65536);
        assert_eq!(report.total_mismatches(), 0, "\n{}", report.render());
    }

    #[test]
    fn harness_detects_seeded_defect() {
        let mut opts = SweepOptions::new(formats::fp8());
        opts.ops = vec![SweepOp::Add];
        opts.modes = vec![RoundingMode::Rne];
        opts.mutate_oracle_rne_ties = true;
        let report = run_sweep(&opts).unwrap();
        assert!(
            report.total_mismatches() > 0,
            "mutated tie rule must produce mismatches"
        );
    }

    #[test]
    fn fp16_binary_needs_samples() {
        let mut opts = SweepOptions::new(formats::fp16());
        opts.ops = vec![SweepOp::Mul];
        assert!(matches!(run_sweep(&opts), Err(SweepError::NeedsSamples(_))));
    }

    #[test]
    fn fp8_conversions_exhaustive_clean() {
        let mut opts = SweepOptions::new(formats::fp8());
        opts.ops = vec![
            SweepOp::ToSbv,
            SweepOp::ToUbv,
            SweepOp::FromSbv,
            SweepOp::FromUbv,
            SweepOp::ToFp,
        ];
        let report = run_sweep(&opts).unwrap();
        assert_eq!(report.total_mismatches(), 0, "\n{}", report.render());
    }
}
