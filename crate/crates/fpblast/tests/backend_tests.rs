//! Backend tests: emission shape and determinism, model parsing, the
//! external-process protocol (against mock solvers), and engine agreement
//! on generated queries.

use std::collections::BTreeMap;
use std::io::Write;
use std::time::Duration;

use num_bigint::BigUint;

use fpblast::backend::{
    emit_dimacs, emit_smtlib, model_satisfies, parse_dimacs_output, parse_smt_output, solve,
    Engine, Query,
};
use fpblast::bitvec::expr;
use fpblast::bitvec::{Context, SatStatus};
use fpblast::difftest::random_fp_queries;

fn simple_query() -> Query {
    let mut ctx = Context::new();
    let x = ctx.mk_var("x", 8).unwrap();
    let mut q = Query::new();
    q.assert(expr::eq(&x, &expr::cst(8, 0x38)).unwrap())
        .unwrap();
    q
}

#[test]
fn smtlib_emission_shape() {
    let q = simple_query();
    let text = emit_smtlib(&q);
    assert!(text.starts_with("(set-logic QF_BV)\n"));
    assert!(text.contains("(declare-const x (_ BitVec 8))"));
    assert!(text.contains("(assert (= (ite (= x #x38) #b1 #b0) #b1))"));
    assert!(text.ends_with("(check-sat)\n(get-model)\n"));

    // Empty query: only the frame.
    let empty = Query::new();
    assert_eq!(
        emit_smtlib(&empty),
        "(set-logic QF_BV)\n(check-sat)\n(get-model)\n"
    );
}

#[test]
fn emission_is_deterministic() {
    let build = || {
        let mut ctx = Context::new();
        let a = ctx.mk_var("a", 4).unwrap();
        let b = ctx.mk_var("b", 4).unwrap();
        let sum = expr::add(&a, &b).unwrap();
        // Shared subterm: used twice, must become a define-fun.
        let p = expr::mul(&sum, &sum).unwrap();
        let mut q = Query::new();
        q.assert(expr::ult(&p, &expr::cst(4, 9)).unwrap()).unwrap();
        q.assert(expr::eq(&sum, &expr::cst(4, 3)).unwrap()).unwrap();
        q
    };
    let t1 = emit_smtlib(&build());
    let t2 = emit_smtlib(&build());
    assert_eq!(t1, t2);
    assert!(
        t1.contains("define-fun t0"),
        "shared node must be named:\n{}",
        t1
    );

    let d1 = emit_dimacs(&build()).unwrap();
    let d2 = emit_dimacs(&build()).unwrap();
    assert_eq!(d1, d2);
}

#[test]
fn dimacs_emission_shape() {
    let mut ctx = Context::new();
    let a = ctx.mk_var("a", 1).unwrap();
    let mut q = Query::new();
    q.assert(a).unwrap();
    let text = emit_dimacs(&q).unwrap();
    assert!(text.contains("p cnf 1 1"));
    assert!(text.contains("1 0"));
    assert!(text.contains("c var a bits 1 first 1"));
}

#[test]
fn brute_engine_and_model_soundness() {
    let q = simple_query();
    let res = solve(&q, &Engine::default(), Duration::from_secs(5)).unwrap();
    assert_eq!(res.status, SatStatus::Sat);
    let model = res.model.unwrap();
    assert_eq!(model["x"].value, BigUint::from(0x38u8));
    assert!(model_satisfies(&q, &model).unwrap());

    // Unsatisfiable contradiction.
    let mut ctx = Context::new();
    let a = ctx.mk_var("a", 1).unwrap();
    let mut q = Query::new();
    q.assert(a.clone()).unwrap();
    q.assert(expr::not(&a).unwrap()).unwrap();
    let res = solve(&q, &Engine::default(), Duration::from_secs(5)).unwrap();
    assert_eq!(res.status, SatStatus::Unsat);
}

#[test]
fn declared_but_unconstrained_variables_get_model_values() {
    let mut q = simple_query();
    q.declare("spare", 4);
    let res = solve(&q, &Engine::default(), Duration::from_secs(5)).unwrap();
    let model = res.model.unwrap();
    assert!(model.contains_key("spare"));
    assert_eq!(model["spare"].width, 4);
}

#[test]
fn parse_smt_model_forms() {
    let q = simple_query();
    // Standard define-fun shape with binary, hex, and (_ bvN w) literals.
    for (text, expect) in [
        (
            "sat\n(model\n  (define-fun x () (_ BitVec 8) #x38)\n)\n",
            0x38u64,
        ),
        ("sat\n((define-fun x () (_ BitVec 8) #b00111000))", 0x38),
        ("sat\n(model (define-fun x () (_ BitVec 8) (_ bv56 8)))", 56),
    ] {
        let res = parse_smt_output(text, &q).unwrap();
        assert_eq!(res.status, SatStatus::Sat);
        assert_eq!(res.model.unwrap()["x"].value, BigUint::from(expect));
    }
    let res = parse_smt_output("unsat\n", &q).unwrap();
    assert_eq!(res.status, SatStatus::Unsat);
    let res = parse_smt_output("unknown\n", &q).unwrap();
    assert_eq!(res.status, SatStatus::Unknown);
    assert!(parse_smt_output("garbage\n", &q).is_err());
}

#[test]
fn parse_dimacs_model_forms() {
    let mut ctx = Context::new();
    let x = ctx.mk_var("x", 3).unwrap();
    let mut q = Query::new();
    q.assert(expr::eq(&x, &expr::cst(3, 0b101)).unwrap())
        .unwrap();
    let mut var_map = BTreeMap::new();
    var_map.insert("x".to_string(), (1u32, 3u32));

    // kissat/cadical style.
    let text = "c comment\ns SATISFIABLE\nv 1 -2 3 0\n";
    let res = parse_dimacs_output(text, &var_map, &q).unwrap();
    assert_eq!(res.status, SatStatus::Sat);
    assert_eq!(res.model.unwrap()["x"].value, BigUint::from(0b101u8));

    // Bare SAT + model line.
    let text = "SAT\n1 -2 3 0\n";
    let res = parse_dimacs_output(text, &var_map, &q).unwrap();
    assert_eq!(res.model.unwrap()["x"].value, BigUint::from(0b101u8));

    let res = parse_dimacs_output("s UNSATISFIABLE\n", &var_map, &q).unwrap();
    assert_eq!(res.status, SatStatus::Unsat);
}

/// Write an executable shell script for mocking a solver binary.
fn write_mock_solver(name: &str, body: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("fpblast-mock-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    let mut fh = std::fs::File::create(&path).unwrap();
    writeln!(fh, "#!/bin/sh").unwrap();
    writeln!(fh, "{}", body).unwrap();
    drop(fh);
    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        std::fs::set_permissions(&path, std::fs::Permissions::from_mode(0o755)).unwrap();
    }
    path
}

#[test]
fn external_smt_protocol_with_mock_solver() {
    let path = write_mock_solver(
        "mock-smt.sh",
        r#"echo sat
echo '(model (define-fun x () (_ BitVec 8) #x38))'"#,
    );
    let q = simple_query();
    let engine = Engine::ExternalSmt {
        path: path.to_string_lossy().to_string(),
    };
    let res = solve(&q, &engine, Duration::from_secs(5)).unwrap();
    assert_eq!(res.status, SatStatus::Sat);
    let model = res.model.unwrap();
    assert!(model_satisfies(&q, &model).unwrap());
}

#[test]
fn external_sat_protocol_with_mock_solver() {
    // The query is width-1 `a`: CNF variable 1 must be true.
    let mut ctx = Context::new();
    let a = ctx.mk_var("a", 1).unwrap();
    let mut q = Query::new();
    q.assert(a).unwrap();
    let path = write_mock_solver(
        "mock-sat.sh",
        r#"echo 's SATISFIABLE'
echo 'v 1 0'"#,
    );
    let engine = Engine::ExternalSat {
        path: path.to_string_lossy().to_string(),
    };
    let res = solve(&q, &engine, Duration::from_secs(5)).unwrap();
    assert_eq!(res.status, SatStatus::Sat);
    assert!(model_satisfies(&q, &res.model.unwrap()).unwrap());
}

#[test]
fn external_solver_timeout_is_unknown() {
    let path = write_mock_solver("mock-slow.sh", "sleep 10\necho sat");
    let q = simple_query();
    let engine = Engine::ExternalSmt {
        path: path.to_string_lossy().to_string(),
    };
    let res = solve(&q, &engine, Duration::from_millis(50)).unwrap();
    assert_eq!(res.status, SatStatus::Unknown);
    assert!(res.note.unwrap().contains("timed out"));
}

#[test]
fn missing_solver_is_an_error() {
    let q = simple_query();
    let engine = Engine::ExternalSmt {
        path: "/nonexistent/solver/binary".to_string(),
    };
    assert!(solve(&q, &engine, Duration::from_secs(1)).is_err());
}

#[test]
fn sat_model_round_trip_remains_sat() {
    // Asserting x = model(x) on top of the original query stays sat.
    let q = simple_query();
    let res = solve(&q, &Engine::default(), Duration::from_secs(5)).unwrap();
    let model = res.model.unwrap();
    let mut ctx = Context::new();
    let x = ctx.mk_var("x", 8).unwrap();
    let mut q2 = simple_query();
    q2.assert(expr::eq(&x, &expr::mk_const(8, model["x"].value.clone()).unwrap()).unwrap())
        .unwrap();
    let res2 = solve(&q2, &Engine::default(), Duration::from_secs(5)).unwrap();
    assert_eq!(res2.status, SatStatus::Sat);
}

#[test]
fn generated_queries_brute_models_are_sound() {
    let queries = random_fp_queries(50, 7);
    assert_eq!(queries.len(), 50);
    let mut sat = 0;
    let mut unsat = 0;
    for (i, q) in queries.iter().enumerate() {
        assert!(q.free_bits() <= 12, "query {} exceeds the budget", i);
        let res = solve(q, &Engine::default(), Duration::from_secs(10)).unwrap();
        match res.status {
            SatStatus::Sat => {
                sat += 1;
                assert!(
                    model_satisfies(q, &res.model.unwrap()).unwrap(),
                    "unsound model for query {}",
                    i
                );
            }
            SatStatus::Unsat => unsat += 1,
            SatStatus::Unknown => panic!("query {} exceeded budget", i),
        }
    }
    // The recipe mix should produce both outcomes.
    assert!(sat > 0 && unsat > 0, "sat={} unsat={}", sat, unsat);
}

#[test]
fn query_validation() {
    let mut ctx = Context::new();
    let x = ctx.mk_var("x", 8).unwrap();
    let mut q = Query::new();
    // Non-boolean assertion rejected.
    assert!(q.assert(x.clone()).is_err());
    // Conflicting declaration rejected.
    q.declare("x", 4);
    assert!(q.assert(expr::eq(&x, &expr::cst(8, 1)).unwrap()).is_err());
}
