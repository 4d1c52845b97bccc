//! Property tests for the bit-vector layer: the brute-force checker agrees
//! with direct enumeration, the Tseitin conversion is equisatisfiable, and
//! the compiled evaluator matches the reference evaluator.

use num_bigint::BigUint;
use proptest::prelude::*;

use fpblast::bitvec::cnf::CnfFormula;
use fpblast::bitvec::expr::{self, BvExpr, BvOp};
use fpblast::bitvec::{
    brute_force_sat, eval, free_variables, to_cnf, BvValue, CompiledCircuit, Context, Env,
    SatStatus,
};

fn splitmix64(state: &mut u64) -> u64 {
    *state = state.wrapping_add(0x9E37_79B9_7F4A_7C15);
    let mut z = *state;
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Generate a random well-typed expression over a small set of variables.
/// Construction is seed-driven so proptest can shrink the seed.
struct Gen {
    state: u64,
    ctx: Context,
    vars: Vec<(String, u32)>,
}

impl Gen {
    fn new(seed: u64, var_widths: &[u32]) -> Gen {
        let mut ctx = Context::new();
        let vars: Vec<(String, u32)> = var_widths
            .iter()
            .enumerate()
            .map(|(i, w)| (format!("v{}", i), *w))
            .collect();
        for (name, w) in &vars {
            ctx.mk_var(name, *w).unwrap();
        }
        Gen {
            state: seed,
            ctx,
            vars,
        }
    }

    fn next(&mut self) -> u64 {
        splitmix64(&mut self.state)
    }

    fn gen_expr(&mut self, width: u32, depth: u32) -> BvExpr {
        if depth == 0 {
            return self.gen_leaf(width);
        }
        match self.next() % 14 {
            0 => self.gen_leaf(width),
            1 => {
                let a = self.gen_expr(width, depth - 1);
                expr::not(&a).unwrap()
            }
            2 => {
                let a = self.gen_expr(width, depth - 1);
                expr::neg(&a).unwrap()
            }
            3..=8 => {
                let op = match self.next() % 11 {
                    0 => BvOp::And,
                    1 => BvOp::Or,
                    2 => BvOp::Xor,
                    3 => BvOp::Add,
                    4 => BvOp::Sub,
                    5 => BvOp::Mul,
                    6 => BvOp::Udiv,
                    7 => BvOp::Urem,
                    8 => BvOp::Shl,
                    9 => BvOp::Lshr,
                    _ => BvOp::Ashr,
                };
                let a = self.gen_expr(width, depth - 1);
                let b = self.gen_expr(width, depth - 1);
                expr::apply(op, &[a, b]).unwrap()
            }
            9 => {
                // Comparison on a random inner width, then widen.
                let iw = 1 + (self.next() % 4) as u32;
                let op = match self.next() % 5 {
                    0 => BvOp::Eq,
                    1 => BvOp::Ult,
                    2 => BvOp::Ule,
                    3 => BvOp::Slt,
                    _ => BvOp::Sle,
                };
                let a = self.gen_expr(iw, depth - 1);
                let b = self.gen_expr(iw, depth - 1);
                let c = expr::apply(op, &[a, b]).unwrap();
                self.fit(&c, width)
            }
            10 => {
                let c = self.gen_expr(1, depth - 1);
                let t = self.gen_expr(width, depth - 1);
                let e = self.gen_expr(width, depth - 1);
                expr::ite(&c, &t, &e).unwrap()
            }
            11 => {
                // Concat two halves.
                if width < 2 {
                    self.gen_leaf(width)
                } else {
                    let lw = 1 + (self.next() % (width as u64 - 1)) as u32;
                    let a = self.gen_expr(lw, depth - 1);
                    let b = self.gen_expr(width - lw, depth - 1);
                    expr::concat(&a, &b).unwrap()
                }
            }
            12 => {
                // Extract from something wider.
                let extra = (self.next() % 3) as u32;
                let inner = self.gen_expr(width + extra, depth - 1);
                let lo = (self.next() % (extra as u64 + 1)) as u32;
                expr::extract(&inner, lo + width - 1, lo).unwrap()
            }
            _ => {
                let a = self.gen_expr(width, depth - 1);
                self.fit(&expr::redor(&a).unwrap(), width)
            }
        }
    }

    fn fit(&mut self, e: &BvExpr, width: u32) -> BvExpr {
        if e.width() == width {
            e.clone()
        } else if e.width() < width {
            expr::zero_extend(e, width - e.width()).unwrap()
        } else {
            expr::extract(e, width - 1, 0).unwrap()
        }
    }

    fn gen_leaf(&mut self, width: u32) -> BvExpr {
        // Prefer variables when one of the right width exists.
        let candidates: Vec<String> = self
            .vars
            .iter()
            .filter(|(_, w)| *w == width)
            .map(|(n, _)| n.clone())
            .collect();
        if !candidates.is_empty() && self.next() % 3 != 0 {
            let pick = (self.next() % candidates.len() as u64) as usize;
            return self.ctx.mk_var(&candidates[pick], width).unwrap();
        }
        let mask = if width >= 64 {
            u64::MAX
        } else {
            (1u64 << width) - 1
        };
        expr::mk_const(width, BigUint::from(self.next() & mask)).unwrap()
    }
}

/// CNF satisfiability by enumerating the input variables and closing the
/// Tseitin definitions with unit propagation. Aux variables introduced by
/// the transformation are functionally determined by the inputs, so
/// propagation either completes the model or hits a conflict.
fn cnf_sat_by_enumeration(cnf: &CnfFormula, inputs: &[(String, u32)]) -> bool {
    let total_bits: u32 = inputs.iter().map(|(_, w)| *w).sum();
    assert!(total_bits <= 16, "enumeration guard");
    'outer: for assignment in 0u64..(1 << total_bits) {
        // -1 false, 1 true, 0 unknown, indexed by variable (1-based).
        let mut value = vec![0i8; cnf.num_vars as usize + 1];
        let mut rest = assignment;
        for (name, w) in inputs {
            let (first, width) = cnf.var_map[name];
            for b in 0..*w {
                let v = (first + b) as usize;
                value[v] = if rest & 1 == 1 { 1 } else { -1 };
                rest >>= 1;
            }
            debug_assert_eq!(width, *w);
        }
        // Unit propagation to fixpoint.
        loop {
            let mut changed = false;
            for clause in &cnf.clauses {
                let mut unassigned: Option<i32> = None;
                let mut n_unassigned = 0;
                let mut satisfied = false;
                for &lit in clause {
                    let v = lit.unsigned_abs() as usize;
                    match value[v] as i32 * lit.signum() {
                        0 => {
                            n_unassigned += 1;
                            unassigned = Some(lit);
                        }
                        x if x > 0 => {
                            satisfied = true;
                            break;
                        }
                        _ => {}
                    }
                }
                if satisfied {
                    continue;
                }
                match n_unassigned {
                    0 => continue 'outer, // conflict under this assignment
                    1 => {
                        let lit = unassigned.unwrap();
                        value[lit.unsigned_abs() as usize] = lit.signum() as i8;
                        changed = true;
                    }
                    _ => {}
                }
            }
            if !changed {
                break;
            }
        }
        // All clauses must now be satisfied with no unknowns left relevant.
        let all_satisfied = cnf.clauses.iter().all(|clause| {
            clause
                .iter()
                .any(|&lit| value[lit.unsigned_abs() as usize] as i32 * lit.signum() > 0)
        });
        if all_satisfied {
            return true;
        }
    }
    false
}

fn eval_bit(e: &BvExpr, env: &Env) -> bool {
    eval(e, env).unwrap().value == BigUint::from(1u8)
}

fn enumerate_env(vars: &[(String, u32)], assignment: u64) -> Env {
    let mut env = Env::new();
    let mut rest = assignment;
    for (name, w) in vars {
        let mask = if *w >= 64 { u64::MAX } else { (1u64 << *w) - 1 };
        env.insert(name.clone(), BvValue::from_u64(*w, rest & mask));
        rest >>= *w;
    }
    env
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// brute_force_sat agrees with direct enumeration of eval, and to_cnf is
    /// equisatisfiable, for random width-1 expressions with <= 12 free bits.
    #[test]
    fn sat_and_cnf_agree_with_enumeration(seed in any::<u64>()) {
        let widths = [4u32, 4, 3, 1];
        let mut g = Gen::new(seed, &widths);
        let e = g.gen_expr(1, 4);

        let vars: Vec<(String, u32)> = free_variables(std::slice::from_ref(&e))
            .into_iter()
            .collect();
        let total_bits: u32 = vars.iter().map(|(_, w)| *w).sum();
        prop_assert!(total_bits <= 12);

        let mut expect_sat = false;
        for assignment in 0u64..(1 << total_bits) {
            let env = enumerate_env(&vars, assignment);
            if eval_bit(&e, &env) {
                expect_sat = true;
                break;
            }
        }

        let res = brute_force_sat(&e, 20).unwrap();
        prop_assert_eq!(
            res.status,
            if expect_sat { SatStatus::Sat } else { SatStatus::Unsat }
        );
        if let Some(model) = &res.model {
            let env: Env = model
                .iter()
                .map(|(k, v)| (k.clone(), v.clone()))
                .collect();
            prop_assert!(eval_bit(&e, &env), "model must satisfy the formula");
        }

        let cnf = to_cnf(&e).unwrap();
        // Variables that fold away during construction don't reach the CNF.
        let cnf_inputs: Vec<(String, u32)> = vars
            .iter()
            .filter(|(n, _)| cnf.var_map.contains_key(n))
            .cloned()
            .collect();
        let cnf_sat = cnf_sat_by_enumeration(&cnf, &cnf_inputs);
        prop_assert_eq!(cnf_sat, expect_sat, "Tseitin must be equisatisfiable");
    }

    /// The compiled u64 evaluator computes exactly what the reference
    /// big-integer evaluator computes.
    #[test]
    fn compiled_matches_reference(seed in any::<u64>()) {
        let widths = [8u32, 8, 5];
        let mut g = Gen::new(seed, &widths);
        let width = 1 + (seed % 11) as u32;
        let e = g.gen_expr(width, 4);

        let vars: Vec<(String, u32)> = free_variables(std::slice::from_ref(&e))
            .into_iter()
            .collect();
        let circuit = CompiledCircuit::compile(std::slice::from_ref(&e)).unwrap();
        let mut state = seed ^ 0xABCD;
        for _ in 0..32 {
            let assignment = splitmix64(&mut state);
            let env = enumerate_env(&vars, assignment);
            let reference = eval(&e, &env).unwrap();
            let inputs: Vec<u64> = circuit
                .inputs()
                .iter()
                .map(|(n, _, _)| u64::try_from(env[n].value.clone()).unwrap())
                .collect();
            let got = circuit.run_vec(&inputs)[0];
            prop_assert_eq!(BigUint::from(got), reference.value);
        }
    }

    /// Evaluation results always fit the node width.
    #[test]
    fn eval_width_soundness(seed in any::<u64>()) {
        let widths = [7u32, 3, 1];
        let mut g = Gen::new(seed, &widths);
        let width = 1 + (seed % 9) as u32;
        let e = g.gen_expr(width, 4);
        let vars: Vec<(String, u32)> = free_variables(std::slice::from_ref(&e))
            .into_iter()
            .collect();
        let mut state = seed;
        for _ in 0..16 {
            let env = enumerate_env(&vars, splitmix64(&mut state));
            let v = eval(&e, &env).unwrap();
            prop_assert!(v.value.bits() as u32 <= e.width());
        }
    }
}

#[test]
fn cnf_spec_examples() {
    // A single width-1 variable: one CNF variable, one unit clause.
    let mut ctx = Context::new();
    let a = ctx.mk_var("a", 1).unwrap();
    let cnf = to_cnf(&a).unwrap();
    assert_eq!(cnf.num_vars, 1);
    assert_eq!(cnf.clauses, vec![vec![1]]);
    assert!(cnf.to_dimacs().contains("p cnf 1 1"));
    assert!(cnf.to_dimacs().contains("1 0"));

    // and(a, b) is equisatisfiable with a ∧ b over all four assignments.
    let b = ctx.mk_var("b", 1).unwrap();
    let e = expr::and(&a, &b).unwrap();
    let cnf = to_cnf(&e).unwrap();
    let inputs = vec![("a".to_string(), 1u32), ("b".to_string(), 1u32)];
    assert!(cnf_sat_by_enumeration(&cnf, &inputs));

    // eq(x8, 0x38) is satisfiable with exactly one model.
    let x = ctx.mk_var("x", 8).unwrap();
    let e = expr::eq(&x, &expr::cst(8, 0x38)).unwrap();
    let cnf = to_cnf(&e).unwrap();
    let inputs = vec![("x".to_string(), 8u32)];
    assert!(cnf_sat_by_enumeration(&cnf, &inputs));
    let res = brute_force_sat(&e, 20).unwrap();
    assert_eq!(res.status, SatStatus::Sat);
    assert_eq!(res.model.unwrap()["x"], BvValue::from_u64(8, 0x38));

    // Contradiction: unsat on both routes.
    let e = expr::and(
        &expr::eq(&a, &expr::cst(1, 1)).unwrap(),
        &expr::eq(&a, &expr::cst(1, 0)).unwrap(),
    )
    .unwrap();
    let cnf = to_cnf(&e).unwrap();
    let inputs = vec![("a".to_string(), 1u32)];
    assert!(!cnf_sat_by_enumeration(&cnf, &inputs));
    assert_eq!(brute_force_sat(&e, 20).unwrap().status, SatStatus::Unsat);
}

#[test]
fn fp_constraint_brute_force() {
    // fp8 "x < +0" has a satisfying negative finite model.
    use fpblast::fpformat::{formats, fp_const, fp_from_ieeebv};
    use fpblast::fpops::{fp_compare, FpCmpKind};

    let f = formats::fp8();
    let mut ctx = Context::new();
    let xbits = ctx.mk_var("x", 8).unwrap();
    let x = fp_from_ieeebv(&xbits, f).unwrap();
    let zero = fp_const(BigUint::from(0u8), f);
    let q = fp_compare(FpCmpKind::Lt, &x, &zero).unwrap();
    let res = brute_force_sat(&q, 20).unwrap();
    assert_eq!(res.status, SatStatus::Sat);
    let model = res.model.unwrap();
    let picked = u64::try_from(model["x"].value.clone()).unwrap();
    // The model must be negative and finite nonzero.
    let v = fpblast::oracle::decode(&BigUint::from(picked), f);
    assert!(fpblast::oracle::compare(
        fpblast::oracle::CmpKind::Lt,
        &v,
        &fpblast::oracle::OracleValue::zero(false)
    ));
}

#[test]
fn spec_eval_examples() {
    use fpblast::bitvec::expr::cst;
    // mul wraps to the width.
    let e = expr::mul(&cst(4, 3), &cst(4, 5)).unwrap();
    assert_eq!(e.as_const().unwrap(), &BigUint::from(0xFu8));
    // Division by zero follows SMT-LIB: all ones.
    let e = expr::udiv(&cst(4, 7), &cst(4, 0)).unwrap();
    assert_eq!(e.as_const().unwrap(), &BigUint::from(0xFu8));
    let e = expr::urem(&cst(4, 7), &cst(4, 0)).unwrap();
    assert_eq!(e.as_const().unwrap(), &BigUint::from(7u8));
    // Arithmetic shift drags the sign bit.
    let e = expr::ashr(&cst(4, 0b1000), &cst(4, 1)).unwrap();
    assert_eq!(e.as_const().unwrap(), &BigUint::from(0b1100u8));
    // Wraparound addition.
    let e = expr::add(&cst(8, 0x01), &cst(8, 0xFF)).unwrap();
    assert_eq!(e.as_const().unwrap(), &BigUint::from(0u8));
    // Sign bit of 0x38 is 0.
    let e = expr::extract(&cst(8, 0x38), 7, 7).unwrap();
    assert_eq!(e.as_const().unwrap(), &BigUint::from(0u8));
    // OR-reduction.
    let e = expr::redor(&cst(4, 0b0010)).unwrap();
    assert_eq!(e.as_const().unwrap(), &BigUint::from(1u8));
}

#[test]
fn construction_errors() {
    // 65536 does not fit 16 bits.
    assert!(expr::mk_const(16, BigUint::from(65536u32)).is_err());
    let mut ctx = Context::new();
    let a = ctx.mk_var("x", 64).unwrap();
    let again = ctx.mk_var("x", 64).unwrap();
    assert!(a.same_expr(&again));
    assert!(ctx.mk_var("x", 32).is_err());
    assert!(ctx.mk_var("", 4).is_err());
    // Width mismatches are rejected.
    assert!(expr::add(&expr::cst(4, 1), &expr::cst(5, 1)).is_err());
    assert!(expr::extract(&expr::cst(4, 1), 4, 0).is_err());
    assert!(expr::ite(&expr::cst(2, 1), &expr::cst(4, 0), &expr::cst(4, 1)).is_err());
}

#[test]
fn budget_exceeded_is_unknown() {
    let mut ctx = Context::new();
    let x = ctx.mk_var("x", 30).unwrap();
    let q = expr::eq(&x, &expr::cst(30, 5)).unwrap();
    let res = brute_force_sat(&q, 20).unwrap();
    assert_eq!(res.status, SatStatus::Unknown);
    assert!(res.note.unwrap().contains("budget"));
}

#[test]
fn generator_produces_nontrivial_formulas() {
    // Guard against the eager constant folder collapsing everything the
    // generator builds: across seeds, most formulas must keep free bits.
    let mut with_vars = 0;
    let mut sat_count = 0;
    for seed in 0..100u64 {
        let widths = [4u32, 4, 3, 1];
        let mut g = Gen::new(seed, &widths);
        let e = g.gen_expr(1, 4);
        let vars = free_variables(std::slice::from_ref(&e));
        let bits: u32 = vars.values().sum();
        if bits > 0 {
            with_vars += 1;
        }
        if brute_force_sat(&e, 20).unwrap().status == SatStatus::Sat {
            sat_count += 1;
        }
    }
    assert!(
        with_vars >= 60,
        "only {}/100 formulas kept variables",
        with_vars
    );
    assert!(sat_count > 10 && sat_count < 100, "sat mix: {}", sat_count);
}

#[test]
fn expressions_are_shareable_across_threads() {
    let mut ctx = Context::new();
    let x = ctx.mk_var("x", 8).unwrap();
    let e = expr::add(&x, &expr::cst(8, 1)).unwrap();
    let handles: Vec<_> = (0..4)
        .map(|i| {
            let e = e.clone();
            std::thread::spawn(move || {
                let mut env = Env::new();
                env.insert("x".to_string(), BvValue::from_u64(8, i));
                u64::try_from(eval(&e, &env).unwrap().value).unwrap()
            })
        })
        .collect();
    for (i, h) in handles.into_iter().enumerate() {
        assert_eq!(h.join().unwrap(), i as u64 + 1);
    }
}

#[test]
fn cnf_structural_invariants() {
    // Literals stay within the declared variable count and no clause is
    // empty, across a spread of generated formulas.
    for seed in 0..40u64 {
        let widths = [4u32, 4, 3, 1];
        let mut g = Gen::new(seed, &widths);
        let e = g.gen_expr(1, 4);
        let cnf = to_cnf(&e).unwrap();
        for clause in &cnf.clauses {
            assert!(!clause.is_empty(), "empty clause at seed {}", seed);
            for &lit in clause {
                assert!(lit != 0);
                assert!(lit.unsigned_abs() <= cnf.num_vars, "literal out of range");
            }
        }
        for (first, width) in cnf.var_map.values() {
            assert!(*first >= 1 && first + width - 1 <= cnf.num_vars);
        }
    }
}
