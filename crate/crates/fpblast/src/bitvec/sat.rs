//! Exhaustive satisfiability checking for formulas with few free bits.

use std::collections::BTreeMap;

use num_bigint::BigUint;
use num_traits::One;

use super::eval::{eval, CompiledCircuit, Env};
use super::expr::{BvExpr, NodeKind};
use super::{BvError, BvValue};

/// Default enumeration budget in free variable bits (2^20 assignments).
pub const DEFAULT_SAT_BUDGET: u32 = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SatStatus {
    Sat,
    Unsat,
    Unknown,
}

impl std::fmt::Display for SatStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            SatStatus::Sat => write!(f, "sat"),
            SatStatus::Unsat => write!(f, "unsat"),
            SatStatus::Unknown => write!(f, "unknown"),
        }
    }
}

/// Outcome of a satisfiability check. A model is present exactly when the
/// status is sat; `note` carries diagnostics for unknown results.
#[derive(Debug, Clone)]
pub struct SatResult {
    pub status: SatStatus,
    pub model: Option<BTreeMap<String, BvValue>>,
    pub note: Option<String>,
}

impl SatResult {
    pub fn sat(model: BTreeMap<String, BvValue>) -> Self {
        SatResult {
            status: SatStatus::Sat,
            model: Some(model),
            note: None,
        }
    }

    pub fn unsat() -> Self {
        SatResult {
            status: SatStatus::Unsat,
            model: None,
            note: None,
        }
    }

    pub fn unknown(note: impl Into<String>) -> Self {
        SatResult {
            status: SatStatus::Unknown,
            model: None,
            note: Some(note.into()),
        }
    }
}

/// Free variables reachable from the expressions, sorted by name.
pub fn free_variables(exprs: &[BvExpr]) -> BTreeMap<String, u32> {
    let mut vars = BTreeMap::new();
    let mut seen = std::collections::HashSet::new();
    let mut stack: Vec<BvExpr> = exprs.to_vec();
    while let Some(e) = stack.pop() {
        if !seen.insert(e.id()) {
            continue;
        }
        match e.kind() {
            NodeKind::Var(name) => {
                vars.insert(name.clone(), e.width());
            }
            NodeKind::Op(_, children) => stack.extend(children.iter().cloned()),
            NodeKind::Const(_) => {}
        }
    }
    vars
}

fn chunk_bits(counter: u64, width: u32) -> u64 {
    if width >= 64 {
        counter
    } else {
        counter & ((1u64 << width) - 1)
    }
}

/// Enumerate every assignment to the free variables of a width-1 expression.
/// Returns sat with the first model found (counting up, variables packed in
/// lexicographic name order starting at the low bits), unsat when no
/// assignment satisfies, or unknown when the free bits exceed the budget.
pub fn brute_force_sat(expr: &BvExpr, budget: u32) -> Result<SatResult, BvError> {
    if expr.width() != 1 {
        return Err(BvError::NotBoolean { got: expr.width() });
    }
    let vars = free_variables(std::slice::from_ref(expr));
    let total_bits: u64 = vars.values().map(|w| *w as u64).sum();
    if total_bits > budget.min(62) as u64 {
        return Ok(SatResult::unknown(format!(
            "free variable bits {} exceed enumeration budget {}",
            total_bits, budget
        )));
    }
    let names: Vec<(String, u32)> = vars.into_iter().collect();

    // Fast path when every node fits in 64 bits.
    if let Ok(circuit) = CompiledCircuit::compile(std::slice::from_ref(expr)) {
        // Compiled inputs are sorted by name, same as `names`.
        debug_assert_eq!(circuit.inputs().len(), names.len());
        let mut values = vec![0u64; names.len()];
        let mut out = Vec::with_capacity(1);
        for assignment in 0..(1u64 << total_bits) {
            let mut rest = assignment;
            for (i, (_, w)) in names.iter().enumerate() {
                values[i] = chunk_bits(rest, *w);
                rest >>= w;
            }
            circuit.run(&values, &mut out);
            if out[0] == 1 {
                let model = names
                    .iter()
                    .zip(values.iter())
                    .map(|((n, w), v)| (n.clone(), BvValue::from_u64(*w, *v)))
                    .collect();
                return Ok(SatResult::sat(model));
            }
        }
        return Ok(SatResult::unsat());
    }

    // General path with big-integer evaluation.
    for assignment in 0..(1u64 << total_bits) {
        let mut env = Env::new();
        let mut rest = assignment;
        for (name, w) in &names {
            env.insert(
                name.clone(),
                BvValue::new(*w, BigUint::from(chunk_bits(rest, *w))),
            );
            rest >>= w;
        }
        let v = eval(expr, &env)?;
        if v.value.is_one() {
            let model = names
                .iter()
                .map(|(n, _)| (n.clone(), env[n].clone()))
                .collect();
            return Ok(SatResult::sat(model));
        }
    }
    Ok(SatResult::unsat())
}
