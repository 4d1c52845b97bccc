//! Concrete evaluation of expression DAGs.
//!
//! Two paths share the operator semantics in `expr::apply_op`:
//! `eval` walks the DAG once per call with big-integer values, while
//! `CompiledCircuit` flattens a DAG into an instruction list over `u64`
//! slots for the millions of evaluations a differential sweep performs.

use std::collections::HashMap;

use num_bigint::BigUint;
use num_traits::ToPrimitive;

use super::expr::{apply_op, BvExpr, BvOp, NodeKind};
use super::{BvError, BvValue};

/// Variable assignment for evaluation.
pub type Env = HashMap<String, BvValue>;

/// Evaluate an expression under an environment. Every reachable variable
/// must be assigned a value of its declared width.
pub fn eval(expr: &BvExpr, env: &Env) -> Result<BvValue, BvError> {
    let mut memo: HashMap<u64, BigUint> = HashMap::new();
    let value = eval_rec(expr, env, &mut memo)?;
    Ok(BvValue::new(expr.width(), value))
}

fn eval_rec(
    expr: &BvExpr,
    env: &Env,
    memo: &mut HashMap<u64, BigUint>,
) -> Result<BigUint, BvError> {
    if let Some(v) = memo.get(&expr.id()) {
        return Ok(v.clone());
    }
    let value = match expr.kind() {
        NodeKind::Const(v) => v.clone(),
        NodeKind::Var(name) => {
            let v = env
                .get(name)
                .ok_or_else(|| BvError::UnassignedVariable { name: name.clone() })?;
            if v.width != expr.width() {
                return Err(BvError::EnvWidthMismatch {
                    name: name.clone(),
                    expected: expr.width(),
                    got: v.width,
                });
            }
            v.value.clone()
        }
        NodeKind::Op(op, children) => {
            let mut args = Vec::with_capacity(children.len());
            for c in children {
                args.push(eval_rec(c, env, memo)?);
            }
            let arg_refs: Vec<&BigUint> = args.iter().collect();
            let widths: Vec<u32> = children.iter().map(|c| c.width()).collect();
            apply_op(*op, &arg_refs, &widths, expr.width())
        }
    };
    memo.insert(expr.id(), value.clone());
    Ok(value)
}

#[derive(Debug, Clone, Copy)]
enum Instr {
    Const {
        dst: usize,
        value: u64,
    },
    Load {
        dst: usize,
        var: usize,
    },
    Op1 {
        op: BvOp,
        dst: usize,
        a: usize,
        a_w: u32,
    },
    Op2 {
        op: BvOp,
        dst: usize,
        a: usize,
        b: usize,
        a_w: u32,
        b_w: u32,
    },
    Ite {
        dst: usize,
        c: usize,
        t: usize,
        e: usize,
    },
}

/// A DAG flattened to straight-line `u64` code. Restricted to expressions
/// whose every node is at most 64 bits wide.
#[derive(Debug)]
pub struct CompiledCircuit {
    instrs: Vec<Instr>,
    widths: Vec<u32>,
    /// Input order: (name, width, slot), sorted by name.
    inputs: Vec<(String, u32, usize)>,
    roots: Vec<(usize, u32)>,
    slot_count: usize,
}

impl CompiledCircuit {
    /// Flatten the given roots into one instruction list with shared
    /// subexpressions computed once.
    pub fn compile(roots: &[BvExpr]) -> Result<CompiledCircuit, BvError> {
        let mut slots: HashMap<u64, usize> = HashMap::new();
        let mut var_slots: HashMap<String, (u32, usize)> = HashMap::new();
        let mut instrs = Vec::new();
        let mut widths = Vec::new();
        let mut slot_count = 0usize;

        // Explicit post-order traversal; recursion depth on sqrt circuits is
        // proportional to the iteration count, which is fine, but deep chains
        // from ite cascades make an explicit stack safer.
        enum Task {
            Visit(BvExpr),
            Emit(BvExpr),
        }
        for root in roots {
            let mut stack = vec![Task::Visit(root.clone())];
            while let Some(task) = stack.pop() {
                match task {
                    Task::Visit(e) => {
                        if slots.contains_key(&e.id()) {
                            continue;
                        }
                        if e.width() > 64 {
                            return Err(BvError::TooWideForFastEval { width: e.width() });
                        }
                        match e.kind() {
                            NodeKind::Op(_, children) => {
                                let cs = children.clone();
                                stack.push(Task::Emit(e));
                                for c in cs {
                                    stack.push(Task::Visit(c));
                                }
                            }
                            _ => stack.push(Task::Emit(e)),
                        }
                    }
                    Task::Emit(e) => {
                        if slots.contains_key(&e.id()) {
                            continue;
                        }
                        let dst = slot_count;
                        slot_count += 1;
                        widths.push(e.width());
                        match e.kind() {
                            NodeKind::Const(v) => {
                                let value = v.to_u64().expect("width <= 64");
                                instrs.push(Instr::Const { dst, value });
                            }
                            NodeKind::Var(name) => {
                                let var_idx = var_slots.len();
                                let entry = var_slots
                                    .entry(name.clone())
                                    .or_insert((e.width(), var_idx));
                                instrs.push(Instr::Load { dst, var: entry.1 });
                            }
                            NodeKind::Op(op, children) => {
                                let cs: Vec<usize> =
                                    children.iter().map(|c| slots[&c.id()]).collect();
                                let cw: Vec<u32> = children.iter().map(|c| c.width()).collect();
                                let instr = match children.len() {
                                    1 => Instr::Op1 {
                                        op: *op,
                                        dst,
                                        a: cs[0],
                                        a_w: cw[0],
                                    },
                                    2 => Instr::Op2 {
                                        op: *op,
                                        dst,
                                        a: cs[0],
                                        b: cs[1],
                                        a_w: cw[0],
                                        b_w: cw[1],
                                    },
                                    3 => Instr::Ite {
                                        dst,
                                        c: cs[0],
                                        t: cs[1],
                                        e: cs[2],
                                    },
                                    n => unreachable!("operator arity {}", n),
                                };
                                instrs.push(instr);
                            }
                        }
                        slots.insert(e.id(), dst);
                    }
                }
            }
        }

        let mut inputs: Vec<(String, u32, usize)> = Vec::new();
        // Re-number input order by name so callers can bind positionally.
        let mut named: Vec<(String, u32)> = var_slots
            .iter()
            .map(|(n, (w, _))| (n.clone(), *w))
            .collect();
        named.sort();
        for (idx, (name, width)) in named.iter().enumerate() {
            inputs.push((name.clone(), *width, idx));
        }
        let rename: HashMap<&str, usize> = inputs
            .iter()
            .map(|(n, _, idx)| (n.as_str(), *idx))
            .collect();
        for instr in &mut instrs {
            if let Instr::Load { dst: _, var } = instr {
                // Recover the original name through var_slots.
                let name = var_slots
                    .iter()
                    .find(|(_, (_, idx))| idx == var)
                    .map(|(n, _)| n.as_str())
                    .expect("slot registered");
                *var = rename[name];
            }
        }

        let roots = roots.iter().map(|r| (slots[&r.id()], r.width())).collect();
        Ok(CompiledCircuit {
            instrs,
            widths,
            inputs,
            roots,
            slot_count,
        })
    }

    /// Input variables in binding order (sorted by name).
    pub fn inputs(&self) -> &[(String, u32, usize)] {
        &self.inputs
    }

    /// Evaluate with inputs bound positionally, matching `inputs()` order.
    /// Values must already be masked to their declared widths.
    pub fn run(&self, input_values: &[u64], out: &mut Vec<u64>) {
        debug_assert_eq!(input_values.len(), self.inputs.len());
        let mut slots = vec![0u64; self.slot_count];
        for instr in &self.instrs {
            match *instr {
                Instr::Const { dst, value } => slots[dst] = value,
                Instr::Load { dst, var } => slots[dst] = input_values[var],
                Instr::Op1 { op, dst, a, a_w } => {
                    slots[dst] = apply_op_u64(op, slots[a], 0, a_w, 0, self.widths[dst]);
                }
                Instr::Op2 {
                    op,
                    dst,
                    a,
                    b,
                    a_w,
                    b_w,
                } => {
                    slots[dst] = apply_op_u64(op, slots[a], slots[b], a_w, b_w, self.widths[dst]);
                }
                Instr::Ite { dst, c, t, e } => {
                    slots[dst] = if slots[c] == 1 { slots[t] } else { slots[e] };
                }
            }
        }
        out.clear();
        out.extend(self.roots.iter().map(|(slot, _)| slots[*slot]));
    }

    /// Convenience wrapper returning the root values.
    pub fn run_vec(&self, input_values: &[u64]) -> Vec<u64> {
        let mut out = Vec::with_capacity(self.roots.len());
        self.run(input_values, &mut out);
        out
    }
}

fn mask64(width: u32) -> u64 {
    if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    }
}

fn apply_op_u64(op: BvOp, a: u64, b: u64, a_w: u32, b_w: u32, out_w: u32) -> u64 {
    let m = mask64(out_w);
    match op {
        BvOp::Concat => (a << b_w) | b,
        BvOp::Extract { hi: _, lo } => (a >> lo) & m,
        BvOp::ZeroExtend { .. } => a,
        BvOp::SignExtend { .. } => {
            if a >> (a_w - 1) & 1 == 1 {
                a | (m ^ mask64(a_w))
            } else {
                a
            }
        }
        BvOp::Not => a ^ m,
        BvOp::And => a & b,
        BvOp::Or => a | b,
        BvOp::Xor => a ^ b,
        BvOp::Neg => a.wrapping_neg() & m,
        BvOp::Add => a.wrapping_add(b) & m,
        BvOp::Sub => a.wrapping_sub(b) & m,
        BvOp::Mul => a.wrapping_mul(b) & m,
        BvOp::Udiv => a.checked_div(b).unwrap_or(m),
        BvOp::Urem => a.checked_rem(b).unwrap_or(a),
        BvOp::Shl => {
            if b >= out_w as u64 {
                0
            } else {
                (a << b) & m
            }
        }
        BvOp::Lshr => {
            if b >= out_w as u64 {
                0
            } else {
                a >> b
            }
        }
        BvOp::Ashr => {
            let sign = a >> (a_w - 1) & 1 == 1;
            if b >= a_w as u64 {
                if sign {
                    mask64(a_w)
                } else {
                    0
                }
            } else {
                let shifted = a >> b;
                if sign {
                    shifted | (mask64(a_w) ^ (mask64(a_w) >> b))
                } else {
                    shifted
                }
            }
        }
        BvOp::Eq => (a == b) as u64,
        BvOp::Ult => (a < b) as u64,
        BvOp::Ule => (a <= b) as u64,
        BvOp::Slt => {
            let sa = sign_value(a, a_w);
            let sb = sign_value(b, b_w);
            (sa < sb) as u64
        }
        BvOp::Sle => {
            let sa = sign_value(a, a_w);
            let sb = sign_value(b, b_w);
            (sa <= sb) as u64
        }
        BvOp::Ite => unreachable!("ite handled separately"),
        BvOp::RedOr => (a != 0) as u64,
    }
}

fn sign_value(v: u64, width: u32) -> i64 {
    if width >= 64 {
        v as i64
    } else if v >> (width - 1) & 1 == 1 {
        (v | !mask64(width)) as i64
    } else {
        v as i64
    }
}
