//! Gate-level blasting of word-level expressions into equisatisfiable CNF
//! via the Tseitin transformation.
//!
//! Every expression node maps to a vector of DIMACS-style signed literals,
//! least significant bit first. Fresh definition variables are introduced
//! per gate; the resulting formula asserts the root expression equals 1.

use std::collections::{BTreeMap, HashMap};

use super::expr::{BvExpr, BvOp, NodeKind};
use super::BvError;

/// A DIMACS literal: positive for the variable, negative for its complement.
pub type Lit = i32;

/// CNF together with the mapping from input variables to literal ranges.
/// Bit 0 of a variable is the lowest CNF variable of its range.
#[derive(Debug, Clone)]
pub struct CnfFormula {
    pub num_vars: u32,
    pub clauses: Vec<Vec<Lit>>,
    pub var_map: BTreeMap<String, (u32, u32)>, // name -> (first var, width)
}

impl CnfFormula {
    /// Serialize in DIMACS format with a comment block describing the
    /// variable ranges.
    pub fn to_dimacs(&self) -> String {
        let mut s = String::new();
        for (name, (first, width)) in &self.var_map {
            s.push_str(&format!(
                "c var {} bits {} first {} (bit 0 = least significant)\n",
                name, width, first
            ));
        }
        s.push_str(&format!("p cnf {} {}\n", self.num_vars, self.clauses.len()));
        for clause in &self.clauses {
            for lit in clause {
                s.push_str(&format!("{} ", lit));
            }
            s.push_str("0\n");
        }
        s
    }
}

struct Blaster {
    next_var: u32,
    clauses: Vec<Vec<Lit>>,
    node_bits: HashMap<u64, Vec<Lit>>,
    var_map: BTreeMap<String, (u32, u32)>,
    true_lit: Option<Lit>,
}

impl Blaster {
    fn new() -> Self {
        Blaster {
            next_var: 0,
            clauses: Vec::new(),
            node_bits: HashMap::new(),
            var_map: BTreeMap::new(),
            true_lit: None,
        }
    }

    fn fresh(&mut self) -> Lit {
        self.next_var += 1;
        self.next_var as Lit
    }

    /// A literal constrained to be true, allocated on first use.
    fn lit_true(&mut self) -> Lit {
        match self.true_lit {
            Some(l) => l,
            None => {
                let l = self.fresh();
                self.clauses.push(vec![l]);
                self.true_lit = Some(l);
                l
            }
        }
    }

    fn lit_false(&mut self) -> Lit {
        -self.lit_true()
    }

    fn gate_and(&mut self, a: Lit, b: Lit) -> Lit {
        let g = self.fresh();
        self.clauses.push(vec![-g, a]);
        self.clauses.push(vec![-g, b]);
        self.clauses.push(vec![g, -a, -b]);
        g
    }

    fn gate_or(&mut self, a: Lit, b: Lit) -> Lit {
        let g = self.fresh();
        self.clauses.push(vec![g, -a]);
        self.clauses.push(vec![g, -b]);
        self.clauses.push(vec![-g, a, b]);
        g
    }

    fn gate_xor(&mut self, a: Lit, b: Lit) -> Lit {
        let g = self.fresh();
        self.clauses.push(vec![-g, a, b]);
        self.clauses.push(vec![-g, -a, -b]);
        self.clauses.push(vec![g, -a, b]);
        self.clauses.push(vec![g, a, -b]);
        g
    }

    /// g <-> if c then t else e
    fn gate_mux(&mut self, c: Lit, t: Lit, e: Lit) -> Lit {
        let g = self.fresh();
        self.clauses.push(vec![-g, -c, t]);
        self.clauses.push(vec![g, -c, -t]);
        self.clauses.push(vec![-g, c, e]);
        self.clauses.push(vec![g, c, -e]);
        g
    }

    fn or_reduce(&mut self, lits: &[Lit]) -> Lit {
        match lits.len() {
            0 => self.lit_false(),
            1 => lits[0],
            _ => {
                let g = self.fresh();
                for &l in lits {
                    self.clauses.push(vec![g, -l]);
                }
                let mut big = vec![-g];
                big.extend_from_slice(lits);
                self.clauses.push(big);
                g
            }
        }
    }

    fn and_reduce(&mut self, lits: &[Lit]) -> Lit {
        match lits.len() {
            0 => self.lit_true(),
            1 => lits[0],
            _ => {
                let g = self.fresh();
                for &l in lits {
                    self.clauses.push(vec![-g, l]);
                }
                let mut big = vec![g];
                big.extend(lits.iter().map(|l| -l));
                self.clauses.push(big);
                g
            }
        }
    }

    /// Full adder over literal vectors; returns (sum, carry_out).
    fn add_bits(&mut self, a: &[Lit], b: &[Lit], mut carry: Lit) -> (Vec<Lit>, Lit) {
        let mut sum = Vec::with_capacity(a.len());
        for (&x, &y) in a.iter().zip(b) {
            let xy = self.gate_xor(x, y);
            sum.push(self.gate_xor(xy, carry));
            let and1 = self.gate_and(x, y);
            let and2 = self.gate_and(xy, carry);
            carry = self.gate_or(and1, and2);
        }
        (sum, carry)
    }

    fn sub_bits(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Lit) {
        let nb: Vec<Lit> = b.iter().map(|l| -l).collect();
        let one = self.lit_true();
        self.add_bits(a, &nb, one)
    }

    /// Unsigned a < b: no carry out of a + ~b + 1.
    fn ult_bits(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let (_, carry) = self.sub_bits(a, b);
        -carry
    }

    fn eq_bits(&mut self, a: &[Lit], b: &[Lit]) -> Lit {
        let xnors: Vec<Lit> = a
            .iter()
            .zip(b)
            .map(|(&x, &y)| -self.gate_xor(x, y))
            .collect();
        self.and_reduce(&xnors)
    }

    fn mux_bits(&mut self, c: Lit, t: &[Lit], e: &[Lit]) -> Vec<Lit> {
        t.iter()
            .zip(e)
            .map(|(&x, &y)| self.gate_mux(c, x, y))
            .collect()
    }

    /// Barrel shifter. `fill` supplies the bit shifted in; `left` selects the
    /// direction. Amounts at or beyond the width produce all `oor_fill`.
    fn shift_bits(&mut self, a: &[Lit], amount: &[Lit], left: bool, fill: Lit) -> Vec<Lit> {
        let w = a.len();
        let mut cur = a.to_vec();
        let stages = 64 - (w as u64).leading_zeros(); // ceil(log2(w)) + 1
        for k in 0..stages.min(amount.len() as u32) {
            let dist = 1usize << k;
            let shifted: Vec<Lit> = (0..w)
                .map(|i| {
                    if left {
                        if i >= dist {
                            cur[i - dist]
                        } else {
                            fill
                        }
                    } else if i + dist < w {
                        cur[i + dist]
                    } else {
                        fill
                    }
                })
                .collect();
            cur = self.mux_bits(amount[k as usize], &shifted, &cur);
        }
        // Any amount bit at or above `stages` (i.e. amount >= 2^stages >= w),
        // or a low-bit combination >= w, shifts everything out. The staged
        // muxes already handle amounts < 2^stages; the leftover case is the
        // high bits.
        let high: Vec<Lit> = amount.iter().skip(stages as usize).copied().collect();
        if high.is_empty() {
            return cur;
        }
        let oor = self.or_reduce(&high);
        let fills = vec![fill; w];
        self.mux_bits(oor, &fills, &cur)
    }

    /// Restoring long division; returns (quotient, remainder) with the
    /// SMT-LIB convention for zero divisors folded in by the caller.
    /// The remainder register carries one extra bit: after the shift step
    /// it can reach 2^(w+1) - 3 before the restoring subtraction.
    fn divmod_bits(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
        let w = a.len();
        let f = self.lit_false();
        let mut b_ext = b.to_vec();
        b_ext.push(f);
        let mut rem = vec![f; w + 1];
        let mut quot = vec![f; w];
        for i in (0..w).rev() {
            // rem = (rem << 1) | a[i]; the dropped top bit is always 0
            // because the restored remainder is < b <= 2^w - 1.
            rem.rotate_right(1);
            rem[0] = a[i];
            let ge = -self.ult_bits(&rem, &b_ext);
            let (diff, _) = self.sub_bits(&rem, &b_ext);
            rem = self.mux_bits(ge, &diff, &rem);
            quot[i] = ge;
        }
        rem.truncate(w);
        (quot, rem)
    }

    fn blast(&mut self, expr: &BvExpr) -> Vec<Lit> {
        if let Some(bits) = self.node_bits.get(&expr.id()) {
            return bits.clone();
        }
        let w = expr.width() as usize;
        let bits: Vec<Lit> = match expr.kind() {
            NodeKind::Const(v) => (0..w)
                .map(|i| {
                    if v.bit(i as u64) {
                        self.lit_true()
                    } else {
                        self.lit_false()
                    }
                })
                .collect(),
            NodeKind::Var(name) => {
                let first = self.next_var + 1;
                let bits: Vec<Lit> = (0..w).map(|_| self.fresh()).collect();
                self.var_map.insert(name.clone(), (first, expr.width()));
                bits
            }
            NodeKind::Op(op, children) => {
                let cb: Vec<Vec<Lit>> = children.iter().map(|c| self.blast(c)).collect();
                match op {
                    BvOp::Concat => {
                        let mut bits = cb[1].clone();
                        bits.extend_from_slice(&cb[0]);
                        bits
                    }
                    BvOp::Extract { hi, lo } => cb[0][*lo as usize..=*hi as usize].to_vec(),
                    BvOp::ZeroExtend { extra } => {
                        let mut bits = cb[0].clone();
                        let f = self.lit_false();
                        bits.extend(std::iter::repeat_n(f, *extra as usize));
                        bits
                    }
                    BvOp::SignExtend { extra } => {
                        let mut bits = cb[0].clone();
                        let top = *bits.last().expect("width >= 1");
                        bits.extend(std::iter::repeat_n(top, *extra as usize));
                        bits
                    }
                    BvOp::Not => cb[0].iter().map(|l| -l).collect(),
                    BvOp::And => cb[0]
                        .iter()
                        .zip(&cb[1])
                        .map(|(&x, &y)| self.gate_and(x, y))
                        .collect(),
                    BvOp::Or => cb[0]
                        .iter()
                        .zip(&cb[1])
                        .map(|(&x, &y)| self.gate_or(x, y))
                        .collect(),
                    BvOp::Xor => cb[0]
                        .iter()
                        .zip(&cb[1])
                        .map(|(&x, &y)| self.gate_xor(x, y))
                        .collect(),
                    BvOp::Neg => {
                        let na: Vec<Lit> = cb[0].iter().map(|l| -l).collect();
                        let f = self.lit_false();
                        let zero = vec![f; w];
                        // ~a + 1, built as 0...0 + ~a with carry-in 1.
                        let one = self.lit_true();
                        let (sum, _) = self.add_bits(&na, &zero, one);
                        sum
                    }
                    BvOp::Add => {
                        let f = self.lit_false();
                        let (sum, _) = self.add_bits(&cb[0], &cb[1], f);
                        sum
                    }
                    BvOp::Sub => self.sub_bits(&cb[0], &cb[1]).0,
                    BvOp::Mul => {
                        let f = self.lit_false();
                        let mut acc = vec![f; w];
                        for i in 0..w {
                            let partial: Vec<Lit> = (0..w)
                                .map(|j| {
                                    if j < i {
                                        f
                                    } else {
                                        self.gate_and(cb[0][i], cb[1][j - i])
                                    }
                                })
                                .collect();
                            let (sum, _) = self.add_bits(&acc, &partial, f);
                            acc = sum;
                        }
                        acc
                    }
                    BvOp::Udiv | BvOp::Urem => {
                        let (q, r) = self.divmod_bits(&cb[0], &cb[1]);
                        let bzero = -self.or_reduce(&cb[1]);
                        match op {
                            BvOp::Udiv => {
                                let t = self.lit_true();
                                let ones = vec![t; w];
                                self.mux_bits(bzero, &ones, &q)
                            }
                            _ => self.mux_bits(bzero, &cb[0], &r),
                        }
                    }
                    BvOp::Shl => {
                        let f = self.lit_false();
                        self.shift_bits(&cb[0], &cb[1], true, f)
                    }
                    BvOp::Lshr => {
                        let f = self.lit_false();
                        self.shift_bits(&cb[0], &cb[1], false, f)
                    }
                    BvOp::Ashr => {
                        let top = *cb[0].last().expect("width >= 1");
                        self.shift_bits(&cb[0], &cb[1], false, top)
                    }
                    BvOp::Eq => vec![self.eq_bits(&cb[0], &cb[1])],
                    BvOp::Ult => vec![self.ult_bits(&cb[0], &cb[1])],
                    BvOp::Ule => vec![-self.ult_bits(&cb[1], &cb[0])],
                    BvOp::Slt => {
                        let (fa, fb) = self.flip_msb_pair(&cb[0], &cb[1]);
                        vec![self.ult_bits(&fa, &fb)]
                    }
                    BvOp::Sle => {
                        let (fa, fb) = self.flip_msb_pair(&cb[0], &cb[1]);
                        vec![-self.ult_bits(&fb, &fa)]
                    }
                    BvOp::Ite => self.mux_bits(cb[0][0], &cb[1], &cb[2]),
                    BvOp::RedOr => vec![self.or_reduce(&cb[0])],
                }
            }
        };
        debug_assert_eq!(bits.len(), w);
        self.node_bits.insert(expr.id(), bits.clone());
        bits
    }

    /// Signed comparison reduces to unsigned with the sign bits flipped.
    fn flip_msb_pair(&mut self, a: &[Lit], b: &[Lit]) -> (Vec<Lit>, Vec<Lit>) {
        let mut fa = a.to_vec();
        let mut fb = b.to_vec();
        let la = *fa.last().expect("width >= 1");
        let lb = *fb.last().expect("width >= 1");
        *fa.last_mut().unwrap() = -la;
        *fb.last_mut().unwrap() = -lb;
        (fa, fb)
    }
}

/// Convert a width-1 expression to an equisatisfiable CNF asserting the
/// expression evaluates to 1.
pub fn to_cnf(expr: &BvExpr) -> Result<CnfFormula, BvError> {
    to_cnf_all(std::slice::from_ref(expr))
}

/// Conjunction form: every expression (each width 1) is asserted true.
pub fn to_cnf_all(exprs: &[BvExpr]) -> Result<CnfFormula, BvError> {
    for e in exprs {
        if e.width() != 1 {
            return Err(BvError::NotBoolean { got: e.width() });
        }
    }
    let mut blaster = Blaster::new();
    for e in exprs {
        let root = blaster.blast(e);
        blaster.clauses.push(vec![root[0]]);
    }
    Ok(CnfFormula {
        num_vars: blaster.next_var,
        clauses: blaster.clauses,
        var_map: blaster.var_map,
    })
}
