//! The expression IR: immutable DAG nodes with a fixed width, built through
//! width-checked constructors that eagerly fold constants.

use std::collections::HashMap;
use std::fmt;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use num_bigint::BigUint;
use num_traits::{One, Zero};

use super::BvError;

static NEXT_NODE_ID: AtomicU64 = AtomicU64::new(0);

fn fresh_id() -> u64 {
    NEXT_NODE_ID.fetch_add(1, Ordering::Relaxed)
}

/// Word-level operators. Structural payloads (extract bounds, extension
/// amounts) live on the variant so an operator application is self-contained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BvOp {
    Concat,
    Extract { hi: u32, lo: u32 },
    ZeroExtend { extra: u32 },
    SignExtend { extra: u32 },
    Not,
    And,
    Or,
    Xor,
    Neg,
    Add,
    Sub,
    Mul,
    Udiv,
    Urem,
    Shl,
    Lshr,
    Ashr,
    Eq,
    Ult,
    Ule,
    Slt,
    Sle,
    Ite,
    RedOr,
}

impl BvOp {
    pub fn name(&self) -> &'static str {
        match self {
            BvOp::Concat => "concat",
            BvOp::Extract { .. } => "extract",
            BvOp::ZeroExtend { .. } => "zero_extend",
            BvOp::SignExtend { .. } => "sign_extend",
            BvOp::Not => "not",
            BvOp::And => "and",
            BvOp::Or => "or",
            BvOp::Xor => "xor",
            BvOp::Neg => "neg",
            BvOp::Add => "add",
            BvOp::Sub => "sub",
            BvOp::Mul => "mul",
            BvOp::Udiv => "udiv",
            BvOp::Urem => "urem",
            BvOp::Shl => "shl",
            BvOp::Lshr => "lshr",
            BvOp::Ashr => "ashr",
            BvOp::Eq => "eq",
            BvOp::Ult => "ult",
            BvOp::Ule => "ule",
            BvOp::Slt => "slt",
            BvOp::Sle => "sle",
            BvOp::Ite => "ite",
            BvOp::RedOr => "redor",
        }
    }

    fn arity(&self) -> usize {
        match self {
            BvOp::Extract { .. }
            | BvOp::ZeroExtend { .. }
            | BvOp::SignExtend { .. }
            | BvOp::Not
            | BvOp::Neg
            | BvOp::RedOr => 1,
            BvOp::Ite => 3,
            _ => 2,
        }
    }

    /// Result width for the given operand widths, or a typing error.
    pub fn result_width(&self, widths: &[u32]) -> Result<u32, BvError> {
        let name = self.name();
        if widths.len() != self.arity() {
            return Err(BvError::Arity {
                op: name,
                expected: self.arity(),
                got: widths.len(),
            });
        }
        let same2 = || {
            if widths[0] == widths[1] {
                Ok(widths[0])
            } else {
                Err(BvError::WidthMismatch {
                    op: name,
                    widths: widths.to_vec(),
                })
            }
        };
        match self {
            BvOp::Concat => Ok(widths[0] + widths[1]),
            BvOp::Extract { hi, lo } => {
                if *lo > *hi || *hi >= widths[0] {
                    Err(BvError::ExtractBounds {
                        hi: *hi,
                        lo: *lo,
                        width: widths[0],
                    })
                } else {
                    Ok(hi - lo + 1)
                }
            }
            BvOp::ZeroExtend { extra } | BvOp::SignExtend { extra } => Ok(widths[0] + extra),
            BvOp::Not | BvOp::Neg => Ok(widths[0]),
            BvOp::And
            | BvOp::Or
            | BvOp::Xor
            | BvOp::Add
            | BvOp::Sub
            | BvOp::Mul
            | BvOp::Udiv
            | BvOp::Urem
            | BvOp::Shl
            | BvOp::Lshr
            | BvOp::Ashr => same2(),
            BvOp::Eq | BvOp::Ult | BvOp::Ule | BvOp::Slt | BvOp::Sle => {
                same2()?;
                Ok(1)
            }
            BvOp::RedOr => Ok(1),
            BvOp::Ite => {
                if widths[0] != 1 {
                    return Err(BvError::IteCondition { got: widths[0] });
                }
                if widths[1] != widths[2] {
                    return Err(BvError::WidthMismatch {
                        op: name,
                        widths: widths.to_vec(),
                    });
                }
                Ok(widths[1])
            }
        }
    }
}

#[derive(Debug)]
pub(crate) enum NodeKind {
    Const(BigUint),
    Var(String),
    Op(BvOp, Vec<BvExpr>),
}

#[derive(Debug)]
pub(crate) struct Node {
    pub(crate) id: u64,
    pub(crate) width: u32,
    pub(crate) kind: NodeKind,
}

/// An immutable symbolic bit-vector expression. Cloning is cheap (reference
/// counted); subtrees may be shared freely, forming a DAG.
#[derive(Debug, Clone)]
pub struct BvExpr(pub(crate) Arc<Node>);

impl BvExpr {
    pub fn width(&self) -> u32 {
        self.0.width
    }

    pub(crate) fn id(&self) -> u64 {
        self.0.id
    }

    pub fn is_const(&self) -> bool {
        matches!(self.0.kind, NodeKind::Const(_))
    }

    pub fn as_const(&self) -> Option<&BigUint> {
        match &self.0.kind {
            NodeKind::Const(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_var(&self) -> Option<&str> {
        match &self.0.kind {
            NodeKind::Var(name) => Some(name),
            _ => None,
        }
    }

    pub(crate) fn kind(&self) -> &NodeKind {
        &self.0.kind
    }

    /// Same DAG node (pointer identity). Redeclaring a variable in one
    /// context returns the same node, so this distinguishes sharing from
    /// mere structural equality.
    pub fn same_expr(&self, other: &BvExpr) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Stable identity of this node within the process, usable as a DAG key.
    pub fn node_id(&self) -> u64 {
        self.0.id
    }

    /// The operator at this node, if it is an application.
    pub fn op(&self) -> Option<BvOp> {
        match &self.0.kind {
            NodeKind::Op(op, _) => Some(*op),
            _ => None,
        }
    }

    /// Child expressions (empty for constants and variables).
    pub fn operands(&self) -> Vec<BvExpr> {
        match &self.0.kind {
            NodeKind::Op(_, children) => children.clone(),
            _ => Vec::new(),
        }
    }

    /// Total number of unique nodes reachable from this expression.
    pub fn node_count(&self) -> usize {
        let mut seen = HashMap::new();
        let mut stack = vec![self.clone()];
        while let Some(e) = stack.pop() {
            if seen.insert(e.id(), ()).is_none() {
                if let NodeKind::Op(_, children) = e.kind() {
                    stack.extend(children.iter().cloned());
                }
            }
        }
        seen.len()
    }
}

fn node(width: u32, kind: NodeKind) -> BvExpr {
    BvExpr(Arc::new(Node {
        id: fresh_id(),
        width,
        kind,
    }))
}

/// Constant of the given width. Errors if the value does not fit.
pub fn mk_const(width: u32, value: BigUint) -> Result<BvExpr, BvError> {
    if width == 0 {
        return Err(BvError::ZeroWidth);
    }
    if value.bits() as u32 > width {
        return Err(BvError::ValueExceedsWidth { width });
    }
    Ok(node(width, NodeKind::Const(value)))
}

/// Registry of declared variables for one logical context. Declaring a name
/// twice with the same width returns the same logical variable; a differing
/// width is an error. Also hands out deterministically named fresh variables.
#[derive(Debug, Default)]
pub struct Context {
    vars: HashMap<String, (u32, BvExpr)>,
    fresh_counter: u64,
}

impl Context {
    pub fn new() -> Self {
        Context::default()
    }

    pub fn mk_var(&mut self, name: &str, width: u32) -> Result<BvExpr, BvError> {
        if name.is_empty() {
            return Err(BvError::EmptyVarName);
        }
        if width == 0 {
            return Err(BvError::ZeroWidth);
        }
        if let Some((declared, expr)) = self.vars.get(name) {
            if *declared != width {
                return Err(BvError::VarWidthConflict {
                    name: name.to_string(),
                    declared: *declared,
                    requested: width,
                });
            }
            return Ok(expr.clone());
        }
        let expr = node(width, NodeKind::Var(name.to_string()));
        self.vars.insert(name.to_string(), (width, expr.clone()));
        Ok(expr)
    }

    /// Fresh variable named `<prefix>_<n>` with a per-context counter, so
    /// repeated runs produce identical names.
    pub fn fresh_var(&mut self, prefix: &str, width: u32) -> BvExpr {
        loop {
            let name = format!("{}_{}", prefix, self.fresh_counter);
            self.fresh_counter += 1;
            if !self.vars.contains_key(&name) {
                return self.mk_var(&name, width).expect("fresh name is valid");
            }
        }
    }

    pub fn declared(&self) -> impl Iterator<Item = (&str, u32)> {
        self.vars.iter().map(|(n, (w, _))| (n.as_str(), *w))
    }

    pub fn width_of(&self, name: &str) -> Option<u32> {
        self.vars.get(name).map(|(w, _)| *w)
    }
}

fn mask(width: u32) -> BigUint {
    (BigUint::one() << width) - BigUint::one()
}

fn to_signed_magnitude(v: &BigUint, width: u32) -> (bool, BigUint) {
    if v.bit(width as u64 - 1) {
        let m = (BigUint::one() << width) - v;
        (true, m)
    } else {
        (false, v.clone())
    }
}

/// Concrete semantics of every operator over unsigned big integers. The
/// constant folder, the evaluator, and the brute-force checker all share this
/// one definition. Division by zero follows SMT-LIB QF_BV: `udiv` yields all
/// ones, `urem` yields the dividend.
pub(crate) fn apply_op(op: BvOp, args: &[&BigUint], widths: &[u32], out_width: u32) -> BigUint {
    let m = mask(out_width);
    match op {
        BvOp::Concat => (args[0] << widths[1]) | args[1],
        BvOp::Extract { hi: _, lo } => (args[0] >> lo) & &m,
        BvOp::ZeroExtend { .. } => args[0].clone(),
        BvOp::SignExtend { extra: _ } => {
            if args[0].bit(widths[0] as u64 - 1) {
                args[0] | (&m ^ mask(widths[0]))
            } else {
                args[0].clone()
            }
        }
        BvOp::Not => args[0] ^ &m,
        BvOp::And => args[0] & args[1],
        BvOp::Or => args[0] | args[1],
        BvOp::Xor => args[0] ^ args[1],
        BvOp::Neg => ((BigUint::one() << out_width) - args[0]) & &m,
        BvOp::Add => (args[0] + args[1]) & &m,
        BvOp::Sub => ((BigUint::one() << out_width) + args[0] - args[1]) & &m,
        BvOp::Mul => (args[0] * args[1]) & &m,
        BvOp::Udiv => {
            if args[1].is_zero() {
                m
            } else {
                args[0] / args[1]
            }
        }
        BvOp::Urem => {
            if args[1].is_zero() {
                args[0].clone()
            } else {
                args[0] % args[1]
            }
        }
        BvOp::Shl => match shift_amount(args[1], out_width) {
            Some(s) => (args[0] << s) & &m,
            None => BigUint::zero(),
        },
        BvOp::Lshr => match shift_amount(args[1], out_width) {
            Some(s) => args[0] >> s,
            None => BigUint::zero(),
        },
        BvOp::Ashr => {
            let sign = args[0].bit(widths[0] as u64 - 1);
            match shift_amount(args[1], widths[0]) {
                Some(s) => {
                    let shifted = args[0] >> s;
                    if sign {
                        let fill = (&m >> (widths[0] - s)) << (widths[0] - s);
                        shifted | fill
                    } else {
                        shifted
                    }
                }
                None => {
                    if sign {
                        m
                    } else {
                        BigUint::zero()
                    }
                }
            }
        }
        BvOp::Eq => BigUint::from((args[0] == args[1]) as u8),
        BvOp::Ult => BigUint::from((args[0] < args[1]) as u8),
        BvOp::Ule => BigUint::from((args[0] <= args[1]) as u8),
        BvOp::Slt => {
            let (sa, ma) = to_signed_magnitude(args[0], widths[0]);
            let (sb, mb) = to_signed_magnitude(args[1], widths[1]);
            let lt = match (sa, sb) {
                (true, false) => true,
                (false, true) => false,
                (false, false) => ma < mb,
                (true, true) => ma > mb,
            };
            BigUint::from(lt as u8)
        }
        BvOp::Sle => {
            let eq = args[0] == args[1];
            let lt = apply_op(BvOp::Slt, args, widths, 1);
            BigUint::from((eq || lt.is_one()) as u8)
        }
        BvOp::Ite => {
            if args[0].is_one() {
                args[1].clone()
            } else {
                args[2].clone()
            }
        }
        BvOp::RedOr => BigUint::from((!args[0].is_zero()) as u8),
    }
}

/// Shift amounts at or above the operand width shift everything out.
fn shift_amount(amount: &BigUint, width: u32) -> Option<u32> {
    if amount.bits() > 32 {
        return None;
    }
    let a: u32 = amount.try_into().ok()?;
    if a >= width {
        None
    } else {
        Some(a)
    }
}

/// Build an operator application, checking arity and widths. Applications
/// whose operands are all constants fold to a constant node; a constant ite
/// condition selects its branch directly.
pub fn apply(op: BvOp, operands: &[BvExpr]) -> Result<BvExpr, BvError> {
    let widths: Vec<u32> = operands.iter().map(|e| e.width()).collect();
    let out_width = op.result_width(&widths)?;

    if op == BvOp::Ite {
        if let Some(c) = operands[0].as_const() {
            return Ok(if c.is_one() {
                operands[1].clone()
            } else {
                operands[2].clone()
            });
        }
    }
    if let BvOp::Extract { hi, lo } = op {
        if lo == 0 && hi + 1 == widths[0] {
            return Ok(operands[0].clone());
        }
    }
    if let BvOp::ZeroExtend { extra: 0 } | BvOp::SignExtend { extra: 0 } = op {
        return Ok(operands[0].clone());
    }

    let consts: Option<Vec<&BigUint>> = operands.iter().map(|e| e.as_const()).collect();
    if let Some(args) = consts {
        let value = apply_op(op, &args, &widths, out_width);
        return mk_const(out_width, value);
    }

    Ok(node(out_width, NodeKind::Op(op, operands.to_vec())))
}

// Convenience builders. All panic-free: they surface typing errors.
macro_rules! binop {
    ($fname:ident, $op:expr) => {
        pub fn $fname(a: &BvExpr, b: &BvExpr) -> Result<BvExpr, BvError> {
            apply($op, &[a.clone(), b.clone()])
        }
    };
}

binop!(concat, BvOp::Concat);
binop!(and, BvOp::And);
binop!(or, BvOp::Or);
binop!(xor, BvOp::Xor);
binop!(add, BvOp::Add);
binop!(sub, BvOp::Sub);
binop!(mul, BvOp::Mul);
binop!(udiv, BvOp::Udiv);
binop!(urem, BvOp::Urem);
binop!(shl, BvOp::Shl);
binop!(lshr, BvOp::Lshr);
binop!(ashr, BvOp::Ashr);
binop!(eq, BvOp::Eq);
binop!(ult, BvOp::Ult);
binop!(ule, BvOp::Ule);
binop!(slt, BvOp::Slt);
binop!(sle, BvOp::Sle);

pub fn not(a: &BvExpr) -> Result<BvExpr, BvError> {
    apply(BvOp::Not, std::slice::from_ref(a))
}

pub fn neg(a: &BvExpr) -> Result<BvExpr, BvError> {
    apply(BvOp::Neg, std::slice::from_ref(a))
}

pub fn redor(a: &BvExpr) -> Result<BvExpr, BvError> {
    apply(BvOp::RedOr, std::slice::from_ref(a))
}

pub fn extract(a: &BvExpr, hi: u32, lo: u32) -> Result<BvExpr, BvError> {
    apply(BvOp::Extract { hi, lo }, std::slice::from_ref(a))
}

pub fn zero_extend(a: &BvExpr, extra: u32) -> Result<BvExpr, BvError> {
    apply(BvOp::ZeroExtend { extra }, std::slice::from_ref(a))
}

pub fn sign_extend(a: &BvExpr, extra: u32) -> Result<BvExpr, BvError> {
    apply(BvOp::SignExtend { extra }, std::slice::from_ref(a))
}

pub fn ite(c: &BvExpr, t: &BvExpr, e: &BvExpr) -> Result<BvExpr, BvError> {
    apply(BvOp::Ite, &[c.clone(), t.clone(), e.clone()])
}

/// Constant helper for the common small-value case.
pub fn cst(width: u32, value: u64) -> BvExpr {
    mk_const(width, BigUint::from(value)).expect("constant fits width")
}

/// All-ones constant of the given width.
pub fn ones(width: u32) -> BvExpr {
    mk_const(width, mask(width)).expect("mask fits width")
}

/// Count of leading zero bits, as a vector of the same width as the operand.
/// Built as an ite cascade over the plain operator set rather than as a
/// primitive, so emitted formulas stay within QF_BV.
pub fn count_leading_zeros(a: &BvExpr) -> Result<BvExpr, BvError> {
    let w = a.width();
    let mut result = cst(w, w as u64);
    // Walk from the least significant bit up so the most significant set bit
    // wins the cascade.
    for i in 0..w {
        let bit = extract(a, i, i)?;
        let count = cst(w, (w - 1 - i) as u64);
        result = ite(&bit, &count, &result)?;
    }
    Ok(result)
}

impl fmt::Display for BvExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind() {
            NodeKind::Const(v) => write!(f, "{}'d{}", self.width(), v),
            NodeKind::Var(name) => write!(f, "{}", name),
            NodeKind::Op(op, children) => {
                write!(f, "({}", op.name())?;
                match op {
                    BvOp::Extract { hi, lo } => write!(f, "[{}:{}]", hi, lo)?,
                    BvOp::ZeroExtend { extra } | BvOp::SignExtend { extra } => {
                        write!(f, "+{}", extra)?
                    }
                    _ => {}
                }
                for c in children {
                    write!(f, " {}", c)?;
                }
                write!(f, ")")
            }
        }
    }
}
