//! Symbolic bit-vector expressions and the machinery to reason about them:
//! a word-level expression IR with eager constant folding, a big-integer
//! evaluator, a compiled fast evaluator for sweeps, Tseitin conversion to
//! CNF, and an exhaustive satisfiability checker for small formulas.

pub mod cnf;
pub mod eval;
pub mod expr;
pub mod sat;

pub use cnf::{to_cnf, to_cnf_all, CnfFormula};
pub use eval::{eval, CompiledCircuit, Env};
pub use expr::{apply, mk_const, BvExpr, BvOp, Context};
pub use sat::{brute_force_sat, free_variables, SatResult, SatStatus, DEFAULT_SAT_BUDGET};

use num_bigint::BigUint;
use thiserror::Error;

/// Errors raised while constructing or evaluating bit-vector expressions.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum BvError {
    #[error("value exceeds width {width}")]
    ValueExceedsWidth { width: u32 },
    #[error("bit-vector width must be at least 1")]
    ZeroWidth,
    #[error("{op} expects {expected} operands, got {got}")]
    Arity {
        op: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{op} operand widths mismatch: {widths:?}")]
    WidthMismatch { op: &'static str, widths: Vec<u32> },
    #[error("extract bounds hi={hi} lo={lo} invalid for operand width {width}")]
    ExtractBounds { hi: u32, lo: u32, width: u32 },
    #[error("ite condition must have width 1, got {got}")]
    IteCondition { got: u32 },
    #[error(
        "variable `{name}` already declared with width {declared}, redeclared with {requested}"
    )]
    VarWidthConflict {
        name: String,
        declared: u32,
        requested: u32,
    },
    #[error("variable name must be nonempty")]
    EmptyVarName,
    #[error("variable `{name}` has no value in the environment")]
    UnassignedVariable { name: String },
    #[error("environment value for `{name}` has width {got}, expected {expected}")]
    EnvWidthMismatch {
        name: String,
        expected: u32,
        got: u32,
    },
    #[error("expected a width-1 expression, got width {got}")]
    NotBoolean { got: u32 },
    #[error("circuit width {width} exceeds the fast evaluator limit of 64 bits")]
    TooWideForFastEval { width: u32 },
}

/// A concrete bit-vector value: an unsigned integer together with its width.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BvValue {
    pub width: u32,
    pub value: BigUint,
}

impl BvValue {
    pub fn new(width: u32, value: BigUint) -> Self {
        debug_assert!(value.bits() as u32 <= width);
        BvValue { width, value }
    }

    pub fn from_u64(width: u32, value: u64) -> Self {
        BvValue::new(width, BigUint::from(value))
    }

    /// Binary rendering, most significant bit first, zero padded to the width.
    pub fn to_bin_string(&self) -> String {
        let mut s = String::with_capacity(self.width as usize);
        for i in (0..self.width).rev() {
            s.push(if self.value.bit(i as u64) { '1' } else { '0' });
        }
        s
    }

    /// Hex rendering, zero padded so every nibble of the width is shown.
    pub fn to_hex_string(&self) -> String {
        let nibbles = (self.width as usize).div_ceil(4);
        let mut s = self.value.to_str_radix(16);
        while s.len() < nibbles {
            s.insert(0, '0');
        }
        s
    }
}

impl std::fmt::Display for BvValue {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "#b{}", self.to_bin_string())
    }
}
