//! Floating-point sorts, rounding modes, value constructors, and
//! reinterpretation between packed floats and raw IEEE bit-vectors.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Zero};
use thiserror::Error;

use crate::bitvec::{self, BvExpr};
use crate::oracle;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FormatError {
    #[error("exponent bits must be at least 2, got {0}")]
    ExponentTooSmall(u32),
    #[error("significand bits must be at least 1, got {0}")]
    SignificandTooSmall(u32),
    #[error("bit-vector width {got} does not match format width {expected}")]
    WidthMismatch { expected: u32, got: u32 },
    #[error("cannot parse `{0}` as a decimal or rational literal")]
    BadLiteral(String),
    #[error("rational literal has zero denominator")]
    ZeroDenominator,
}

/// A floating-point format: `eb` exponent bits and `sb` stored significand
/// bits (the hidden bit is not counted). Total width is `1 + eb + sb`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct FpFormat {
    eb: u32,
    sb: u32,
}

impl FpFormat {
    pub fn new(eb: u32, sb: u32) -> Result<FpFormat, FormatError> {
        if eb < 2 {
            return Err(FormatError::ExponentTooSmall(eb));
        }
        if sb < 1 {
            return Err(FormatError::SignificandTooSmall(sb));
        }
        Ok(FpFormat { eb, sb })
    }

    pub fn eb(&self) -> u32 {
        self.eb
    }

    pub fn sb(&self) -> u32 {
        self.sb
    }

    pub fn total_width(&self) -> u32 {
        1 + self.eb + self.sb
    }

    pub fn bias(&self) -> i64 {
        (1i64 << (self.eb - 1)) - 1
    }

    pub fn emax(&self) -> i64 {
        self.bias()
    }

    pub fn emin(&self) -> i64 {
        1 - self.bias()
    }
}

impl std::fmt::Display for FpFormat {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "fp({},{})", self.eb, self.sb)
    }
}

/// The standard interchange formats plus the small test format.
pub mod formats {
    use super::FpFormat;

    pub fn fp8() -> FpFormat {
        FpFormat { eb: 4, sb: 3 }
    }
    pub fn fp16() -> FpFormat {
        FpFormat { eb: 5, sb: 10 }
    }
    pub fn fp32() -> FpFormat {
        FpFormat { eb: 8, sb: 23 }
    }
    pub fn fp64() -> FpFormat {
        FpFormat { eb: 11, sb: 52 }
    }
    pub fn fp128() -> FpFormat {
        FpFormat { eb: 15, sb: 112 }
    }

    pub fn by_name(name: &str) -> Option<FpFormat> {
        match name {
            "fp8" => Some(fp8()),
            "fp16" => Some(fp16()),
            "fp32" => Some(fp32()),
            "fp64" => Some(fp64()),
            "fp128" => Some(fp128()),
            _ => None,
        }
    }
}

/// The five rounding modes, each carrying its fixed 3-bit encoding:
/// RNE=000, RNA=001, RTP=010, RTN=011, RTZ=100.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RoundingMode {
    Rne,
    Rna,
    Rtp,
    Rtn,
    Rtz,
}

impl RoundingMode {
    pub const ALL: [RoundingMode; 5] = [
        RoundingMode::Rne,
        RoundingMode::Rna,
        RoundingMode::Rtp,
        RoundingMode::Rtn,
        RoundingMode::Rtz,
    ];

    pub fn code(&self) -> u64 {
        match self {
            RoundingMode::Rne => 0b000,
            RoundingMode::Rna => 0b001,
            RoundingMode::Rtp => 0b010,
            RoundingMode::Rtn => 0b011,
            RoundingMode::Rtz => 0b100,
        }
    }

    /// The constant 3-bit bit-vector encoding.
    pub fn encoding(&self) -> BvExpr {
        bitvec::expr::cst(3, self.code())
    }

    pub fn name(&self) -> &'static str {
        match self {
            RoundingMode::Rne => "RNE",
            RoundingMode::Rna => "RNA",
            RoundingMode::Rtp => "RTP",
            RoundingMode::Rtn => "RTN",
            RoundingMode::Rtz => "RTZ",
        }
    }

    pub fn from_name(name: &str) -> Option<RoundingMode> {
        match name {
            "RNE" => Some(RoundingMode::Rne),
            "RNA" => Some(RoundingMode::Rna),
            "RTP" => Some(RoundingMode::Rtp),
            "RTN" => Some(RoundingMode::Rtn),
            "RTZ" => Some(RoundingMode::Rtz),
            _ => None,
        }
    }
}

impl std::fmt::Display for RoundingMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A symbolic packed float: a bit-vector of the format's total width
/// interpreted in the IEEE layout (sign, biased exponent, significand).
#[derive(Debug, Clone)]
pub struct FpBits {
    bits: BvExpr,
    format: FpFormat,
}

impl FpBits {
    pub fn bits(&self) -> &BvExpr {
        &self.bits
    }

    pub fn format(&self) -> FpFormat {
        self.format
    }
}

/// Wrap a raw bit-vector as a packed float without changing it.
pub fn fp_from_ieeebv(bits: &BvExpr, format: FpFormat) -> Result<FpBits, FormatError> {
    if bits.width() != format.total_width() {
        return Err(FormatError::WidthMismatch {
            expected: format.total_width(),
            got: bits.width(),
        });
    }
    Ok(FpBits {
        bits: bits.clone(),
        format,
    })
}

/// The underlying IEEE bit-vector, unchanged.
pub fn fp_as_ieeebv(x: &FpBits) -> BvExpr {
    x.bits.clone()
}

/// Constant packed float from a concrete pattern.
pub fn fp_const(pattern: BigUint, format: FpFormat) -> FpBits {
    let bits = bitvec::mk_const(format.total_width(), pattern).expect("pattern fits format width");
    FpBits { bits, format }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SpecialKind {
    PosInf,
    NegInf,
    PosZero,
    NegZero,
    Nan,
}

/// Construct one of the special values. The NaN is always the canonical one:
/// positive, significand 0...01.
pub fn mk_special(format: FpFormat, kind: SpecialKind) -> FpBits {
    let w = format.total_width();
    let sign = BigUint::one() << (w - 1);
    let exp_ones = ((BigUint::one() << format.eb()) - BigUint::one()) << format.sb();
    let pattern = match kind {
        SpecialKind::PosZero => BigUint::zero(),
        SpecialKind::NegZero => sign,
        SpecialKind::PosInf => exp_ones,
        SpecialKind::NegInf => sign | exp_ones,
        SpecialKind::Nan => exp_ones | BigUint::one(),
    };
    fp_const(pattern, format)
}

/// Parse a literal per the grammar
/// `['-'] digits ['.' digits] [('e'|'E') ['-'] digits]` or
/// `['-'] digits '/' digits`, producing an exact rational.
pub fn parse_literal(s: &str) -> Result<BigRational, FormatError> {
    let bad = || FormatError::BadLiteral(s.to_string());
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    if body.is_empty() {
        return Err(bad());
    }

    let rational = if let Some((num, den)) = body.split_once('/') {
        if !is_digits(num) || !is_digits(den) {
            return Err(bad());
        }
        let n: BigInt = num.parse().map_err(|_| bad())?;
        let d: BigInt = den.parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(FormatError::ZeroDenominator);
        }
        BigRational::new(n, d)
    } else {
        let (mantissa, exp) = match body.split_once(['e', 'E']) {
            Some((m, e)) => {
                let (eneg, edigits) = match e.strip_prefix('-') {
                    Some(rest) => (true, rest),
                    None => (false, e),
                };
                if !is_digits(edigits) {
                    return Err(bad());
                }
                let v: i64 = edigits.parse().map_err(|_| bad())?;
                (m, if eneg { -v } else { v })
            }
            None => (body, 0),
        };
        let (int_part, frac_part) = match mantissa.split_once('.') {
            Some((i, f)) => (i, f),
            None => (mantissa, ""),
        };
        if !is_digits(int_part) || (!frac_part.is_empty() && !is_digits(frac_part)) {
            return Err(bad());
        }
        if int_part.is_empty() {
            return Err(bad());
        }
        let digits = format!("{}{}", int_part, frac_part);
        let n: BigInt = digits.parse().map_err(|_| bad())?;
        let scale = exp - frac_part.len() as i64;
        let ten = BigInt::from(10);
        if scale >= 0 {
            BigRational::from_integer(n * ten.pow(scale as u32))
        } else {
            BigRational::new(n, ten.pow((-scale) as u32))
        }
    };
    Ok(if negative { -rational } else { rational })
}

fn is_digits(s: &str) -> bool {
    !s.is_empty() && s.bytes().all(|b| b.is_ascii_digit())
}

/// Nearest representable value for a decimal or rational literal under the
/// given rounding mode, computed by the exact oracle rounding. Overflow
/// yields infinity per the mode, underflow a subnormal or zero.
pub fn mk_literal(format: FpFormat, text: &str, rm: RoundingMode) -> Result<FpBits, FormatError> {
    let rational = parse_literal(text)?;
    let value = oracle::OracleValue::from_rational(rational);
    let pattern = oracle::round_exact(&value, format, rm);
    Ok(fp_const(pattern, format))
}
