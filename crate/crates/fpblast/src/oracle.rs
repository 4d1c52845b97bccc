//! Exact-arithmetic reference implementation of IEEE-754 semantics.
//!
//! Values are held as arbitrary-precision rationals (plus signed zeroes,
//! infinities, and NaN), operations are computed exactly and rounded once by
//! comparing against the two neighboring representable values. Nothing in
//! this module touches the symbolic circuit code, so a defect cannot hide on
//! both sides of a differential test.

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use thiserror::Error;

use crate::fpformat::{FpFormat, RoundingMode};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum OracleError {
    #[error("exact decimal expansion is undefined for {0}")]
    NotFinite(&'static str),
}

/// Exact value denoted by a packed floating-point pattern.
#[derive(Debug, Clone, PartialEq)]
pub enum OracleValue {
    /// Finite value; `negative` carries the sign of zero as well.
    Finite {
        negative: bool,
        magnitude: BigRational,
    },
    PosInf,
    NegInf,
    Nan,
}

impl OracleValue {
    pub fn finite(negative: bool, magnitude: BigRational) -> Self {
        debug_assert!(!magnitude.is_negative());
        OracleValue::Finite {
            negative,
            magnitude,
        }
    }

    pub fn zero(negative: bool) -> Self {
        OracleValue::finite(negative, BigRational::zero())
    }

    pub fn from_rational(v: BigRational) -> Self {
        if v.is_negative() {
            OracleValue::finite(true, -v)
        } else {
            OracleValue::finite(false, v)
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, OracleValue::Finite { magnitude, .. } if magnitude.is_zero())
    }

    pub fn is_nan(&self) -> bool {
        matches!(self, OracleValue::Nan)
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, OracleValue::Finite { .. })
    }

    /// Signed rational for finite values.
    pub fn to_rational(&self) -> Option<BigRational> {
        match self {
            OracleValue::Finite {
                negative,
                magnitude,
            } => Some(if *negative {
                -magnitude.clone()
            } else {
                magnitude.clone()
            }),
            _ => None,
        }
    }

    pub fn negated(&self) -> OracleValue {
        match self {
            OracleValue::Finite {
                negative,
                magnitude,
            } => OracleValue::finite(!negative, magnitude.clone()),
            OracleValue::PosInf => OracleValue::NegInf,
            OracleValue::NegInf => OracleValue::PosInf,
            OracleValue::Nan => OracleValue::Nan,
        }
    }

    fn sign_bit(&self) -> bool {
        match self {
            OracleValue::Finite { negative, .. } => *negative,
            OracleValue::NegInf => true,
            _ => false,
        }
    }
}

fn pow2(e: i64) -> BigRational {
    if e >= 0 {
        BigRational::from_integer(BigInt::one() << e as u64)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-e) as u64)
    }
}

/// Decode a concrete bit pattern into its exact value.
pub fn decode(bits: &BigUint, format: FpFormat) -> OracleValue {
    let sb = format.sb() as u64;
    let eb = format.eb() as u64;
    let negative = bits.bit(eb + sb);
    let exp_field: BigUint = (bits >> sb) & ((BigUint::one() << eb) - BigUint::one());
    let sig_field: BigUint = bits & ((BigUint::one() << sb) - BigUint::one());
    let exp_max = (BigUint::one() << eb) - BigUint::one();

    if exp_field == exp_max {
        return if sig_field.is_zero() {
            if negative {
                OracleValue::NegInf
            } else {
                OracleValue::PosInf
            }
        } else {
            OracleValue::Nan
        };
    }

    let sig = BigInt::from(sig_field);
    let magnitude = if exp_field.is_zero() {
        // Subnormal or zero: no hidden bit, scale 2^emin.
        BigRational::new(sig, BigInt::one() << sb) * pow2(format.emin())
    } else {
        let e: i64 = i64::try_from(BigInt::from(exp_field)).expect("exponent field fits i64")
            - format.bias();
        let full = sig + (BigInt::one() << sb);
        BigRational::new(full, BigInt::one() << sb) * pow2(e)
    };
    OracleValue::finite(negative, magnitude)
}

/// floor(log2(v)) for a positive rational.
fn floor_log2(v: &BigRational) -> i64 {
    debug_assert!(v.is_positive());
    let num_bits = v.numer().magnitude().bits() as i64;
    let den_bits = v.denom().magnitude().bits() as i64;
    // First guess within 1 of the truth, then adjust by exact comparison.
    let mut e = num_bits - den_bits;
    while pow2(e) > *v {
        e -= 1;
    }
    while pow2(e + 1) <= *v {
        e += 1;
    }
    e
}

fn floor_rational(v: &BigRational) -> BigInt {
    v.floor().to_integer()
}

/// Pack sign, unbiased exponent (of the leading bit), and full significand
/// (hidden bit included, `sig < 2^(sb+1)`) into the IEEE layout.
/// When `sig < 2^sb`, the exponent must be emin and the pattern is subnormal.
fn pack_parts(negative: bool, e: i64, sig: &BigInt, format: FpFormat) -> BigUint {
    let sb = format.sb() as u64;
    let eb = format.eb() as u64;
    let sig_u = sig.magnitude().clone();
    let hidden = BigUint::one() << sb;
    let (exp_field, sig_field) = if sig_u < hidden {
        debug_assert_eq!(e, format.emin());
        (BigUint::zero(), sig_u)
    } else {
        let biased = e + format.bias();
        debug_assert!(biased >= 1 && biased < (1i64 << eb) - 1);
        (BigUint::from(biased as u64), sig_u - hidden)
    };
    let sign_bit = if negative {
        BigUint::one()
    } else {
        BigUint::zero()
    };
    (sign_bit << (eb + sb)) | (exp_field << sb) | sig_field
}

fn pos_inf_bits(format: FpFormat) -> BigUint {
    let exp_max = (BigUint::one() << format.eb()) - BigUint::one();
    exp_max << format.sb()
}

fn max_finite_bits(format: FpFormat) -> BigUint {
    // Exponent all ones minus one, significand all ones.
    let exp = (BigUint::one() << format.eb()) - BigUint::from(2u8);
    (exp << format.sb()) | ((BigUint::one() << format.sb()) - BigUint::one())
}

fn with_sign(bits: BigUint, negative: bool, format: FpFormat) -> BigUint {
    if negative {
        bits | (BigUint::one() << (format.total_width() - 1))
    } else {
        bits
    }
}

/// Canonical NaN: positive sign, exponent all ones, significand 0...01.
pub fn canonical_nan_bits(format: FpFormat) -> BigUint {
    pos_inf_bits(format) | BigUint::one()
}

fn overflow_to_infinity(rm: RoundingMode, negative: bool) -> bool {
    match rm {
        RoundingMode::Rne | RoundingMode::Rna => true,
        RoundingMode::Rtp => !negative,
        RoundingMode::Rtn => negative,
        RoundingMode::Rtz => false,
    }
}

fn overflow_bits(rm: RoundingMode, negative: bool, format: FpFormat) -> BigUint {
    if overflow_to_infinity(rm, negative) {
        with_sign(pos_inf_bits(format), negative, format)
    } else {
        with_sign(max_finite_bits(format), negative, format)
    }
}

/// Round an exact value to the nearest representable pattern under the given
/// mode. Implements r(x) by exact comparison against the two neighboring
/// representable values; halfway cases are detected by rational equality.
pub fn round_exact(v: &OracleValue, format: FpFormat, rm: RoundingMode) -> BigUint {
    round_exact_with(v, format, rm, TieBehavior::ToEven)
}

/// Tie handling for round-to-nearest-even. `ToOddSelfTest` deliberately
/// inverts the tie rule so the differential harness can prove it detects a
/// seeded defect; it is never used for real rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TieBehavior {
    ToEven,
    ToOddSelfTest,
}

pub fn round_exact_with(
    v: &OracleValue,
    format: FpFormat,
    rm: RoundingMode,
    ties: TieBehavior,
) -> BigUint {
    let (negative, magnitude) = match v {
        OracleValue::Nan => return canonical_nan_bits(format),
        OracleValue::PosInf => return pos_inf_bits(format),
        OracleValue::NegInf => return with_sign(pos_inf_bits(format), true, format),
        OracleValue::Finite {
            negative,
            magnitude,
        } => (*negative, magnitude),
    };
    if magnitude.is_zero() {
        return with_sign(BigUint::zero(), negative, format);
    }

    let sb = format.sb() as i64;
    // Grid exponent: leading-bit position, clamped to emin for subnormals.
    let e = floor_log2(magnitude).max(format.emin());
    if e > format.emax() {
        return overflow_bits(rm, negative, format);
    }

    // Scale so one unit = one ulp at exponent e; n is the truncated
    // significand (hidden bit included for normals).
    let scaled = magnitude * pow2(sb - e);
    let n = floor_rational(&scaled);
    let frac = scaled - BigRational::from_integer(n.clone());
    let half = BigRational::new(BigInt::one(), BigInt::from(2));

    let round_up = if frac.is_zero() {
        false
    } else {
        match rm {
            RoundingMode::Rne => match frac.cmp(&half) {
                std::cmp::Ordering::Greater => true,
                std::cmp::Ordering::Less => false,
                std::cmp::Ordering::Equal => match ties {
                    TieBehavior::ToEven => n.is_odd(),
                    TieBehavior::ToOddSelfTest => n.is_even(),
                },
            },
            RoundingMode::Rna => frac >= half,
            RoundingMode::Rtp => !negative,
            RoundingMode::Rtn => negative,
            RoundingMode::Rtz => false,
        }
    };

    let mut sig = if round_up { n + 1 } else { n };
    let mut e = e;
    if sig == BigInt::one() << (sb as u64 + 1) {
        // Carried past the top of the significand.
        sig = BigInt::one() << sb as u64;
        e += 1;
        if e > format.emax() {
            return overflow_bits(rm, negative, format);
        }
    }
    if sig.is_zero() {
        return with_sign(BigUint::zero(), negative, format);
    }
    with_sign(pack_parts(negative, e, &sig, format), negative, format)
}

/// Arithmetic, conversions, and rounding-position queries. Binary operators
/// take exact rational paths for finite operands and IEEE special-value
/// tables otherwise; the result is rounded once.
pub fn add(x: &OracleValue, y: &OracleValue, format: FpFormat, rm: RoundingMode) -> BigUint {
    round_add(x, y, format, rm, TieBehavior::ToEven)
}

pub(crate) fn round_add(
    x: &OracleValue,
    y: &OracleValue,
    format: FpFormat,
    rm: RoundingMode,
    ties: TieBehavior,
) -> BigUint {
    use OracleValue::*;
    let v = match (x, y) {
        (Nan, _) | (_, Nan) => Nan,
        (PosInf, NegInf) | (NegInf, PosInf) => Nan,
        (PosInf, _) | (_, PosInf) => PosInf,
        (NegInf, _) | (_, NegInf) => NegInf,
        (Finite { .. }, Finite { .. }) => {
            if x.is_zero() && y.is_zero() {
                // Same-sign zeroes keep the sign, opposite signs follow the
                // exact-cancellation rule.
                let (sx, sy) = (x.sign_bit(), y.sign_bit());
                return if sx == sy {
                    round_exact_with(&OracleValue::zero(sx), format, rm, ties)
                } else {
                    round_exact_with(
                        &OracleValue::zero(rm == RoundingMode::Rtn),
                        format,
                        rm,
                        ties,
                    )
                };
            }
            let sum = x.to_rational().unwrap() + y.to_rational().unwrap();
            if sum.is_zero() {
                // Exact cancellation of nonzero operands.
                return round_exact_with(
                    &OracleValue::zero(rm == RoundingMode::Rtn),
                    format,
                    rm,
                    ties,
                );
            }
            OracleValue::from_rational(sum)
        }
    };
    round_exact_with(&v, format, rm, ties)
}

pub fn sub(x: &OracleValue, y: &OracleValue, format: FpFormat, rm: RoundingMode) -> BigUint {
    add(x, &y.negated(), format, rm)
}

pub fn mul(x: &OracleValue, y: &OracleValue, format: FpFormat, rm: RoundingMode) -> BigUint {
    use OracleValue::*;
    let sign = x.sign_bit() ^ y.sign_bit();
    let v = match (x, y) {
        (Nan, _) | (_, Nan) => Nan,
        (PosInf | NegInf, b) => {
            if b.is_zero() {
                Nan
            } else if sign {
                NegInf
            } else {
                PosInf
            }
        }
        (a, PosInf | NegInf) => {
            if a.is_zero() {
                Nan
            } else if sign {
                NegInf
            } else {
                PosInf
            }
        }
        (Finite { .. }, Finite { .. }) => {
            let p = x.to_rational().unwrap() * y.to_rational().unwrap();
            OracleValue::finite(sign, p.abs())
        }
    };
    round_exact(&v, format, rm)
}

pub fn div(x: &OracleValue, y: &OracleValue, format: FpFormat, rm: RoundingMode) -> BigUint {
    use OracleValue::*;
    let sign = x.sign_bit() ^ y.sign_bit();
    let v = match (x, y) {
        (Nan, _) | (_, Nan) => Nan,
        (PosInf | NegInf, PosInf | NegInf) => Nan,
        (PosInf | NegInf, Finite { .. }) => {
            if sign {
                NegInf
            } else {
                PosInf
            }
        }
        (Finite { .. }, PosInf | NegInf) => OracleValue::zero(sign),
        (Finite { .. }, Finite { .. }) => {
            if y.is_zero() {
                if x.is_zero() {
                    Nan
                } else if sign {
                    NegInf
                } else {
                    PosInf
                }
            } else if x.is_zero() {
                OracleValue::zero(sign)
            } else {
                let q = x.to_rational().unwrap() / y.to_rational().unwrap();
                OracleValue::finite(sign, q.abs())
            }
        }
    };
    round_exact(&v, format, rm)
}

/// Fused multiply-add: x*y + z with a single rounding of the exact result.
pub fn fma(
    x: &OracleValue,
    y: &OracleValue,
    z: &OracleValue,
    format: FpFormat,
    rm: RoundingMode,
) -> BigUint {
    use OracleValue::*;
    let psign = x.sign_bit() ^ y.sign_bit();
    // Product special cases mirror multiplication.
    let product = match (x, y) {
        (Nan, _) | (_, Nan) => Nan,
        (PosInf | NegInf, b) => {
            if b.is_zero() {
                return canonical_nan_bits(format);
            } else if psign {
                NegInf
            } else {
                PosInf
            }
        }
        (a, PosInf | NegInf) => {
            if a.is_zero() {
                return canonical_nan_bits(format);
            } else if psign {
                NegInf
            } else {
                PosInf
            }
        }
        (Finite { .. }, Finite { .. }) => {
            let p = x.to_rational().unwrap() * y.to_rational().unwrap();
            OracleValue::finite(psign, p.abs())
        }
    };
    // Then an exact (unrounded) addition with z.
    use OracleValue as V;
    let v = match (&product, z) {
        (V::Nan, _) | (_, V::Nan) => V::Nan,
        (V::PosInf, V::NegInf) | (V::NegInf, V::PosInf) => V::Nan,
        (V::PosInf, _) | (_, V::PosInf) => V::PosInf,
        (V::NegInf, _) | (_, V::NegInf) => V::NegInf,
        (V::Finite { .. }, V::Finite { .. }) => {
            if product.is_zero() && z.is_zero() {
                let (sp, sz) = (product.sign_bit(), z.sign_bit());
                let neg = if sp == sz {
                    sp
                } else {
                    rm == RoundingMode::Rtn
                };
                return round_exact(&OracleValue::zero(neg), format, rm);
            }
            let sum = product.to_rational().unwrap() + z.to_rational().unwrap();
            if sum.is_zero() {
                return round_exact(&OracleValue::zero(rm == RoundingMode::Rtn), format, rm);
            }
            OracleValue::from_rational(sum)
        }
    };
    round_exact(&v, format, rm)
}

/// Square root, rounded correctly in all modes. The integer square root is
/// taken with enough scale that the rounding decisions reduce to exact
/// rational comparisons against the neighbor and the halfway point.
pub fn sqrt(x: &OracleValue, format: FpFormat, rm: RoundingMode) -> BigUint {
    use OracleValue::*;
    match x {
        Nan | NegInf => canonical_nan_bits(format),
        PosInf => pos_inf_bits(format),
        Finite {
            negative,
            magnitude,
        } => {
            if magnitude.is_zero() {
                return with_sign(BigUint::zero(), *negative, format);
            }
            if *negative {
                return canonical_nan_bits(format);
            }
            let sb = format.sb() as i64;
            // Exponent of the root: floor(log2(sqrt(v))) = floor(e_v / 2)
            // verified by exact squared comparison.
            let mut e = floor_log2(magnitude).div_euclid(2);
            while pow2(2 * (e + 1)) <= *magnitude {
                e += 1;
            }
            while pow2(2 * e) > *magnitude {
                e -= 1;
            }
            debug_assert!(e <= format.emax(), "square root cannot overflow");
            // Formats with emin = 0 (two exponent bits) have subnormal
            // square roots; clamp to the subnormal grid like round_exact.
            let e = e.max(format.emin());

            // n = floor(sqrt(v) * 2^(sb-e)) = floor(sqrt(v * 4^(sb-e))).
            let t = sb - e;
            let scaled = magnitude * pow2(2 * t);
            let a = scaled.numer().magnitude();
            let b = scaled.denom().magnitude();
            let n = (a * b).sqrt() / b;

            let n_rat = BigRational::from_integer(BigInt::from(n.clone()));
            let exact = &n_rat * &n_rat == scaled;
            let round_up = if exact {
                false
            } else {
                match rm {
                    RoundingMode::Rne | RoundingMode::Rna => {
                        let mid = &n_rat + BigRational::new(BigInt::one(), BigInt::from(2));
                        match (&mid * &mid).cmp(&scaled) {
                            std::cmp::Ordering::Less => true,
                            std::cmp::Ordering::Greater => false,
                            std::cmp::Ordering::Equal => {
                                // Exact halfway point (cannot arise from
                                // squaring a representable float, but handled
                                // for totality).
                                match rm {
                                    RoundingMode::Rna => true,
                                    _ => n.is_odd(),
                                }
                            }
                        }
                    }
                    RoundingMode::Rtp => true,
                    RoundingMode::Rtn | RoundingMode::Rtz => false,
                }
            };
            let mut sig = BigInt::from(n);
            let mut exp = e;
            if round_up {
                sig += 1;
                if sig == BigInt::one() << (sb as u64 + 1) {
                    sig = BigInt::one() << sb as u64;
                    exp += 1;
                }
            }
            pack_parts(false, exp, &sig, format)
        }
    }
}

/// Round to the nearest integral value under the given mode; specials pass
/// through, and the sign of zero results is preserved.
pub fn round_to_integral(x: &OracleValue, format: FpFormat, rm: RoundingMode) -> BigUint {
    use OracleValue::*;
    match x {
        Nan => canonical_nan_bits(format),
        PosInf => pos_inf_bits(format),
        NegInf => with_sign(pos_inf_bits(format), true, format),
        Finite {
            negative,
            magnitude,
        } => {
            if magnitude.is_zero() {
                return with_sign(BigUint::zero(), *negative, format);
            }
            let n = floor_rational(magnitude);
            let frac = magnitude - BigRational::from_integer(n.clone());
            let half = BigRational::new(BigInt::one(), BigInt::from(2));
            let up = if frac.is_zero() {
                false
            } else {
                match rm {
                    RoundingMode::Rne => match frac.cmp(&half) {
                        std::cmp::Ordering::Greater => true,
                        std::cmp::Ordering::Less => false,
                        std::cmp::Ordering::Equal => n.is_odd(),
                    },
                    RoundingMode::Rna => frac >= half,
                    RoundingMode::Rtp => !*negative,
                    RoundingMode::Rtn => *negative,
                    RoundingMode::Rtz => false,
                }
            };
            let int = if up { n + 1 } else { n };
            if int.is_zero() {
                return with_sign(BigUint::zero(), *negative, format);
            }
            // The rounded integer is exactly representable whenever
            // emax >= sb+1 (true of every interchange format); on degenerate
            // formats it can exceed the largest finite value, in which case
            // the standard overflow rule for the mode applies.
            round_exact(
                &OracleValue::finite(*negative, BigRational::from_integer(int)),
                format,
                rm,
            )
        }
    }
}

/// Truncate toward zero into a `width`-bit integer. Returns `None` when the
/// value is NaN, infinite, or out of range for the target (the circuit models
/// that case as a free variable).
pub fn to_int(x: &OracleValue, width: u32, signed: bool) -> Option<BigUint> {
    let (negative, magnitude) = match x {
        OracleValue::Finite {
            negative,
            magnitude,
        } => (*negative, magnitude),
        _ => return None,
    };
    let t = floor_rational(magnitude);
    let signed_val = if negative { -t } else { t };
    let (lo, hi) = if signed {
        (
            -(BigInt::one() << (width - 1)),
            (BigInt::one() << (width - 1)) - 1,
        )
    } else {
        (BigInt::zero(), (BigInt::one() << width) - 1)
    };
    if signed_val < lo || signed_val > hi {
        return None;
    }
    let wrapped = if signed_val.is_negative() {
        (BigInt::one() << width) + signed_val
    } else {
        signed_val
    };
    Some(wrapped.magnitude().clone())
}

/// Convert a `width`-bit integer pattern (signed or unsigned) to the nearest
/// representable float under the rounding mode. Zero maps to +0.
pub fn from_int(
    bits: &BigUint,
    width: u32,
    signed: bool,
    format: FpFormat,
    rm: RoundingMode,
) -> BigUint {
    let value = if signed && bits.bit(width as u64 - 1) {
        BigInt::from(bits.clone()) - (BigInt::one() << width)
    } else {
        BigInt::from(bits.clone())
    };
    if value.is_zero() {
        return BigUint::zero();
    }
    round_exact(
        &OracleValue::from_rational(BigRational::from_integer(value)),
        format,
        rm,
    )
}

/// Convert between formats: re-round the exact value into the target.
pub fn to_fp(x: &OracleValue, target: FpFormat, rm: RoundingMode) -> BigUint {
    round_exact(x, target, rm)
}

/// Absolute value and negation operate on encodings: pure sign-bit
/// manipulation, NaN payloads included.
pub fn abs_bits(bits: &BigUint, format: FpFormat) -> BigUint {
    let low_mask = (BigUint::one() << (format.total_width() - 1)) - BigUint::one();
    bits & low_mask
}

pub fn neg_bits(bits: &BigUint, format: FpFormat) -> BigUint {
    let sign_mask = BigUint::one() << (format.total_width() - 1);
    bits ^ sign_mask
}

/// IEEE comparison classes on exact values.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CmpKind {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

pub fn compare(kind: CmpKind, x: &OracleValue, y: &OracleValue) -> bool {
    if x.is_nan() || y.is_nan() {
        return false;
    }
    use std::cmp::Ordering;
    let ord = match (x, y) {
        (OracleValue::NegInf, OracleValue::NegInf) => Ordering::Equal,
        (OracleValue::NegInf, _) => Ordering::Less,
        (_, OracleValue::NegInf) => Ordering::Greater,
        (OracleValue::PosInf, OracleValue::PosInf) => Ordering::Equal,
        (OracleValue::PosInf, _) => Ordering::Greater,
        (_, OracleValue::PosInf) => Ordering::Less,
        (OracleValue::Finite { .. }, OracleValue::Finite { .. }) => {
            // +0 and -0 compare equal.
            x.to_rational().unwrap().cmp(&y.to_rational().unwrap())
        }
        _ => unreachable!("NaN handled above"),
    };
    match kind {
        CmpKind::Lt => ord == Ordering::Less,
        CmpKind::Le => ord != Ordering::Greater,
        CmpKind::Gt => ord == Ordering::Greater,
        CmpKind::Ge => ord != Ordering::Less,
        CmpKind::Eq => ord == Ordering::Equal,
    }
}

/// Classification on exact values plus the raw sign bit of the pattern.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassKind {
    Normal,
    Subnormal,
    Zero,
    Inf,
    Nan,
    Negative,
    Positive,
}

pub fn classify(kind: ClassKind, bits: &BigUint, format: FpFormat) -> bool {
    let v = decode(bits, format);
    match kind {
        ClassKind::Nan => v.is_nan(),
        ClassKind::Inf => matches!(v, OracleValue::PosInf | OracleValue::NegInf),
        ClassKind::Zero => v.is_zero(),
        ClassKind::Subnormal => match &v {
            OracleValue::Finite { magnitude, .. } => {
                !magnitude.is_zero() && *magnitude < pow2(format.emin())
            }
            _ => false,
        },
        ClassKind::Normal => match &v {
            OracleValue::Finite { magnitude, .. } => *magnitude >= pow2(format.emin()),
            _ => false,
        },
        ClassKind::Negative => !v.is_nan() && bits.bit(format.total_width() as u64 - 1),
        ClassKind::Positive => !v.is_nan() && !bits.bit(format.total_width() as u64 - 1),
    }
}

/// Exact decimal expansion of a finite pattern. Every binary float has one:
/// sig * 2^-k = sig * 5^k / 10^k.
pub fn exact_decimal(bits: &BigUint, format: FpFormat) -> Result<String, OracleError> {
    let v = decode(bits, format);
    let (negative, magnitude) = match &v {
        OracleValue::Finite {
            negative,
            magnitude,
        } => (*negative, magnitude),
        OracleValue::PosInf | OracleValue::NegInf => {
            return Err(OracleError::NotFinite("infinity"))
        }
        OracleValue::Nan => return Err(OracleError::NotFinite("NaN")),
    };
    if magnitude.is_zero() {
        return Ok(if negative {
            "-0".to_string()
        } else {
            "0".to_string()
        });
    }
    // magnitude = num / 2^k in lowest terms (the denominator of a binary
    // float is always a power of two).
    let num = magnitude.numer().magnitude().clone();
    let den = magnitude.denom().magnitude();
    let k = den.bits() - 1;
    debug_assert_eq!(&(BigUint::one() << k), den);

    let sign = if negative { "-" } else { "" };
    if k == 0 {
        return Ok(format!("{}{}", sign, num));
    }
    let scaled = num * BigUint::from(5u8).pow(k as u32);
    let digits = scaled.to_str_radix(10);
    let k = k as usize;
    let s = if digits.len() > k {
        let (int_part, frac_part) = digits.split_at(digits.len() - k);
        format!("{}{}.{}", sign, int_part, frac_part)
    } else {
        format!("{}0.{}{}", sign, "0".repeat(k - digits.len()), digits)
    };
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fpformat::formats;

    fn fp8() -> FpFormat {
        formats::fp8()
    }

    fn bits(v: u64) -> BigUint {
        BigUint::from(v)
    }

    #[test]
    fn decode_known_patterns() {
        // fp16 0x3000 is 0.125
        let v = decode(&bits(0x3000), formats::fp16());
        assert_eq!(
            v.to_rational().unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(8))
        );
        // fp8 0x01 is the smallest subnormal 2^-9 = 1/512
        let v = decode(&bits(0x01), fp8());
        assert_eq!(
            v.to_rational().unwrap(),
            BigRational::new(BigInt::from(1), BigInt::from(512))
        );
        // fp16 0x7C00 is +inf
        assert_eq!(decode(&bits(0x7C00), formats::fp16()), OracleValue::PosInf);
        // fp8 0x38 is 1.0, 0x77 is 240
        assert_eq!(
            decode(&bits(0x38), fp8()).to_rational().unwrap(),
            BigRational::from_integer(BigInt::from(1))
        );
        assert_eq!(
            decode(&bits(0x77), fp8()).to_rational().unwrap(),
            BigRational::from_integer(BigInt::from(240))
        );
    }

    #[test]
    fn round_exact_is_identity_on_representables() {
        let f = fp8();
        for pattern in 0u64..256 {
            let v = decode(&bits(pattern), f);
            if v.is_nan() {
                continue;
            }
            for rm in RoundingMode::ALL {
                assert_eq!(
                    round_exact(&v, f, rm),
                    bits(pattern),
                    "pattern {:#x}",
                    pattern
                );
            }
        }
    }

    #[test]
    fn round_exact_monotone_and_mode_envelope() {
        let f = fp8();
        // A grid of exact values straddling representables.
        let mut prev: Option<(BigRational, BigUint)> = None;
        for n in 0..4000i64 {
            let v = BigRational::new(BigInt::from(n), BigInt::from(16));
            let val = OracleValue::from_rational(v.clone());
            let rne = round_exact(&val, f, RoundingMode::Rne);
            let rtp = round_exact(&val, f, RoundingMode::Rtp);
            let rtn = round_exact(&val, f, RoundingMode::Rtn);
            // decode ordering: rtn <= rne <= rtp as rationals (all finite here
            // until overflow; skip once infinite).
            let d = |b: &BigUint| decode(b, f).to_rational();
            if let (Some(lo), Some(mid), Some(hi)) = (d(&rtn), d(&rne), d(&rtp)) {
                assert!(lo <= mid && mid <= hi, "envelope at n={}", n);
            }
            if let Some((pv, pb)) = prev {
                if pv <= v {
                    let (a, b) = (decode(&pb, f).to_rational(), d(&rne));
                    if let (Some(a), Some(b)) = (a, b) {
                        assert!(a <= b, "monotonicity at n={}", n);
                    }
                }
            }
            prev = Some((v, rne));
        }
    }

    #[test]
    fn overflow_rules_by_mode() {
        let f = fp8();
        let v480 = OracleValue::from_rational(BigRational::from_integer(BigInt::from(480)));
        assert_eq!(round_exact(&v480, f, RoundingMode::Rtz), bits(0x77));
        assert_eq!(round_exact(&v480, f, RoundingMode::Rne), bits(0x78));
        assert_eq!(round_exact(&v480, f, RoundingMode::Rtn), bits(0x77));
        assert_eq!(round_exact(&v480, f, RoundingMode::Rtp), bits(0x78));
        let neg = OracleValue::from_rational(BigRational::from_integer(BigInt::from(-480)));
        assert_eq!(round_exact(&neg, f, RoundingMode::Rtp), bits(0xF7));
        assert_eq!(round_exact(&neg, f, RoundingMode::Rtn), bits(0xF8));
    }

    #[test]
    fn signed_zero_results() {
        let f = fp8();
        // Tiny positive value rounds to +0 under RTZ/RTN, smallest subnormal
        // under RTP.
        let tiny =
            OracleValue::from_rational(BigRational::new(BigInt::one(), BigInt::from(100000)));
        assert_eq!(round_exact(&tiny, f, RoundingMode::Rtz), bits(0x00));
        assert_eq!(round_exact(&tiny, f, RoundingMode::Rtn), bits(0x00));
        assert_eq!(round_exact(&tiny, f, RoundingMode::Rtp), bits(0x01));
        let ntiny = tiny.negated();
        assert_eq!(round_exact(&ntiny, f, RoundingMode::Rtz), bits(0x80));
        assert_eq!(round_exact(&ntiny, f, RoundingMode::Rtp), bits(0x80));
        assert_eq!(round_exact(&ntiny, f, RoundingMode::Rtn), bits(0x81));
    }

    #[test]
    fn division_special_values() {
        let f = fp8();
        let one = OracleValue::from_rational(BigRational::from_integer(BigInt::one()));
        let pzero = OracleValue::zero(false);
        let nzero = OracleValue::zero(true);
        assert_eq!(div(&one, &pzero, f, RoundingMode::Rne), bits(0x78));
        assert_eq!(div(&one, &nzero, f, RoundingMode::Rne), bits(0xF8));
        assert_eq!(
            div(&pzero, &pzero, f, RoundingMode::Rne),
            canonical_nan_bits(f)
        );
        assert_eq!(
            mul(&OracleValue::PosInf, &pzero, f, RoundingMode::Rne),
            canonical_nan_bits(f)
        );
    }

    #[test]
    fn sqrt_nearest_by_neighbor_squaring() {
        let f = fp8();
        let two = OracleValue::from_rational(BigRational::from_integer(BigInt::from(2)));
        let r = sqrt(&two, f, RoundingMode::Rne);
        let pattern = u64::try_from(r).unwrap();
        let got = decode(&bits(pattern), f).to_rational().unwrap();
        let up = decode(&bits(pattern + 1), f).to_rational().unwrap();
        let down = decode(&bits(pattern - 1), f).to_rational().unwrap();
        // got is nearest to sqrt(2) iff sqrt(2) lies between the midpoints
        // with its neighbors, i.e. mid_down^2 <= 2 <= mid_up^2 exactly.
        let t = BigRational::from_integer(BigInt::from(2));
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        let mid_up = (&got + &up) * &half;
        let mid_down = (&down + &got) * &half;
        assert!(&mid_down * &mid_down <= t);
        assert!(t <= &mid_up * &mid_up);
        // sqrt(-1) is NaN; sqrt(-0) is -0.
        let neg_one = OracleValue::from_rational(BigRational::from_integer(BigInt::from(-1)));
        assert_eq!(sqrt(&neg_one, f, RoundingMode::Rne), canonical_nan_bits(f));
        assert_eq!(
            sqrt(&OracleValue::zero(true), f, RoundingMode::Rne),
            bits(0x80)
        );
    }

    #[test]
    fn exact_decimal_matches_known_strings() {
        // fp8 0x38 = 1
        assert_eq!(exact_decimal(&bits(0x38), fp8()).unwrap(), "1");
        // fp16 0x3000 = 0.125
        assert_eq!(
            exact_decimal(&bits(0x3000), formats::fp16()).unwrap(),
            "0.125"
        );
        // fp64 nearest to 0.1 under RNE has the canonical 55-digit expansion.
        let f64fmt = formats::fp64();
        let tenth = OracleValue::from_rational(BigRational::new(BigInt::one(), BigInt::from(10)));
        let b = round_exact(&tenth, f64fmt, RoundingMode::Rne);
        assert_eq!(
            exact_decimal(&b, f64fmt).unwrap(),
            "0.1000000000000000055511151231257827021181583404541015625"
        );
        let fifth = OracleValue::from_rational(BigRational::new(BigInt::one(), BigInt::from(5)));
        let b = round_exact(&fifth, f64fmt, RoundingMode::Rne);
        assert_eq!(
            exact_decimal(&b, f64fmt).unwrap(),
            "0.200000000000000011102230246251565404236316680908203125"
        );
    }

    #[test]
    fn sub_is_add_of_negation() {
        let f = fp8();
        for x in 0u64..=255 {
            let vx = decode(&bits(x), f);
            for y in (0u64..=255).step_by(7) {
                let vy = decode(&bits(y), f);
                assert_eq!(
                    sub(&vx, &vy, f, RoundingMode::Rne),
                    add(&vx, &vy.negated(), f, RoundingMode::Rne)
                );
            }
        }
    }

    #[test]
    fn to_int_truncates_toward_zero() {
        // -1.5 -> -1 (0xFF at width 8)
        let v = OracleValue::from_rational(BigRational::new(BigInt::from(-3), BigInt::from(2)));
        assert_eq!(to_int(&v, 8, true).unwrap(), bits(0xFF));
        // -0 -> 0 unsigned
        assert_eq!(to_int(&OracleValue::zero(true), 8, false).unwrap(), bits(0));
        // 1.5 -> 1 at width 4
        let v = OracleValue::from_rational(BigRational::new(BigInt::from(3), BigInt::from(2)));
        assert_eq!(to_int(&v, 4, false).unwrap(), bits(1));
        // NaN has no representation
        assert_eq!(to_int(&OracleValue::Nan, 8, true), None);
        // -0.9 truncates to 0, in range even unsigned
        let v = OracleValue::from_rational(BigRational::new(BigInt::from(-9), BigInt::from(10)));
        assert_eq!(to_int(&v, 8, false).unwrap(), bits(0));
    }

    #[test]
    fn from_int_examples() {
        let f = fp8();
        assert_eq!(
            from_int(&bits(3), 8, true, f, RoundingMode::Rne),
            bits(0x44)
        );
        // -128 = -2^7 is exactly representable at fp8: 0xF0.
        assert_eq!(
            from_int(&bits(0x80), 8, true, f, RoundingMode::Rne),
            bits(0xF0)
        );
        // unsigned 255 rounds to 256 which overflows fp8's max 240 -> +inf
        assert_eq!(
            from_int(&bits(255), 8, false, f, RoundingMode::Rne),
            bits(0x78)
        );
    }
}
