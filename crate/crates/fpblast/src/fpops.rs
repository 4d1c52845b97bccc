//! Floating-point operators as bit-vector circuit builders: classification,
//! comparison, conversion, and arithmetic. Every operator handles special
//! values first (except absolute value and negation, which are pure sign-bit
//! manipulation) and produces only canonical NaNs.

use thiserror::Error;

use crate::bitvec::expr::BvExpr;
use crate::bitvec::Context;
use crate::fpformat::{mk_special, FpBits, FpFormat, RoundingMode, SpecialKind};
use crate::ir::*;
use crate::pipeline::{pack, round, round_increment, unpack, Unpacked};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum FpOpError {
    #[error("operand formats differ: {left} vs {right}")]
    FormatMismatch { left: FpFormat, right: FpFormat },
    #[error("conversion target width must be at least 1")]
    ZeroTargetWidth,
}

fn check_formats(x: &FpBits, y: &FpBits) -> Result<(), FpOpError> {
    if x.format() != y.format() {
        return Err(FpOpError::FormatMismatch {
            left: x.format(),
            right: y.format(),
        });
    }
    Ok(())
}

/// Classification predicates. The first five partition every bit pattern;
/// negative/positive are sign tests that are false on NaN.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpClassKind {
    Normal,
    Subnormal,
    Zero,
    Inf,
    Nan,
    Negative,
    Positive,
}

impl FpClassKind {
    pub const ALL: [FpClassKind; 7] = [
        FpClassKind::Normal,
        FpClassKind::Subnormal,
        FpClassKind::Zero,
        FpClassKind::Inf,
        FpClassKind::Nan,
        FpClassKind::Negative,
        FpClassKind::Positive,
    ];
}

/// Field-level predicates shared by classification and comparison.
struct Fields {
    sign: BvExpr,
    exp_zero: BvExpr,
    exp_ones: BvExpr,
    sig_zero: BvExpr,
    /// Exponent and significand as one magnitude (everything below the sign).
    magnitude: BvExpr,
}

fn fields(x: &FpBits) -> Fields {
    let f = x.format();
    let w = f.total_width();
    let bits = x.bits();
    let exp_field = extract(bits, w - 2, f.sb());
    let sig_field = extract(bits, f.sb() - 1, 0);
    Fields {
        sign: bit(bits, w - 1),
        exp_zero: is_zero(&exp_field),
        exp_ones: eq(&exp_field, &ones(f.eb())),
        sig_zero: is_zero(&sig_field),
        magnitude: extract(bits, w - 2, 0),
    }
}

fn is_nan_bits(x: &FpBits) -> BvExpr {
    let f = fields(x);
    b_and(&f.exp_ones, &b_not(&f.sig_zero))
}

fn is_zero_bits(x: &FpBits) -> BvExpr {
    let f = fields(x);
    b_and(&f.exp_zero, &f.sig_zero)
}

/// Classification operator: a width-1 predicate over the packed layout.
pub fn fp_is(kind: FpClassKind, x: &FpBits) -> BvExpr {
    let f = fields(x);
    match kind {
        FpClassKind::Zero => b_and(&f.exp_zero, &f.sig_zero),
        FpClassKind::Subnormal => b_and(&f.exp_zero, &b_not(&f.sig_zero)),
        FpClassKind::Normal => b_and(&b_not(&f.exp_zero), &b_not(&f.exp_ones)),
        FpClassKind::Inf => b_and(&f.exp_ones, &f.sig_zero),
        FpClassKind::Nan => b_and(&f.exp_ones, &b_not(&f.sig_zero)),
        FpClassKind::Negative => b_and(&f.sign, &b_not(&is_nan_bits(x))),
        FpClassKind::Positive => b_and(&b_not(&f.sign), &b_not(&is_nan_bits(x))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FpCmpKind {
    Lt,
    Le,
    Gt,
    Ge,
    Eq,
}

impl FpCmpKind {
    pub const ALL: [FpCmpKind; 5] = [
        FpCmpKind::Lt,
        FpCmpKind::Le,
        FpCmpKind::Gt,
        FpCmpKind::Ge,
        FpCmpKind::Eq,
    ];
}

/// IEEE comparison. Any NaN operand makes every predicate false; positive
/// and negative zero compare equal. Greater-than and the non-strict forms
/// are rewritten in terms of less-than and equality.
pub fn fp_compare(kind: FpCmpKind, x: &FpBits, y: &FpBits) -> Result<BvExpr, FpOpError> {
    check_formats(x, y)?;
    match kind {
        FpCmpKind::Lt => Ok(lt_core(x, y)),
        FpCmpKind::Eq => Ok(eq_core(x, y)),
        FpCmpKind::Le => Ok(b_or(&lt_core(x, y), &eq_core(x, y))),
        FpCmpKind::Gt => Ok(lt_core(y, x)),
        FpCmpKind::Ge => Ok(b_or(&lt_core(y, x), &eq_core(y, x))),
    }
}

fn eq_core(x: &FpBits, y: &FpBits) -> BvExpr {
    let no_nan = b_and(&b_not(&is_nan_bits(x)), &b_not(&is_nan_bits(y)));
    let both_zero = b_and(&is_zero_bits(x), &is_zero_bits(y));
    let bit_equal = eq(x.bits(), y.bits());
    b_and(&no_nan, &b_or(&bit_equal, &both_zero))
}

fn lt_core(x: &FpBits, y: &FpBits) -> BvExpr {
    let fx = fields(x);
    let fy = fields(y);
    let no_nan = b_and(&b_not(&is_nan_bits(x)), &b_not(&is_nan_bits(y)));
    let both_zero = b_and(&is_zero_bits(x), &is_zero_bits(y));
    // Same sign: the packed magnitude orders finite values and infinities;
    // the order flips for negatives. Different signs: x < y iff x negative
    // (the both-zero case is excluded separately).
    let same_sign = eq(&fx.sign, &fy.sign);
    let mag_lt = ult(&fx.magnitude, &fy.magnitude);
    let mag_gt = ult(&fy.magnitude, &fx.magnitude);
    let same_sign_lt = ite(&fx.sign, &mag_gt, &mag_lt);
    let ordered = ite(&same_sign, &same_sign_lt, &fx.sign);
    b_and(&no_nan, &b_and(&b_not(&both_zero), &ordered))
}

/// Absolute value: clears the sign bit. No special-value handling; NaN
/// payloads pass through unchanged.
pub fn fp_abs(x: &FpBits) -> FpBits {
    let f = x.format();
    let w = f.total_width();
    let body = extract(x.bits(), w - 2, 0);
    let bits = concat(&ff(), &body);
    crate::fpformat::fp_from_ieeebv(&bits, f).expect("width preserved")
}

/// Negation: flips the sign bit. No special-value handling.
pub fn fp_neg(x: &FpBits) -> FpBits {
    let f = x.format();
    let w = f.total_width();
    let body = extract(x.bits(), w - 2, 0);
    let bits = concat(&b_not(&bit(x.bits(), w - 1)), &body);
    crate::fpformat::fp_from_ieeebv(&bits, f).expect("width preserved")
}

/// Signed zero constant with a symbolic sign bit.
fn signed_zero(sign: &BvExpr, f: FpFormat) -> BvExpr {
    concat(sign, &cst(f.eb() + f.sb(), 0))
}

fn signed_inf(sign: &BvExpr, f: FpFormat) -> BvExpr {
    concat(sign, &concat(&ones(f.eb()), &cst(f.sb(), 0)))
}

fn nan_bits(f: FpFormat) -> BvExpr {
    mk_special(f, SpecialKind::Nan).bits().clone()
}

/// Zero sign under exact cancellation: negative only under RTN.
fn cancellation_sign(rm: &BvExpr) -> BvExpr {
    eq(rm, &cst(3, RoundingMode::Rtn.code()))
}

/// Resize a small non-negative count expression to an exact width.
fn resize_count(a: &BvExpr, width: u32) -> BvExpr {
    if a.width() >= width {
        extract(a, width - 1, 0)
    } else {
        zext_to(a, width)
    }
}

/// One operand of the magnitude-add core.
struct AddOperand {
    sign: BvExpr,
    exponent: BvExpr,
    significand: BvExpr,
}

/// Magnitude addition/subtraction core shared by add and fma.
///
/// Operands live on a common grid: value_i = sig_i / 2^(ws-1) * 2^exp_i,
/// and whenever exp_a > exp_b the first operand must be the larger in
/// magnitude (guaranteed by normalized significands, or by the shared emin
/// grid of raw unpacked operands). Returns an Unpacked ready for `round`,
/// with is_zero set on exact cancellation and the sign of that zero chosen
/// by the rounding mode.
fn add_core(a: &AddOperand, b: &AddOperand, rm: &BvExpr, format: FpFormat) -> Unpacked {
    let ws = a.significand.width();
    assert_eq!(ws, b.significand.width());
    let big_w = ws + 3;
    // Wide enough for the clz subtraction over big_w positions.
    let count_bits = 32 - big_w.leading_zeros();
    let we = a.exponent.width().max(b.exponent.width()).max(count_bits) + 2;

    let ea = sext_to(&a.exponent, we);
    let eb_ = sext_to(&b.exponent, we);

    // Order by (exponent, significand); ties in both may go either way.
    let a_smaller = b_or(
        &slt(&ea, &eb_),
        &b_and(&eq(&ea, &eb_), &ult(&a.significand, &b.significand)),
    );
    let sign_big = ite(&a_smaller, &b.sign, &a.sign);
    let sign_small = ite(&a_smaller, &a.sign, &b.sign);
    let exp_big = ite(&a_smaller, &eb_, &ea);
    let exp_small = ite(&a_smaller, &ea, &eb_);
    let sig_big = ite(&a_smaller, &b.significand, &a.significand);
    let sig_small = ite(&a_smaller, &a.significand, &b.significand);

    // Registers: [carry | units+fraction (ws bits) | guard | sticky].
    let big = zext_to(&concat(&sig_big, &cst(2, 0)), big_w);
    let small = zext_to(&concat(&sig_small, &cst(2, 0)), big_w);

    let d = sub(&exp_big, &exp_small);
    let (small_aligned, lost) = lshr_sticky(&small, &d);

    // Keep the shifted-out residue out of the register: on the subtract
    // path it acts as a borrow, so every register bit stays exact; the
    // value below the register is nonzero exactly when `lost` is set.
    let same_sign = eq(&sign_big, &sign_small);
    let added = add(&big, &small_aligned);
    let subbed = sub(&sub(&big, &small_aligned), &zext_to(&lost, big_w));
    let sum = ite(&same_sign, &added, &subbed);

    let exact_zero = is_zero(&sum);
    let zero_sign = cancellation_sign(rm);

    // Normalize the leading one to the top of the register. Cancellation
    // beyond one bit only happens for exact alignments (lost = 0), so the
    // unknown residue never climbs past the sticky positions.
    let nz = clz(&sum);
    let normalized = shl_dyn(&sum, &nz);
    let exponent = sub(&add(&exp_big, &cst(we, 1)), &resize_count(&nz, we));
    let significand = or(&normalized, &zext_to(&lost, big_w));

    Unpacked {
        sign: ite(&exact_zero, &zero_sign, &sign_big),
        exponent,
        significand,
        is_nan: ff(),
        is_inf: ff(),
        is_zero: exact_zero,
        format,
    }
}

/// Addition. Special cases: NaN propagates (canonically), opposite
/// infinities are invalid, zero operands pass the other operand through,
/// and exact cancellation yields +0 except under RTN.
pub fn fp_add(rm: RoundingMode, x: &FpBits, y: &FpBits) -> Result<FpBits, FpOpError> {
    fp_add_rm(&rm.encoding(), x, y)
}

/// Addition with an arbitrary 3-bit rounding-mode expression (unused
/// encodings behave as RNE).
pub fn fp_add_rm(rm: &BvExpr, x: &FpBits, y: &FpBits) -> Result<FpBits, FpOpError> {
    check_formats(x, y)?;
    let f = x.format();
    let ux = unpack(x, false);
    let uy = unpack(y, false);

    let core = add_core(
        &AddOperand {
            sign: ux.sign.clone(),
            exponent: ux.exponent.clone(),
            significand: ux.significand.clone(),
        },
        &AddOperand {
            sign: uy.sign.clone(),
            exponent: uy.exponent.clone(),
            significand: uy.significand.clone(),
        },
        rm,
        f,
    );
    let numeric = pack(&round(&core, rm, f), f).bits().clone();

    let opposite_inf = b_and(
        &b_and(&ux.is_inf, &uy.is_inf),
        &b_not(&eq(&ux.sign, &uy.sign)),
    );
    let any_nan = b_or(&ux.is_nan, &uy.is_nan);
    let nan_out = b_or(&any_nan, &opposite_inf);

    let inf_out = b_or(&ux.is_inf, &uy.is_inf);
    let inf_sign = ite(&ux.is_inf, &ux.sign, &uy.sign);

    let both_zero = b_and(&ux.is_zero, &uy.is_zero);
    let same_sign = eq(&ux.sign, &uy.sign);
    let zero_zero = ite(
        &same_sign,
        &signed_zero(&ux.sign, f),
        &signed_zero(&cancellation_sign(rm), f),
    );

    let bits = ite(
        &nan_out,
        &nan_bits(f),
        &ite(
            &inf_out,
            &signed_inf(&inf_sign, f),
            &ite(
                &both_zero,
                &zero_zero,
                &ite(&ux.is_zero, y.bits(), &ite(&uy.is_zero, x.bits(), &numeric)),
            ),
        ),
    );
    Ok(crate::fpformat::fp_from_ieeebv(&bits, f).expect("result width"))
}

/// Subtraction is addition of the negated right-hand side.
pub fn fp_sub(rm: RoundingMode, x: &FpBits, y: &FpBits) -> Result<FpBits, FpOpError> {
    fp_add(rm, x, &fp_neg(y))
}

/// Multiplication: doubled significands, summed exponents, xor sign.
/// Infinity times zero is invalid.
pub fn fp_mul(rm: RoundingMode, x: &FpBits, y: &FpBits) -> Result<FpBits, FpOpError> {
    fp_mul_rm(&rm.encoding(), x, y)
}

pub fn fp_mul_rm(rm: &BvExpr, x: &FpBits, y: &FpBits) -> Result<FpBits, FpOpError> {
    check_formats(x, y)?;
    let f = x.format();
    let ux = unpack(x, true);
    let uy = unpack(y, true);
    let sign = xor(&ux.sign, &uy.sign);

    let (prod, exponent) = multiply_significands(&ux, &uy);
    let core = Unpacked {
        sign: sign.clone(),
        exponent,
        significand: prod,
        is_nan: ff(),
        is_inf: ff(),
        is_zero: ff(),
        format: f,
    };
    let numeric = pack(&round(&core, rm, f), f).bits().clone();

    let inf_in = b_or(&ux.is_inf, &uy.is_inf);
    let zero_in = b_or(&ux.is_zero, &uy.is_zero);
    let nan_out = b_or(&b_or(&ux.is_nan, &uy.is_nan), &b_and(&inf_in, &zero_in));

    let bits = ite(
        &nan_out,
        &nan_bits(f),
        &ite(
            &inf_in,
            &signed_inf(&sign, f),
            &ite(&zero_in, &signed_zero(&sign, f), &numeric),
        ),
    );
    Ok(crate::fpformat::fp_from_ieeebv(&bits, f).expect("result width"))
}

/// Exact product of two normalized significands: a doubled-width register
/// with the leading bit normalized to the top, plus the matching exponent.
fn multiply_significands(ux: &Unpacked, uy: &Unpacked) -> (BvExpr, BvExpr) {
    let sb = ux.format.sb();
    let pw = 2 * (sb + 1);
    let p = mul(&zext_to(&ux.significand, pw), &zext_to(&uy.significand, pw));
    let we = ux.exp_width().max(uy.exp_width()) + 2;
    let esum = add(&sext_to(&ux.exponent, we), &sext_to(&uy.exponent, we));
    // A product of values in [1,2) lies in [1,4): at most one shift.
    let top = bit(&p, pw - 1);
    let normalized = ite(&top, &p, &shl(&p, &cst(pw, 1)));
    let exponent = ite(&top, &add(&esum, &cst(we, 1)), &esum);
    (normalized, exponent)
}

/// Division: long division of significands with the remainder folded into
/// sticky. x/±0 is ±inf for finite nonzero x; 0/0 and inf/inf are invalid.
pub fn fp_div(rm: RoundingMode, x: &FpBits, y: &FpBits) -> Result<FpBits, FpOpError> {
    fp_div_rm(&rm.encoding(), x, y)
}

pub fn fp_div_rm(rm: &BvExpr, x: &FpBits, y: &FpBits) -> Result<FpBits, FpOpError> {
    check_formats(x, y)?;
    let f = x.format();
    let sb = f.sb();
    let ux = unpack(x, true);
    let uy = unpack(y, true);
    let sign = xor(&ux.sign, &uy.sign);

    // Q = (mx << (sb+3)) / my lies in (2^(sb+2), 2^(sb+4)): the units bit
    // plus sb+3 fraction bits, with at most one normalization shift.
    let dw = 2 * sb + 4;
    let numerator = shl(&zext_to(&ux.significand, dw), &cst(dw, (sb + 3) as u64));
    let denominator = zext_to(&uy.significand, dw);
    let q_wide = udiv(&numerator, &denominator);
    let r = urem(&numerator, &denominator);

    let qw = sb + 4;
    let q = extract(&q_wide, qw - 1, 0);
    let we = ux.exp_width().max(uy.exp_width()) + 2;
    let ediff = sub(&sext_to(&ux.exponent, we), &sext_to(&uy.exponent, we));

    let top = bit(&q, qw - 1);
    let normalized = ite(&top, &q, &shl(&q, &cst(qw, 1)));
    let exponent = ite(&top, &ediff, &sub(&ediff, &cst(we, 1)));
    // The remainder is sticky; the lowest bit sits below the guard position.
    let significand = or(&normalized, &zext_to(&nonzero(&r), qw));

    let core = Unpacked {
        sign: sign.clone(),
        exponent,
        significand,
        is_nan: ff(),
        is_inf: ff(),
        is_zero: ff(),
        format: f,
    };
    let numeric = pack(&round(&core, rm, f), f).bits().clone();

    let nan_out = b_or(
        &b_or(&ux.is_nan, &uy.is_nan),
        &b_or(
            &b_and(&ux.is_inf, &uy.is_inf),
            &b_and(&ux.is_zero, &uy.is_zero),
        ),
    );
    let inf_out = b_or(
        &b_and(&ux.is_inf, &b_not(&uy.is_inf)),
        &b_and(&uy.is_zero, &b_not(&ux.is_zero)),
    );
    let zero_out = b_or(
        &b_and(&ux.is_zero, &b_not(&uy.is_zero)),
        &b_and(&uy.is_inf, &b_not(&ux.is_inf)),
    );

    let bits = ite(
        &nan_out,
        &nan_bits(f),
        &ite(
            &inf_out,
            &signed_inf(&sign, f),
            &ite(&zero_out, &signed_zero(&sign, f), &numeric),
        ),
    );
    Ok(crate::fpformat::fp_from_ieeebv(&bits, f).expect("result width"))
}

/// Fused multiply-add: x*y + z with a single rounding at the end. The
/// product is exact in a doubled register; the addend joins on the same
/// grid before the shared magnitude-add core.
pub fn fp_fma(rm: RoundingMode, x: &FpBits, y: &FpBits, z: &FpBits) -> Result<FpBits, FpOpError> {
    check_formats(x, y)?;
    check_formats(x, z)?;
    let rm = rm.encoding();
    let f = x.format();
    let sb = f.sb();
    let ux = unpack(x, true);
    let uy = unpack(y, true);
    let uz = unpack(z, true);

    let psign = xor(&ux.sign, &uy.sign);
    let (prod, pexp) = multiply_significands(&ux, &uy);
    let pw = 2 * (sb + 1);
    // Addend on the product grid: exact left shift.
    let zsig = concat(&uz.significand, &cst(sb + 1, 0));
    debug_assert_eq!(zsig.width(), pw);

    let core = add_core(
        &AddOperand {
            sign: psign.clone(),
            exponent: pexp.clone(),
            significand: prod.clone(),
        },
        &AddOperand {
            sign: uz.sign.clone(),
            exponent: sext_to(&uz.exponent, pexp.width()),
            significand: zsig,
        },
        &rm,
        f,
    );
    let numeric = pack(&round(&core, &rm, f), f).bits().clone();

    // Product-only path for a zero addend (the core's ordering assumes
    // nonzero normalized operands).
    let prod_only = Unpacked {
        sign: psign.clone(),
        exponent: pexp,
        significand: prod,
        is_nan: ff(),
        is_inf: ff(),
        is_zero: ff(),
        format: f,
    };
    let prod_bits = pack(&round(&prod_only, &rm, f), f).bits().clone();

    let p_invalid = b_or(
        &b_and(&ux.is_inf, &uy.is_zero),
        &b_and(&ux.is_zero, &uy.is_inf),
    );
    let p_inf = b_or(&ux.is_inf, &uy.is_inf);
    let p_zero = b_or(&ux.is_zero, &uy.is_zero);
    let any_nan = b_or(&b_or(&ux.is_nan, &uy.is_nan), &uz.is_nan);
    let inf_clash = b_and(&b_and(&p_inf, &uz.is_inf), &b_not(&eq(&psign, &uz.sign)));
    let nan_out = b_or(&b_or(&any_nan, &p_invalid), &inf_clash);

    let inf_out = b_or(&p_inf, &uz.is_inf);
    let inf_sign = ite(&p_inf, &psign, &uz.sign);

    let both_zero = b_and(&p_zero, &uz.is_zero);
    let zero_zero = ite(
        &eq(&psign, &uz.sign),
        &signed_zero(&psign, f),
        &signed_zero(&cancellation_sign(&rm), f),
    );

    let bits = ite(
        &nan_out,
        &nan_bits(f),
        &ite(
            &inf_out,
            &signed_inf(&inf_sign, f),
            &ite(
                &both_zero,
                &zero_zero,
                &ite(&p_zero, z.bits(), &ite(&uz.is_zero, &prod_bits, &numeric)),
            ),
        ),
    );
    Ok(crate::fpformat::fp_from_ieeebv(&bits, f).expect("result width"))
}

/// Square root by the restoring digit recurrence. The result never
/// overflows or underflows; negative inputs other than -0 are invalid.
pub fn fp_sqrt(rm: RoundingMode, x: &FpBits) -> FpBits {
    let rm = rm.encoding();
    let f = x.format();
    let sb = f.sb();
    let u = unpack(x, true);

    // Make the exponent even; the significand absorbs the parity bit.
    let parity = bit(&u.exponent, 0);
    let we = u.exp_width();
    let e_even = sub(&u.exponent, &zext_to(&parity, we));
    let exponent = ashr(&e_even, &cst(we, 1));

    let m = ite(
        &parity,
        &concat(&u.significand, &cst(1, 0)),
        &zext_to(&u.significand, sb + 2),
    );
    // Radicand m' * 2^(sb+4), consumed two bits per iteration.
    let xw = 2 * sb + 6;
    let radicand = concat(&m, &cst(sb + 4, 0));
    debug_assert_eq!(radicand.width(), xw);

    let qw = sb + 3;
    let rw = sb + 5;
    let mut rem = cst(rw, 0);
    let mut root = cst(qw, 0);
    for i in 0..qw {
        let hi = xw - 1 - 2 * i;
        let pair = extract(&radicand, hi, hi - 1);
        rem = concat(&extract(&rem, rw - 3, 0), &pair);
        let trial = zext_to(&concat(&root, &cst(2, 0b01)), rw);
        let ge = ule(&trial, &rem);
        rem = ite(&ge, &sub(&rem, &trial), &rem);
        root = concat(&extract(&root, qw - 2, 0), &ge);
    }
    // The root has its top bit set by construction; the remainder is sticky.
    let significand = or(&root, &zext_to(&nonzero(&rem), qw));

    let core = Unpacked {
        sign: ff(),
        exponent,
        significand,
        is_nan: ff(),
        is_inf: ff(),
        is_zero: ff(),
        format: f,
    };
    let numeric = pack(&round(&core, &rm, f), f).bits().clone();

    let nan_out = b_or(&u.is_nan, &b_and(&u.sign, &b_not(&u.is_zero)));
    let bits = ite(
        &nan_out,
        &nan_bits(f),
        &ite(
            &u.is_inf,
            &signed_inf(&ff(), f),
            &ite(&u.is_zero, x.bits(), &numeric),
        ),
    );
    crate::fpformat::fp_from_ieeebv(&bits, f).expect("result width")
}

/// Round to the nearest integral value in the same format. Specials pass
/// through; the sign of zero results is preserved.
pub fn fp_round_to_integral(rm: RoundingMode, x: &FpBits) -> FpBits {
    let rm = rm.encoding();
    let f = x.format();
    let sb = f.sb();
    let u = unpack(x, false);
    let we = u.exp_width();

    // Number of fractional significand bits at this exponent.
    let k = sub(&cst_i(we, sb as i64), &u.exponent);
    let integral = sle(&k, &cst(we, 0));

    // Truncated integer part, with guard and sticky from the fraction. The
    // clamp keeps the shifts in range; for k > sb+1 the integer part is 0
    // and everything (hidden bit included) lands in guard/sticky.
    let kc = ite(
        &slt(&cst_i(we, (sb + 2) as i64), &k),
        &cst_i(we, (sb + 2) as i64),
        &k,
    );
    let k_minus_1 = sub(&kc, &cst(we, 1));
    let (tmp, sticky) = lshr_sticky(&u.significand, &k_minus_1);
    let guard = bit(&tmp, 0);
    let q = lshr(&tmp, &cst(sb + 1, 1));

    let inc = round_increment(&rm, &u.sign, &guard, &sticky, &bit(&q, 0));
    let r = add(&zext_to(&q, sb + 2), &zext_to(&inc, sb + 2));
    let r_zero = is_zero(&r);

    // Re-normalize the integer into hidden-bit form.
    let nz = clz(&r);
    let rn = shl_dyn(&r, &nz);
    let exponent = sub(&cst_i(we, (sb + 1) as i64), &resize_count(&nz, we));
    // Feed through the round stage with zero guard/sticky: a no-op except
    // for exponent-overflow handling on formats with tiny exponent ranges.
    let out = Unpacked {
        sign: u.sign.clone(),
        exponent,
        significand: concat(&extract(&rn, sb + 1, 1), &cst(1, 0)),
        is_nan: ff(),
        is_inf: ff(),
        is_zero: ff(),
        format: f,
    };
    let numeric = pack(&round(&out, &rm, f), f).bits().clone();

    let special = b_or(&b_or(&u.is_nan, &u.is_inf), &u.is_zero);
    let special_bits = ite(&u.is_nan, &nan_bits(f), x.bits());
    let bits = ite(
        &special,
        &special_bits,
        &ite(
            &integral,
            x.bits(),
            &ite(&r_zero, &signed_zero(&u.sign, f), &numeric),
        ),
    );
    crate::fpformat::fp_from_ieeebv(&bits, f).expect("result width")
}

/// Conversion to a signed or unsigned bit-vector, always truncating toward
/// zero. Out-of-range, NaN, and infinite inputs produce a deterministic
/// fresh free variable, so the result is unconstrained exactly when the
/// conversion is invalid. Minus zero converts to zero.
pub fn fp_to_sbv(ctx: &mut Context, x: &FpBits, width: u32) -> Result<BvExpr, FpOpError> {
    fp_to_bv(ctx, x, width, true)
}

pub fn fp_to_ubv(ctx: &mut Context, x: &FpBits, width: u32) -> Result<BvExpr, FpOpError> {
    fp_to_bv(ctx, x, width, false)
}

fn fp_to_bv(ctx: &mut Context, x: &FpBits, width: u32, signed: bool) -> Result<BvExpr, FpOpError> {
    if width == 0 {
        return Err(FpOpError::ZeroTargetWidth);
    }
    let f = x.format();
    let sb = f.sb();
    let u = unpack(x, false);
    // Wide enough that the target width itself fits as a signed constant.
    let we = u.exp_width().max(34 - width.leading_zeros());
    let exponent = sext_to(&u.exponent, we);

    // |x| >= 2^width is out of range even for the signed minimum.
    let e_too_big = sle(&cst_i(we, width as i64), &exponent);

    let mw = width.max(sb + 1) + 1;
    let m0 = zext_to(&u.significand, mw);
    let left = slt(&cst_i(we, sb as i64), &exponent);
    let lsh = ite(&left, &sub(&exponent, &cst_i(we, sb as i64)), &cst(we, 0));
    let rsh = ite(&left, &cst(we, 0), &sub(&cst_i(we, sb as i64), &exponent));
    // Right shifts truncate toward zero; the only lossy left shifts are in
    // cases flagged out of range above.
    let m = ite(
        &left,
        &shl_dyn(&m0, &clamp_count(&lsh, mw)),
        &lshr(&m0, &clamp_count(&rsh, mw)),
    );

    let in_range = if signed {
        let limit = cst_big(mw, num_bigint::BigUint::from(1u8) << (width - 1));
        b_or(&ult(&m, &limit), &b_and(&u.sign, &eq(&m, &limit)))
    } else {
        b_or(&b_not(&u.sign), &is_zero(&m))
    };
    let valid = b_and(
        &b_not(&b_or(&u.is_nan, &u.is_inf)),
        &b_and(&b_not(&e_too_big), &in_range),
    );

    let mag = extract(&m, width - 1, 0);
    let value = ite(&u.sign, &neg(&mag), &mag);
    let fresh = ctx.fresh_var("fpcast_fresh", width);
    Ok(ite(&valid, &value, &fresh))
}

/// Saturate a (possibly negative-free, non-negative) count into the width
/// of the operand it will shift, so truncation cannot alias a large count.
fn clamp_count(a: &BvExpr, width: u32) -> BvExpr {
    let w = a.width().max(width);
    let aw = zext_to(a, w);
    let lim = cst(w, width as u64);
    let clamped = ite(&ult(&aw, &lim), &aw, &lim);
    extract(&clamped, width - 1, 0)
}

/// Convert between floating-point formats under a rounding mode. Specials
/// are always convertible (NaN becomes the target's canonical NaN); finite
/// values re-round, possibly to infinity when narrowing.
pub fn fp_to_fp(x: &FpBits, target: FpFormat, rm: RoundingMode) -> FpBits {
    let rm = rm.encoding();
    let u = unpack(x, true);
    let sb_t = target.sb();

    let sig = if u.sig_width() >= sb_t + 3 {
        u.significand.clone()
    } else {
        concat(&u.significand, &cst(sb_t + 3 - u.sig_width(), 0))
    };
    let we = u.exp_width().max(target.eb() + 2) + 1;
    let widened = Unpacked {
        sign: u.sign.clone(),
        exponent: sext_to(&u.exponent, we),
        significand: sig,
        is_nan: u.is_nan.clone(),
        is_inf: u.is_inf.clone(),
        is_zero: u.is_zero.clone(),
        format: target,
    };
    pack(&round(&widened, &rm, target), target)
}

/// Convert a signed or unsigned bit-vector to the nearest representable
/// float. Zero input yields +0.
pub fn sbv_to_fp(bits: &BvExpr, in_signed: bool, format: FpFormat, rm: RoundingMode) -> FpBits {
    let rm = rm.encoding();
    let w = bits.width();
    let sign = if in_signed { msb(bits) } else { ff() };
    let magnitude = if in_signed {
        ite(&sign, &neg(bits), bits)
    } else {
        bits.clone()
    };

    let zero_in = is_zero(&magnitude);
    let nz = clz(&magnitude);
    let normalized = shl_dyn(&magnitude, &nz);

    // At least two extra low bits so rounding sees exact guard and sticky.
    let sw = w.max(format.sb() + 3);
    let sig = if sw > w {
        concat(&normalized, &cst(sw - w, 0))
    } else {
        normalized
    };
    let count_bits = 32 - w.leading_zeros();
    let we = (format.eb() + 2).max(count_bits + 2);
    let exponent = sub(&cst_i(we, (w - 1) as i64), &resize_count(&nz, we));

    let u = Unpacked {
        sign,
        exponent,
        significand: sig,
        is_nan: ff(),
        is_inf: ff(),
        is_zero: zero_in,
        format,
    };
    // is_zero forces the zero encoding in pack; the sign is 0 for a zero
    // pattern whether or not the input is signed, giving +0.
    pack(&round(&u, &rm, format), format)
}
