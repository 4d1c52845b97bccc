//! Crate-internal circuit building helpers. These wrap the checked
//! constructors and panic on width violations: inside the pipeline all widths
//! are invariants of the construction, so a failure is a bug, not an input
//! error.

use num_bigint::BigUint;

use crate::bitvec::expr::{self, BvExpr};

pub(crate) fn cst(width: u32, value: u64) -> BvExpr {
    expr::cst(width, value)
}

/// Signed constant, wrapped into `width` bits.
pub(crate) fn cst_i(width: u32, value: i64) -> BvExpr {
    let m = if width >= 64 {
        u64::MAX
    } else {
        (1u64 << width) - 1
    };
    expr::cst(width, (value as u64) & m)
}

pub(crate) fn cst_big(width: u32, value: BigUint) -> BvExpr {
    expr::mk_const(width, value).expect("constant fits width")
}

pub(crate) fn ones(width: u32) -> BvExpr {
    expr::ones(width)
}

macro_rules! wrap2 {
    ($name:ident) => {
        pub(crate) fn $name(a: &BvExpr, b: &BvExpr) -> BvExpr {
            expr::$name(a, b).expect(concat!(stringify!($name), ": operand widths"))
        }
    };
}

wrap2!(concat);
wrap2!(and);
wrap2!(or);
wrap2!(xor);
wrap2!(add);
wrap2!(sub);
wrap2!(mul);
wrap2!(udiv);
wrap2!(urem);
wrap2!(shl);
wrap2!(lshr);
wrap2!(ashr);
wrap2!(eq);
wrap2!(ult);
wrap2!(ule);
wrap2!(slt);
wrap2!(sle);

pub(crate) fn not(a: &BvExpr) -> BvExpr {
    expr::not(a).expect("not")
}

pub(crate) fn neg(a: &BvExpr) -> BvExpr {
    expr::neg(a).expect("neg")
}

pub(crate) fn redor(a: &BvExpr) -> BvExpr {
    expr::redor(a).expect("redor")
}

pub(crate) fn extract(a: &BvExpr, hi: u32, lo: u32) -> BvExpr {
    expr::extract(a, hi, lo).expect("extract bounds")
}

pub(crate) fn zext(a: &BvExpr, extra: u32) -> BvExpr {
    expr::zero_extend(a, extra).expect("zero_extend")
}

pub(crate) fn sext(a: &BvExpr, extra: u32) -> BvExpr {
    expr::sign_extend(a, extra).expect("sign_extend")
}

pub(crate) fn ite(c: &BvExpr, t: &BvExpr, e: &BvExpr) -> BvExpr {
    expr::ite(c, t, e).expect("ite widths")
}

pub(crate) fn clz(a: &BvExpr) -> BvExpr {
    expr::count_leading_zeros(a).expect("clz")
}

/// Zero-extend (or keep) to an exact target width.
pub(crate) fn zext_to(a: &BvExpr, width: u32) -> BvExpr {
    assert!(width >= a.width(), "zext_to shrinks");
    zext(a, width - a.width())
}

/// Sign-extend (or keep) to an exact target width.
pub(crate) fn sext_to(a: &BvExpr, width: u32) -> BvExpr {
    assert!(width >= a.width(), "sext_to shrinks");
    if width == a.width() {
        a.clone()
    } else {
        sext(a, width - a.width())
    }
}

pub(crate) fn bit(a: &BvExpr, i: u32) -> BvExpr {
    extract(a, i, i)
}

pub(crate) fn msb(a: &BvExpr) -> BvExpr {
    bit(a, a.width() - 1)
}

pub(crate) fn is_zero(a: &BvExpr) -> BvExpr {
    eq(a, &cst(a.width(), 0))
}

pub(crate) fn nonzero(a: &BvExpr) -> BvExpr {
    redor(a)
}

pub(crate) fn tt() -> BvExpr {
    cst(1, 1)
}

pub(crate) fn ff() -> BvExpr {
    cst(1, 0)
}

/// Shift right with all shifted-out bits folded into a sticky flag.
/// The amount is an unsigned value of any width; amounts at or beyond the
/// operand width shift everything into sticky.
pub(crate) fn lshr_sticky(a: &BvExpr, amount: &BvExpr) -> (BvExpr, BvExpr) {
    let w = a.width();
    // Clamp the amount to w so shl below has well-defined semantics, and
    // widen everything to a common width.
    let cw = w.max(amount.width());
    let amt = zext_to(amount, cw);
    let wide_w = cst(cw, w as u64);
    let clamped = ite(&ult(&amt, &wide_w), &amt, &wide_w);
    let a_cw = zext_to(a, cw);
    let shifted = lshr(&a_cw, &clamped);
    // mask = (ones << clamped) inverted: the bits that fall off.
    let lost_mask = not(&shl(&ones(cw), &clamped));
    let lost = and(&a_cw, &lost_mask);
    (extract(&shifted, w - 1, 0), nonzero(&lost))
}

/// Shift left by an unsigned amount expression (same clamping as SMT-LIB:
/// amounts >= width produce zero).
pub(crate) fn shl_dyn(a: &BvExpr, amount: &BvExpr) -> BvExpr {
    let w = a.width();
    let cw = w.max(amount.width());
    let a_cw = zext_to(a, cw);
    let amt = zext_to(amount, cw);
    extract(&shl(&a_cw, &amt), w - 1, 0)
}

pub(crate) fn b_and(a: &BvExpr, b: &BvExpr) -> BvExpr {
    and(a, b)
}

pub(crate) fn b_or(a: &BvExpr, b: &BvExpr) -> BvExpr {
    or(a, b)
}

pub(crate) fn b_not(a: &BvExpr) -> BvExpr {
    not(a)
}
