//! The shared unpack / operate / round / pack pipeline.
//!
//! An `Unpacked` value denotes, when none of its flags is set,
//!
//! ```text
//!   (-1)^sign * (significand / 2^(sig_width-1)) * 2^exponent
//! ```
//!
//! so the most significant significand bit is the hidden-bit (units)
//! position. Operators work on widened copies of these fields and hand the
//! round stage a significand whose top bit is set (or which is all zero for
//! an exact zero), with any number of extra low bits; the lowest extra bits
//! act as guard and sticky.

use crate::bitvec::expr::BvExpr;
use crate::fpformat::{FpBits, FpFormat, RoundingMode};
use crate::ir::*;

/// Pipeline intermediate: sign, unbiased exponent, significand with explicit
/// hidden bit, and the three special-case flags.
#[derive(Debug, Clone)]
pub struct Unpacked {
    pub sign: BvExpr,
    /// Two's complement, unbiased, at least eb+2 bits.
    pub exponent: BvExpr,
    /// Hidden bit explicit at the most significant position; at least sb+1
    /// bits wide.
    pub significand: BvExpr,
    pub is_nan: BvExpr,
    pub is_inf: BvExpr,
    pub is_zero: BvExpr,
    pub format: FpFormat,
}

impl Unpacked {
    pub fn sig_width(&self) -> u32 {
        self.significand.width()
    }

    pub fn exp_width(&self) -> u32 {
        self.exponent.width()
    }

    /// True when none of the special flags is set.
    pub(crate) fn numeric(&self) -> BvExpr {
        b_and(
            &b_not(&self.is_nan),
            &b_and(&b_not(&self.is_inf), &b_not(&self.is_zero)),
        )
    }
}

/// Resize an expression holding a small non-negative count to an exact width.
fn resize_count(a: &BvExpr, width: u32) -> BvExpr {
    if a.width() >= width {
        extract(a, width - 1, 0)
    } else {
        zext_to(a, width)
    }
}

/// Split a packed float into sign, unbiased exponent, and significand with
/// the hidden bit made explicit. Subnormals keep exponent emin and a clear
/// hidden bit unless `normalize_subnormals` shifts them up to a set leading
/// bit with a correspondingly reduced exponent.
pub fn unpack(x: &FpBits, normalize_subnormals: bool) -> Unpacked {
    let format = x.format();
    let (eb, sb) = (format.eb(), format.sb());
    let w = format.total_width();
    let we = eb + 2;
    let bits = x.bits();

    let sign = bit(bits, w - 1);
    let exp_field = extract(bits, w - 2, sb);
    let sig_field = extract(bits, sb - 1, 0);

    let exp_zero = is_zero(&exp_field);
    let exp_ones = eq(&exp_field, &ones(eb));
    let sig_zero = is_zero(&sig_field);

    let hidden = b_not(&exp_zero);
    let mut significand = concat(&hidden, &sig_field);
    let unbiased = sub(&zext_to(&exp_field, we), &cst_i(we, format.bias()));
    let mut exponent = ite(&exp_zero, &cst_i(we, format.emin()), &unbiased);

    if normalize_subnormals {
        // For normals the leading-zero count is 0, so this is a no-op there.
        let shift = clz(&significand);
        significand = shl_dyn(&significand, &shift);
        exponent = sub(&exponent, &resize_count(&shift, we));
    }

    Unpacked {
        sign,
        exponent,
        significand,
        is_nan: b_and(&exp_ones, &b_not(&sig_zero)),
        is_inf: b_and(&exp_ones, &sig_zero),
        is_zero: b_and(&exp_zero, &sig_zero),
        format,
    }
}

/// Should a rounding increment be applied, given the mode encoding, the
/// sign, and the guard/sticky/lsb context? Unused encodings behave as RNE.
pub(crate) fn round_increment(
    rm: &BvExpr,
    sign: &BvExpr,
    guard: &BvExpr,
    sticky: &BvExpr,
    lsb: &BvExpr,
) -> BvExpr {
    let rne = b_and(guard, &b_or(sticky, lsb));
    let rna = guard.clone();
    let residue = b_or(guard, sticky);
    let rtp = b_and(&b_not(sign), &residue);
    let rtn = b_and(sign, &residue);
    let rtz = ff();
    dispatch_rm(rm, &rne, &rna, &rtp, &rtn, &rtz)
}

/// Does overflow produce an infinity (rather than saturating at the largest
/// finite value)?
fn overflow_goes_to_infinity(rm: &BvExpr, sign: &BvExpr) -> BvExpr {
    let rne = tt();
    let rna = tt();
    let rtp = b_not(sign);
    let rtn = sign.clone();
    let rtz = ff();
    dispatch_rm(rm, &rne, &rna, &rtp, &rtn, &rtz)
}

/// Select per rounding-mode encoding; RNE is the default branch so the three
/// unused encodings 101-111 behave as RNE.
fn dispatch_rm(
    rm: &BvExpr,
    rne: &BvExpr,
    rna: &BvExpr,
    rtp: &BvExpr,
    rtn: &BvExpr,
    rtz: &BvExpr,
) -> BvExpr {
    let is = |mode: RoundingMode| eq(rm, &cst(3, mode.code()));
    ite(
        &is(RoundingMode::Rna),
        rna,
        &ite(
            &is(RoundingMode::Rtp),
            rtp,
            &ite(
                &is(RoundingMode::Rtn),
                rtn,
                &ite(&is(RoundingMode::Rtz), rtz, rne),
            ),
        ),
    )
}

/// Round an extended significand back to the target widths.
///
/// Expects `u.significand` at least sb+2 bits wide with its top bit set
/// whenever the value is finite and nonzero (an all-zero significand yields
/// a zero result); extra low bits beyond sb+1 are the rounding context, the
/// lowest of them having sticky semantics. `rm` is the 3-bit rounding-mode
/// encoding. The result has exact widths (sb+1 significand, exponent in
/// range) ready for `pack`.
pub fn round(u: &Unpacked, rm: &BvExpr, target: FpFormat) -> Unpacked {
    let sb = target.sb();
    let ws = u.sig_width();
    let extras = ws - (sb + 1);
    assert!(extras >= 1, "round needs at least one guard bit");
    assert_eq!(rm.width(), 3, "rounding mode encoding is 3 bits");

    // Widen the exponent for the emin/emax comparisons and the +1 carry.
    let we = u.exp_width().max(target.eb() + 2) + 1;
    let exp = sext_to(&u.exponent, we);
    let emin = cst_i(we, target.emin());
    let emax = cst_i(we, target.emax());

    // Subnormal range: shift right so the grid exponent becomes emin, folding
    // lost bits into sticky (kept separate so the guard bit stays exact).
    let below = slt(&exp, &emin);
    let dshift = ite(&below, &sub(&emin, &exp), &cst(we, 0));
    let (sig_shifted, shift_sticky) = lshr_sticky(&u.significand, &dshift);
    let exp_eff = ite(&below, &emin, &exp);

    let candidate = extract(&sig_shifted, ws - 1, extras);
    let guard = bit(&sig_shifted, extras - 1);
    let low_sticky = if extras >= 2 {
        nonzero(&extract(&sig_shifted, extras - 2, 0))
    } else {
        ff()
    };
    let sticky = b_or(&low_sticky, &shift_sticky);
    let lsb = bit(&candidate, 0);

    let inc = round_increment(rm, &u.sign, &guard, &sticky, &lsb);
    let rounded = add(&zext_to(&candidate, sb + 2), &zext_to(&inc, sb + 2));
    let carry = bit(&rounded, sb + 1);
    let sig_carry = extract(&rounded, sb + 1, 1);
    let sig_plain = extract(&rounded, sb, 0);
    let sig_rounded = ite(&carry, &sig_carry, &sig_plain);
    let exp_rounded = add(&exp_eff, &zext_to(&carry, we));

    // Exponent overflow: infinity or saturation at max finite, by mode.
    let overflow = slt(&emax, &exp_rounded);
    let to_inf = overflow_goes_to_infinity(rm, &u.sign);
    let saturate = b_and(&overflow, &b_not(&to_inf));
    let significand = ite(&saturate, &ones(sb + 1), &sig_rounded);
    let exponent = ite(&saturate, &emax, &exp_rounded);

    let valid = u.numeric();
    let became_inf = b_and(&valid, &b_and(&overflow, &to_inf));
    let became_zero = b_and(&valid, &b_and(&is_zero(&significand), &b_not(&overflow)));

    Unpacked {
        sign: u.sign.clone(),
        exponent,
        significand,
        is_nan: u.is_nan.clone(),
        is_inf: b_or(&u.is_inf, &became_inf),
        is_zero: b_or(&u.is_zero, &became_zero),
        format: target,
    }
}

/// Concatenate sign, rebiased exponent, and significand back into the packed
/// layout. Flags override the numeric fields: NaN packs to the canonical
/// NaN, infinity and zero to their signed encodings.
pub fn pack(u: &Unpacked, format: FpFormat) -> FpBits {
    let (eb, sb) = (format.eb(), format.sb());
    assert_eq!(
        u.sig_width(),
        sb + 1,
        "pack needs an exact-width significand"
    );
    assert!(u.exp_width() >= eb + 2);

    // Exponents below emin describe a normalized subnormal (the inverse of
    // unpack with normalization); shift the significand back down. The low
    // bits are zero in that case, so nothing is lost.
    let we = u.exp_width();
    let emin = cst_i(we, format.emin());
    let below = slt(&u.exponent, &emin);
    let dshift = ite(&below, &sub(&emin, &u.exponent), &cst(we, 0));
    let (significand, _) = lshr_sticky(&u.significand, &dshift);
    let exponent = ite(&below, &emin, &u.exponent);

    let hidden = msb(&significand);
    let biased = add(&exponent, &cst_i(we, format.bias()));
    let exp_normal = extract(&biased, eb - 1, 0);
    let exp_field = ite(&hidden, &exp_normal, &cst(eb, 0));
    let sig_field = extract(&significand, sb - 1, 0);

    let numeric = concat(&u.sign, &concat(&exp_field, &sig_field));
    let zero = concat(&u.sign, &cst(eb + sb, 0));
    let inf = concat(&u.sign, &concat(&ones(eb), &cst(sb, 0)));
    let nan_sig = if sb == 1 {
        cst(1, 1)
    } else {
        concat(&cst(sb - 1, 0), &cst(1, 1))
    };
    let nan = concat(&ff(), &concat(&ones(eb), &nan_sig));

    let packed = ite(
        &u.is_nan,
        &nan,
        &ite(&u.is_inf, &inf, &ite(&u.is_zero, &zero, &numeric)),
    );
    crate::fpformat::fp_from_ieeebv(&packed, format).expect("pack width is exact")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bitvec::{eval, BvValue, Context, Env};
    use crate::fpformat::{formats, fp_const};
    use crate::oracle;
    use num_bigint::BigUint;
    use num_rational::BigRational;

    fn const_pattern(x: &FpBits) -> BigUint {
        x.bits().as_const().expect("constant").clone()
    }

    #[test]
    fn unpack_examples() {
        let f8 = formats::fp8();
        // 0x3C is 1.5: sign 0, exponent 0, significand 1.100.
        let u = unpack(&fp_const(BigUint::from(0x3Cu8), f8), false);
        assert_eq!(u.sign.as_const().unwrap(), &BigUint::from(0u8));
        assert_eq!(u.exponent.as_const().unwrap(), &BigUint::from(0u8));
        assert_eq!(u.significand.as_const().unwrap(), &BigUint::from(0b1100u8));
        // 0x01 normalized: exponent -9, significand 1.000.
        let u = unpack(&fp_const(BigUint::from(0x01u8), f8), true);
        assert_eq!(u.significand.as_const().unwrap(), &BigUint::from(0b1000u8));
        // -9 in 6-bit two's complement.
        assert_eq!(u.exponent.as_const().unwrap(), &BigUint::from(0b110111u8));
        // fp16 0x7C01 is a NaN.
        let u = unpack(&fp_const(BigUint::from(0x7C01u32), formats::fp16()), false);
        assert_eq!(u.is_nan.as_const().unwrap(), &BigUint::from(1u8));
    }

    #[test]
    fn pack_unpack_round_trip_fp8_and_fp16() {
        for f in [formats::fp8(), formats::fp16()] {
            let canonical_nan = oracle::canonical_nan_bits(f);
            let total = 1u64 << f.total_width();
            for pattern in 0..total {
                let x = fp_const(BigUint::from(pattern), f);
                for normalize in [false, true] {
                    let back = pack(&unpack(&x, normalize), f);
                    let is_nan = oracle::decode(&BigUint::from(pattern), f).is_nan();
                    let expect = if is_nan {
                        canonical_nan.clone()
                    } else {
                        BigUint::from(pattern)
                    };
                    assert_eq!(
                        const_pattern(&back),
                        expect,
                        "{} pattern {:#x} normalize {}",
                        f,
                        pattern,
                        normalize
                    );
                }
            }
        }
    }

    /// Build an Unpacked holding exactly m * 2^e, normalized into a
    /// (sb+4)-bit register the way the operator cores do.
    fn exact_unpacked(m: u64, e: i64, f: FpFormat) -> Unpacked {
        assert!(m > 0);
        let ws = f.sb() + 4;
        let bits = 64 - m.leading_zeros() as u32;
        assert!(bits <= ws);
        let reg = m << (ws - bits);
        let exponent = e + bits as i64 - 1;
        Unpacked {
            sign: ff(),
            exponent: cst_i(f.eb() + 4, exponent),
            significand: cst(ws, reg),
            is_nan: ff(),
            is_inf: ff(),
            is_zero: ff(),
            format: f,
        }
    }

    #[test]
    fn round_matches_oracle_on_exact_grid() {
        let f = formats::fp8();
        for m in 1u64..128 {
            for e in -16i64..=10 {
                let v = oracle::OracleValue::from_rational(
                    BigRational::from_integer(m.into()) * pow2_rational(e),
                );
                for rm in RoundingMode::ALL {
                    let want = oracle::round_exact(&v, f, rm);
                    let u = exact_unpacked(m, e, f);
                    let got = pack(&round(&u, &rm.encoding(), f), f);
                    assert_eq!(const_pattern(&got), want, "m={} e={} rm={}", m, e, rm);
                }
            }
        }
    }

    #[test]
    fn mode_envelope_on_exact_grid() {
        let f = formats::fp8();
        for m in 1u64..128 {
            for e in -14i64..=6 {
                let results: Vec<BigUint> =
                    [RoundingMode::Rtn, RoundingMode::Rne, RoundingMode::Rtp]
                        .iter()
                        .map(|rm| {
                            let u = exact_unpacked(m, e, f);
                            const_pattern(&pack(&round(&u, &rm.encoding(), f), f))
                        })
                        .collect();
                let dec: Vec<oracle::OracleValue> =
                    results.iter().map(|b| oracle::decode(b, f)).collect();
                assert!(
                    oracle::compare(oracle::CmpKind::Le, &dec[0], &dec[1])
                        && oracle::compare(oracle::CmpKind::Le, &dec[1], &dec[2]),
                    "envelope violated at m={} e={}",
                    m,
                    e
                );
            }
        }
    }

    #[test]
    fn round_outputs_always_classify() {
        let f = formats::fp8();
        for m in 1u64..128 {
            for e in [-20i64, -9, -6, 0, 7, 9] {
                for rm in RoundingMode::ALL {
                    let u = exact_unpacked(m, e, f);
                    let bits = const_pattern(&pack(&round(&u, &rm.encoding(), f), f));
                    let classes = [
                        oracle::ClassKind::Zero,
                        oracle::ClassKind::Subnormal,
                        oracle::ClassKind::Normal,
                        oracle::ClassKind::Inf,
                        oracle::ClassKind::Nan,
                    ];
                    let count = classes
                        .iter()
                        .filter(|k| oracle::classify(**k, &bits, f))
                        .count();
                    assert_eq!(count, 1, "m={} e={} rm={}", m, e, rm);
                }
            }
        }
    }

    #[test]
    fn unused_rm_encodings_behave_as_rne() {
        let f = formats::fp8();
        let mut ctx = Context::new();
        let rm_var = ctx.mk_var("rm", 3).unwrap();
        // 1 + smallest-normal/2-ish: an inexact value forcing a rounding
        // decision: m=17, e=-4 gives 17/16 = 1.0625.
        let u = exact_unpacked(17, -4, f);
        let symbolic = pack(&round(&u, &rm_var, f), f);
        let u2 = exact_unpacked(17, -4, f);
        let rne = const_pattern(&pack(&round(&u2, &RoundingMode::Rne.encoding(), f), f));
        for code in [0b000u64, 0b101, 0b110, 0b111] {
            let mut env = Env::new();
            env.insert("rm".to_string(), BvValue::from_u64(3, code));
            let got = eval(symbolic.bits(), &env).unwrap();
            assert_eq!(got.value, rne, "encoding {:#b}", code);
        }
    }

    fn pow2_rational(e: i64) -> BigRational {
        use num_bigint::BigInt;
        use num_traits::One;
        if e >= 0 {
            BigRational::from_integer(BigInt::one() << e as u64)
        } else {
            BigRational::new(BigInt::one(), BigInt::one() << (-e) as u64)
        }
    }
}
