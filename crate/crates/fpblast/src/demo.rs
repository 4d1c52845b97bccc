//! The classic 0.1 + 0.2 demonstration: the double nearest 0.3 is below the
//! real 0.3, while the rounded sum of the doubles nearest 0.1 and 0.2 lands
//! one ulp above it, so `w == z` fails and `w < z` holds.

use num_bigint::BigUint;

use crate::fpformat::{formats, mk_literal, RoundingMode};
use crate::fpops::{fp_add, fp_compare, FpCmpKind};
use crate::oracle;

/// Build the report. The sum is computed by concretely evaluating the
/// blasted addition circuit at fp64; the exact decimal expansions come from
/// the oracle.
pub fn fig1_report() -> String {
    let f64fmt = formats::fp64();
    let rne = RoundingMode::Rne;
    let x = mk_literal(f64fmt, "0.1", rne).expect("literal");
    let y = mk_literal(f64fmt, "0.2", rne).expect("literal");
    let w = mk_literal(f64fmt, "0.3", rne).expect("literal");
    let z = fp_add(rne, &x, &y).expect("same format");

    let dec = |v: &crate::fpformat::FpBits| {
        let bits = v.bits().as_const().expect("constant demo values");
        oracle::exact_decimal(bits, f64fmt).expect("finite")
    };
    let verdict = |kind| {
        let e = fp_compare(kind, &w, &z).expect("same format");
        e.as_const().expect("constant") == &BigUint::from(1u8)
    };

    let mut out = String::new();
    out.push_str("double x = 0.1;\n");
    out.push_str("double y = 0.2;\n");
    out.push_str("double w = 0.3;\n");
    out.push_str("double z = x + y;\n");
    out.push_str("assert(w == z);\n");
    out.push('\n');
    out.push_str("exact values of the IEEE double constants:\n");
    out.push_str(&format!("x = {}\n", dec(&x)));
    out.push_str(&format!("y = {}\n", dec(&y)));
    out.push_str(&format!("z = {}\n", dec(&z)));
    out.push_str(&format!("w = {}\n", dec(&w)));
    out.push('\n');
    out.push_str("the assertion fails: z is strictly greater than w\n");
    out.push_str(&format!("fp.eq(w, z) = {}\n", verdict(FpCmpKind::Eq)));
    out.push_str(&format!("fp.lt(w, z) = {}\n", verdict(FpCmpKind::Lt)));
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sum_circuit_agrees_with_oracle() {
        let f = formats::fp64();
        let x = mk_literal(f, "0.1", RoundingMode::Rne).unwrap();
        let y = mk_literal(f, "0.2", RoundingMode::Rne).unwrap();
        let z = fp_add(RoundingMode::Rne, &x, &y).unwrap();
        let want = oracle::add(
            &oracle::decode(x.bits().as_const().unwrap(), f),
            &oracle::decode(y.bits().as_const().unwrap(), f),
            f,
            RoundingMode::Rne,
        );
        assert_eq!(z.bits().as_const().unwrap(), &want);
    }

    #[test]
    fn report_is_stable_and_correct() {
        let r1 = fig1_report();
        let r2 = fig1_report();
        assert_eq!(r1, r2);
        assert!(r1.contains("fp.eq(w, z) = false"));
        assert!(r1.contains("fp.lt(w, z) = true"));
    }
}
