//! Randomized algebraic invariants for the exact quadratic scalar type,
//! plus a deep-precision convergence check that pushes numerators past two
//! hundred bits.

use num_bigint::BigInt;
use num_rational::Ratio;
use num_traits::One;
use proptest::prelude::*;

use dirmix_core::QuadExt;

type S = QuadExt<BigInt>;

fn rational() -> impl Strategy<Value = S> {
    (-60i64..=60, 1i64..=24).prop_map(|(n, d)| S::from_fraction(n, d))
}

/// Three scalars in the same quadratic field.
fn same_field_triple() -> impl Strategy<Value = (S, S, S)> {
    (
        prop_oneof![Just(2i64), Just(3), Just(5), Just(7)],
        prop::array::uniform3((-20i64..=20, 1i64..=8, -6i64..=6, 1i64..=4)),
    )
        .prop_map(|(d, parts)| {
            let make = |(rn, rd, cn, cd): (i64, i64, i64, i64)| {
                S::from_fraction(rn, rd) + S::from_fraction(cn, cd) * S::sqrt_of(d)
            };
            (make(parts[0]), make(parts[1]), make(parts[2]))
        })
}

proptest! {
    /// Ring laws hold exactly within a field: distributivity and
    /// associativity of the mixed operations.
    #[test]
    fn ring_identities_hold((a, b, c) in same_field_triple()) {
        prop_assert_eq!(
            a.clone() * (b.clone() + c.clone()),
            a.clone() * b.clone() + a.clone() * c.clone()
        );
        prop_assert_eq!((a.clone() * b.clone()) * c.clone(), a.clone() * (b.clone() * c.clone()));
        prop_assert_eq!((a.clone() + b.clone()) + c.clone(), a.clone() + (b + c));
        prop_assert_eq!(a.clone() - a, S::zero());
    }

    /// Division inverts multiplication away from zero.
    #[test]
    fn division_round_trips((a, b, _) in same_field_triple()) {
        if !b.is_zero() {
            prop_assert_eq!((a.clone() * b.clone()) / b, a);
        }
    }

    /// The floor/fract split is exact: x = floor(x) + fract(x) with the
    /// fraction inside the unit interval.
    #[test]
    fn floor_fract_reconstructs((a, _, _) in same_field_triple()) {
        let fract = a.fract();
        let floor = S::from_int(a.floor_int());
        prop_assert_eq!(floor + fract.clone(), a);
        prop_assert!(!fract.is_negative());
        prop_assert!(fract < S::one());
    }

    /// Comparison is a total order consistent with subtraction sign, across
    /// different quadratic fields.
    #[test]
    fn order_agrees_with_float_view((a, b, _) in same_field_triple(), r in rational()) {
        use std::cmp::Ordering;
        let by_cmp = a.cmp_exact(&b);
        let diff = a.clone() - b.clone();
        let by_sign = if diff.is_zero() {
            Ordering::Equal
        } else if diff.is_positive() {
            Ordering::Greater
        } else {
            Ordering::Less
        };
        prop_assert_eq!(by_cmp, by_sign);
        // Cross-field comparison agrees with the floating view when the
        // floats are far enough apart to trust.
        let fa = a.to_f64();
        let fr = r.to_f64();
        if (fa - fr).abs() > 1e-9 {
            let expect = if fa < fr { Ordering::Less } else { Ordering::Greater };
            prop_assert_eq!(a.cmp_exact(&r), expect);
        }
    }

    /// Scaling by an integer matches repeated addition.
    #[test]
    fn integer_scaling_matches_addition((a, _, _) in same_field_triple(), n in -8i64..=8) {
        let mut acc = S::zero();
        for _ in 0..n.abs() {
            acc = acc + a.clone();
        }
        if n < 0 {
            acc = -acc;
        }
        prop_assert_eq!(a.scale_int(n), acc);
    }
}

/// The continued-fraction iteration x -> 1 + 1/x converges to the golden
/// ratio; three hundred exact steps give an error below 10^-100 while the
/// numerators grow past two hundred bits.
#[test]
fn deep_rational_iteration_brackets_the_golden_ratio() {
    let mut x = Ratio::from_integer(BigInt::one());
    for _ in 0..300 {
        x = Ratio::one() + x.recip();
    }
    assert!(x.numer().bits() > 200);
    let phi = S::from_fraction(1, 2) + S::from_fraction(1, 2) * S::sqrt_of(5);
    let err = (S::from_ratio(x) - phi).abs();
    let bound = S::from_ratio(Ratio::new(BigInt::one(), BigInt::from(10).pow(100)));
    assert!(err < bound);
    assert!(!err.is_zero());
}
