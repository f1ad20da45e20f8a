use std::collections::BTreeSet;

use adapt_core::fmodel::{BFloat, GenericFormat, RoundingMode};
use adapt_core::oracle::{is_canonical_ref, rational, ref_round, representations, value_of, ReferenceFloats};
use adapt_core::BigRational;
use num_traits::Signed;
use proptest::prelude::*;

fn f4() -> GenericFormat {
    GenericFormat::new(2, 4, 8).unwrap()
}

/// Distinct values of every (n, e) with |n| <= n_max, e in the window.
fn count_values_by_dedup(beta: u32, n_max: i64, e_lo: i64, e_hi: i64) -> usize {
    let mut seen = BTreeSet::new();
    for e in e_lo..=e_hi {
        for n in -n_max..=n_max {
            seen.insert(value_of(beta, &BFloat::new(n, e)));
        }
    }
    seen.len()
}

#[test]
fn format_constants_from_exponent_width() {
    let d = GenericFormat::with_exponent_width(2, 53, 11).unwrap();
    assert_eq!(d.e_min(), 1074);
    assert_eq!(*d.n_max(), (adapt_core::BigInt::from(1) << 53) - 1);
    assert_eq!(GenericFormat::with_exponent_width(2, 24, 8).unwrap().e_min(), 149);
    assert_eq!(f4().ulp(), &rational(1, 8));
}

#[test]
fn enumeration_counts() {
    let tiny = GenericFormat::new(2, 2, 1).unwrap();
    let all = tiny.enumerate_bounded(1, 1000).unwrap();
    assert_eq!(all.len(), count_values_by_dedup(2, 3, -1, 1));
    assert_eq!(all.len(), 15);
    let dec = GenericFormat::new(10, 2, 0).unwrap();
    assert_eq!(dec.enumerate_bounded(0, 1000).unwrap().len(), 199);
    assert_eq!(dec.enumerate_bounded(0, 1000).unwrap().len(), count_values_by_dedup(10, 99, 0, 0));
    assert_eq!(f4().enumerate_bounded(-9, 1000).unwrap(), vec![BFloat::new(0, -8)]);
    assert!(f4().enumerate_bounded(1000, 100).is_err());
    for f in &all {
        assert!(is_canonical_ref(&tiny, f));
    }
    let vals: Vec<BigRational> = all.iter().map(|f| tiny.value(f)).collect();
    assert!(vals.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn canonical_examples() {
    let f = f4();
    assert_eq!(f.canonicalize(&BFloat::new(1, 0)).unwrap(), BFloat::new(8, -3));
    assert_eq!(f.canonicalize(&BFloat::new(3, -8)).unwrap(), BFloat::new(3, -8));
    assert_eq!(f.canonicalize(&BFloat::new(0, 5)).unwrap(), BFloat::new(0, -8));
    assert!(f.canonicalize(&BFloat::new(16, 0)).is_err());
    assert!(f.canonicalize(&BFloat::new(1, -9)).is_err());
}

#[test]
fn rounding_examples() {
    let f = f4();
    let x = rational(17, 16);
    assert_eq!(f.round(&x, RoundingMode::NearestEven), BFloat::new(8, -3));
    assert_eq!(f.round(&rational(29, 16), RoundingMode::Down), BFloat::new(14, -3));
    assert_eq!(f.round(&rational(29, 16), RoundingMode::Up), BFloat::new(15, -3));
    assert_eq!(f.round(&rational(-29, 16), RoundingMode::TowardZero), BFloat::new(-14, -3));
    // 19/16 is a tie between 9/8 and 10/8: even significand 10.
    assert_eq!(f.round(&rational(19, 16), RoundingMode::NearestEven), BFloat::new(10, -3));
    // Rounding up across the binade boundary.
    assert_eq!(f.round(&rational(31, 16), RoundingMode::NearestEven), BFloat::new(8, -2));
    // Subnormal range.
    assert_eq!(f.round(&rational(3, 1024), RoundingMode::NearestEven), BFloat::new(1, -8));
    assert_eq!(f.round(&rational(1, 1024), RoundingMode::NearestEven), BFloat::new(0, -8));
    let x = rational(33, 32);
    let r = f.round(&x, RoundingMode::NearestEven);
    assert!((f.value(&r) - &x).abs() <= rational(1, 16));
}

fn sample_points(fmt: &GenericFormat, floats: &[BFloat]) -> Vec<BigRational> {
    let vals: Vec<BigRational> = floats.iter().map(|f| fmt.value(f)).collect();
    let mut pts = Vec::new();
    for w in vals.windows(2) {
        let d = &w[1] - &w[0];
        pts.push(w[0].clone());
        for k in 1..4 {
            pts.push(&w[0] + &d * rational(k, 4));
        }
        pts.push(&w[0] + &d * rational(1, 3));
    }
    pts.push(vals.last().unwrap().clone());
    pts
}

fn check_against_reference(fmt: &GenericFormat, e_top: i64) {
    let floats = fmt.enumerate_bounded(e_top + 1, 100_000).unwrap();
    let window = fmt.enumerate_bounded(e_top, 100_000).unwrap();
    let pts = sample_points(fmt, &window);
    let reference = ReferenceFloats::new(fmt, &floats);
    for x in &pts {
        for mode in RoundingMode::ALL {
            let got = fmt.round(x, mode);
            assert!(is_canonical_ref(fmt, &got), "non-canonical {got} for {x}");
            let want = reference.round(x, mode);
            assert_eq!(want.len(), 1, "reference class for {x}");
            assert_eq!(got, want[0], "round({x}, {mode:?})");
        }
        let near = reference.nearest(x);
        let got = fmt.round(x, RoundingMode::NearestEven);
        assert!(near.contains(&got));
        for f in &near {
            assert!(fmt.in_nearest_class(f, x));
        }
    }
}

#[test]
fn round_matches_brute_force_radix_two() {
    check_against_reference(&f4(), 3);
    check_against_reference(&GenericFormat::new(2, 3, 4).unwrap(), 2);
}

#[test]
fn round_matches_brute_force_radix_three_and_ten() {
    check_against_reference(&GenericFormat::new(3, 3, 3).unwrap(), 1);
    check_against_reference(&GenericFormat::new(10, 2, 1).unwrap(), 1);
}

#[test]
fn nearest_even_p1_even_radix_goes_away_from_zero_when_both_odd() {
    let quad = GenericFormat::new(4, 1, 0).unwrap();
    let floats = quad.enumerate_bounded(3, 1000).unwrap();
    // 14 lies halfway between 12 = (3,1) and 16 = (1,2).
    let x = rational(14, 1);
    let got = quad.round(&x, RoundingMode::NearestEven);
    assert_eq!(got, BFloat::new(1, 2));
    assert_eq!(ref_round(&quad, &floats, &x, RoundingMode::NearestEven), vec![got]);
    assert_eq!(quad.round(&rational(6, 1), RoundingMode::NearestEven), BFloat::new(2, 1));
}

#[test]
fn canonicalize_over_all_representations() {
    let f = f4();
    let reps = f.enumerate_representations(4, 100_000).unwrap();
    for r in &reps {
        let c = f.canonicalize(r).unwrap();
        assert!(is_canonical_ref(&f, &c));
        assert_eq!(f.value(&c), f.value(r));
        assert_eq!(f.canonicalize(&c).unwrap(), c);
        let all = representations(&f, &f.value(r), 40);
        assert!(all.contains(&c) || r.n == 0.into());
        let canon: Vec<_> = all.iter().filter(|g| is_canonical_ref(&f, g)).collect();
        if r.n != 0.into() {
            assert_eq!(canon, vec![&c]);
            assert_eq!(f.max_exponent(r), all.iter().map(|g| g.e).max());
        }
    }
}

proptest! {
    #[test]
    fn binary64_model_round_trips_hardware_values(bits in any::<u64>()) {
        let x = f64::from_bits(bits);
        prop_assume!(x.is_finite());
        let m = GenericFormat::binary64();
        let (n, e) = adapt_core::float::decompose_f64(x);
        let f = BFloat::new(n, e);
        prop_assert!(m.is_canonical(&f));
        prop_assert_eq!(m.round(&m.value(&f), RoundingMode::NearestEven), f);
    }

    #[test]
    fn rounding_is_monotone(a in -5000i64..5000, b in -5000i64..5000, d in 1i64..700) {
        let f = f4();
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        for mode in RoundingMode::ALL {
            let x = f.value(&f.round(&rational(lo, d), mode));
            let y = f.value(&f.round(&rational(hi, d), mode));
            prop_assert!(x <= y);
        }
    }
}
