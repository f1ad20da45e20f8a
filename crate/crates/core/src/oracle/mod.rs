//! Exact reference computations. Nothing here calls the rounding code under
//! test: classes are found by brute force over enumerated floats and
//! representations are derived from exact rational arithmetic.

mod theorems;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, Zero};

use crate::fmodel::{BFloat, GenericFormat, RoundingMode};

pub use theorems::{check_all, check_theorem, CheckOptions, Report, DEFAULT_SEED, THEOREM_TAGS};

pub type ExactRational = BigRational;

pub fn rational(n: i64, d: i64) -> BigRational {
    BigRational::new(n.into(), d.into())
}

pub fn pow_rational(beta: u32, k: i64) -> BigRational {
    let b = BigInt::from(beta);
    let p = num_traits::pow(b, k.unsigned_abs() as usize);
    if k >= 0 {
        BigRational::from_integer(p)
    } else {
        BigRational::new(1.into(), p)
    }
}

/// Value of `n * beta^e` computed directly.
pub fn value_of(beta: u32, f: &BFloat) -> BigRational {
    BigRational::from_integer(f.n.clone()) * pow_rational(beta, f.e)
}

/// Amplitude range `[lo, hi]` of the bounded representations of `x`, `hi =
/// None` meaning unbounded (zero). `None` when `x` is not representable.
pub fn representation_range(fmt: &GenericFormat, x: &BigRational) -> Option<(i64, Option<i64>)> {
    let e_min = fmt.e_min();
    if x.is_zero() {
        return Some((-e_min, None));
    }
    let beta = BigInt::from(fmt.beta());
    let y = x * pow_rational(fmt.beta(), e_min);
    if !y.is_integer() {
        return None;
    }
    let mut n = y.to_integer().abs();
    let mut top = -e_min;
    loop {
        let (q, r) = n.div_rem(&beta);
        if !r.is_zero() {
            break;
        }
        n = q;
        top += 1;
    }
    if &n > fmt.n_max() {
        return None;
    }
    let mut lo = top;
    let mut m = n;
    while lo > -e_min {
        let next = &m * &beta;
        if &next > fmt.n_max() {
            break;
        }
        m = next;
        lo -= 1;
    }
    Some((lo, Some(top)))
}

/// The bounded representation of `x` with amplitude `e`, if any.
pub fn representation_at(fmt: &GenericFormat, x: &BigRational, e: i64) -> Option<BFloat> {
    let (lo, hi) = representation_range(fmt, x)?;
    if e < lo || hi.is_some_and(|h| e > h) {
        return None;
    }
    let n = x / pow_rational(fmt.beta(), e);
    Some(BFloat::new(n.to_integer(), e))
}

/// Every bounded representation of `x` with amplitude at most `e_top`.
pub fn representations(fmt: &GenericFormat, x: &BigRational, e_top: i64) -> Vec<BFloat> {
    let Some((lo, hi)) = representation_range(fmt, x) else {
        return Vec::new();
    };
    let hi = hi.map_or(e_top, |h| h.min(e_top));
    (lo..=hi).filter_map(|e| representation_at(fmt, x, e)).collect()
}

/// Whether `f` is normal or subnormal, decided from the definitions.
pub fn is_canonical_ref(fmt: &GenericFormat, f: &BFloat) -> bool {
    let bounded = f.e >= -fmt.e_min() && f.n.abs() <= *fmt.n_max();
    let scaled = f.n.abs() * BigInt::from(fmt.beta());
    let normal = scaled > *fmt.n_max();
    bounded && (normal || f.e == -fmt.e_min())
}

/// Canonical floats with their exact values, for brute-force rounding.
pub struct ReferenceFloats {
    beta: u32,
    floats: Vec<BFloat>,
    values: Vec<BigRational>,
}

impl ReferenceFloats {
    pub fn new(fmt: &GenericFormat, floats: &[BFloat]) -> Self {
        let values = floats.iter().map(|f| value_of(fmt.beta(), f)).collect();
        ReferenceFloats { beta: fmt.beta(), floats: floats.to_vec(), values }
    }

    /// Canonical members of the rounding class of `x` found by a linear scan:
    /// one float for directed modes and nearest-even.
    pub fn round(&self, x: &BigRational, mode: RoundingMode) -> Vec<BFloat> {
        let below = self.values.iter().enumerate().filter(|(_, v)| *v <= x).max_by(|a, b| a.1.cmp(b.1));
        let above = self.values.iter().enumerate().filter(|(_, v)| *v >= x).min_by(|a, b| a.1.cmp(b.1));
        let pick =
            |o: Option<(usize, &BigRational)>| o.map(|(i, _)| self.floats[i].clone()).into_iter().collect::<Vec<_>>();
        match mode {
            RoundingMode::Down => pick(below),
            RoundingMode::Up => pick(above),
            RoundingMode::TowardZero => {
                if x.is_negative() {
                    pick(above)
                } else {
                    pick(below)
                }
            }
            RoundingMode::NearestEven => {
                let near = self.nearest(x);
                if near.len() < 2 {
                    return near;
                }
                let even: Vec<BFloat> = near.iter().filter(|f| f.n.is_even()).cloned().collect();
                if even.len() == 1 {
                    even
                } else {
                    // Both candidates odd (p = 1, even radix): away from zero.
                    let beta = self.beta;
                    let far = near.into_iter().max_by(|a, b| value_of(beta, a).abs().cmp(&value_of(beta, b).abs()));
                    far.into_iter().collect()
                }
            }
        }
    }

    /// The nearest class: all canonical floats at minimal distance from `x`.
    pub fn nearest(&self, x: &BigRational) -> Vec<BFloat> {
        let dist: Vec<BigRational> = self.values.iter().map(|v| (v - x).abs()).collect();
        let Some(best) = dist.iter().min() else {
            return Vec::new();
        };
        self.floats.iter().zip(&dist).filter(|(_, d)| *d == best).map(|(f, _)| f.clone()).collect()
    }
}

/// Reference rounding by exhaustive search over `floats`, which must hold every
/// canonical float of the format around `x`.
pub fn ref_round(fmt: &GenericFormat, floats: &[BFloat], x: &BigRational, mode: RoundingMode) -> Vec<BFloat> {
    ReferenceFloats::new(fmt, floats).round(x, mode)
}

/// The nearest class by exhaustive search.
pub fn ref_nearest(fmt: &GenericFormat, floats: &[BFloat], x: &BigRational) -> Vec<BFloat> {
    ReferenceFloats::new(fmt, floats).nearest(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn representation_ranges() {
        let f = GenericFormat::new(2, 4, 8).unwrap();
        // 1 = (8,-3) = (4,-2) = (2,-1) = (1,0) and larger amplitudes fail.
        assert_eq!(representation_range(&f, &rational(1, 1)), Some((-3, Some(0))));
        assert_eq!(representation_range(&f, &rational(17, 16)), None);
        assert_eq!(representation_range(&f, &rational(1, 512)), None);
        assert_eq!(representation_range(&f, &rational(3, 256)), Some((-8, Some(-8))));
        assert_eq!(representations(&f, &rational(6, 1), 1).len(), 3);
        assert_eq!(representation_range(&f, &rational(0, 1)), Some((-8, None)));
    }

    #[test]
    fn brute_force_round() {
        let f = GenericFormat::new(2, 4, 8).unwrap();
        let floats = f.enumerate_bounded(3, 10_000).unwrap();
        let x = rational(17, 16);
        assert_eq!(ref_round(&f, &floats, &x, RoundingMode::NearestEven), vec![BFloat::new(8, -3)]);
        assert_eq!(ref_nearest(&f, &floats, &x).len(), 2);
        assert_eq!(ref_round(&f, &floats, &x, RoundingMode::Up), vec![BFloat::new(9, -3)]);
        assert_eq!(ref_round(&f, &floats, &-x, RoundingMode::TowardZero), vec![BFloat::new(-8, -3)]);
    }
}
