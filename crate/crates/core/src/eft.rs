//! Error-free transformations: each returns a float pair whose exact sum is
//! the exact result of one operation on two floats.

use std::cmp::Ordering;

use crate::error::{precondition, Error, Result};
use crate::float::{cmp_abs_scaled, valid_exponent, FloatArith};

#[derive(Clone, Debug, PartialEq)]
pub struct EftPair<F> {
    pub hi: F,
    pub lo: F,
}

/// Product pair; `lo` has a bounded representation with amplitude `lo_exponent`.
#[derive(Clone, Debug, PartialEq)]
pub struct ProductPair<F> {
    pub hi: F,
    pub lo: F,
    pub lo_exponent: i64,
}

fn require_bounded<A: FloatArith>(arith: &A, xs: &[&A::Float]) -> Result<()> {
    for x in xs {
        if !arith.is_bounded(x) {
            return Err(Error::Unbounded { n: arith.display(x), e: arith.exponent(x) });
        }
    }
    Ok(())
}

/// Knuth's six-operation exact sum, valid in every radix.
pub fn two_sum<A: FloatArith>(arith: &A, a: &A::Float, b: &A::Float) -> Result<EftPair<A::Float>> {
    require_bounded(arith, &[a, b])?;
    let s = arith.add(a, b)?;
    let bv = arith.sub(&s, a)?;
    let av = arith.sub(&s, &bv)?;
    let db = arith.sub(b, &bv)?;
    let da = arith.sub(a, &av)?;
    let t = arith.add(&da, &db)?;
    Ok(EftPair { hi: s, lo: t })
}

fn check_fast_radix<A: FloatArith>(arith: &A) -> Result<()> {
    match arith.beta() {
        2 | 3 => Ok(()),
        beta => Err(Error::UnsupportedRadix { beta, allow_three: true }),
    }
}

/// Three-operation exact sum. The stored representations must satisfy
/// `e_b <= e_a`; for hardware doubles these are the canonical amplitudes.
pub fn fast_two_sum<A: FloatArith>(arith: &A, a: &A::Float, b: &A::Float) -> Result<EftPair<A::Float>> {
    fast_two_sum_at(arith, a, arith.exponent(a), b, arith.exponent(b))
}

/// [`fast_two_sum`] with the representations of `a` and `b` given by their
/// amplitudes. An amplitude that no bounded representation has is rejected.
pub fn fast_two_sum_at<A: FloatArith>(
    arith: &A,
    a: &A::Float,
    e_a: i64,
    b: &A::Float,
    e_b: i64,
) -> Result<EftPair<A::Float>> {
    check_fast_radix(arith)?;
    require_bounded(arith, &[a, b])?;
    if !valid_exponent(arith, a, e_a) || !valid_exponent(arith, b, e_b) {
        return precondition("fast_two_sum: amplitude is not a bounded representation");
    }
    if e_b > e_a {
        return precondition(format!("fast_two_sum: e_b = {e_b} exceeds e_a = {e_a}"));
    }
    fast_two_sum_unchecked(arith, a, b)
}

/// The bare three-operation sequence with no precondition check. Exposed to
/// reproduce its failures outside radix 2.
pub fn fast_two_sum_unchecked<A: FloatArith>(arith: &A, a: &A::Float, b: &A::Float) -> Result<EftPair<A::Float>> {
    let s = arith.add(a, b)?;
    let bv = arith.sub(&s, a)?;
    let t = arith.sub(b, &bv)?;
    Ok(EftPair { hi: s, lo: t })
}

/// Exact difference under `y/2 <= x <= 2y`.
pub fn sterbenz_exact<A: FloatArith>(arith: &A, x: &A::Float, y: &A::Float) -> Result<A::Float> {
    require_bounded(arith, &[x, y])?;
    let ok = if arith.is_zero(y) {
        arith.is_zero(x)
    } else {
        !arith.is_negative(y)
            && !arith.is_negative(x)
            && cmp_abs_scaled(arith, y, 1, 0, x, 2, 0) != Ordering::Greater
            && cmp_abs_scaled(arith, x, 1, 0, y, 2, 0) != Ordering::Greater
    };
    if !ok {
        return precondition("sterbenz_exact: requires y/2 <= x <= 2y");
    }
    arith.sub(x, y)
}

/// Checks, for radix 2, that an inexact sum keeps at least half the larger
/// operand and that the rounding error is at most `|x ⊕ y| ulp / 2` and
/// `max(|x|,|y|) ulp`.
pub fn plus_lower_bound_check<A: FloatArith>(arith: &A, x: &A::Float, y: &A::Float) -> Result<bool> {
    if arith.beta() != 2 {
        return Err(Error::UnsupportedRadix { beta: arith.beta(), allow_three: false });
    }
    require_bounded(arith, &[x, y])?;
    let s = arith.add(x, y)?;
    let vs = arith.value(&s);
    let exact = arith.value(x) + arith.value(y);
    let err = (&exact - &vs).abs();
    let big = arith.value(x).abs().max(arith.value(y).abs());
    let ulp = arith.ulp();
    let two = num_rational::BigRational::from_integer(2.into());
    let mut ok = true;
    if err != num_rational::BigRational::from_integer(0.into()) {
        ok &= vs.abs() >= &big / &two;
    }
    if !arith.is_zero(&s) {
        ok &= err <= vs.abs() * ulp / &two;
        ok &= vs.abs() * ulp / &two <= &big * ulp;
    }
    Ok(ok)
}

use num_traits::Signed as _;

/// Largest amplitude usable for the underflow guard (`None` for zero).
fn guard_exponent<A: FloatArith>(arith: &A, x: &A::Float) -> Option<i64> {
    arith.max_exponent(x)
}

/// Exact product as `hi + lo` with `hi` the rounded product.
///
/// Uses Veltkamp splitting and Dekker's product (7 multiplications, 10
/// additions or subtractions) when the radix is 2 or the precision is even,
/// and the fused multiply-add otherwise.
pub fn two_product<A: FloatArith>(arith: &A, a: &A::Float, b: &A::Float) -> Result<ProductPair<A::Float>> {
    let p = arith.precision();
    if p >= 2 && (arith.beta() == 2 || p % 2 == 0) {
        product_with(arith, a, b, dekker)
    } else {
        product_with(arith, a, b, fma_lo)
    }
}

/// Exact product with the low part from one fused multiply-add.
pub fn two_product_fma<A: FloatArith>(arith: &A, a: &A::Float, b: &A::Float) -> Result<ProductPair<A::Float>> {
    product_with(arith, a, b, fma_lo)
}

fn product_with<A: FloatArith>(
    arith: &A,
    a: &A::Float,
    b: &A::Float,
    lo_of: fn(&A, &A::Float, &A::Float, &A::Float) -> Result<A::Float>,
) -> Result<ProductPair<A::Float>> {
    require_bounded(arith, &[a, b])?;
    let guard = -arith.e_min() + arith.precision() as i64;
    if let (Some(ea), Some(eb)) = (guard_exponent(arith, a), guard_exponent(arith, b)) {
        if ea + eb < guard {
            return precondition(format!("two_product: e_a + e_b = {} is below the underflow guard {guard}", ea + eb));
        }
    } else {
        let z = arith.zero();
        return Ok(ProductPair { hi: z.clone(), lo: z, lo_exponent: -arith.e_min() });
    }
    let hi = arith.mul(a, b)?;
    let lo = lo_of(arith, a, b, &hi)?;
    let mut lo_exponent = arith.canonical_exponent(&hi) - arith.precision() as i64;
    if arith.is_zero(&lo) {
        // An exact product: zero has no amplitude below -e_min.
        lo_exponent = lo_exponent.max(-arith.e_min());
    }
    if !valid_exponent(arith, &lo, lo_exponent) {
        return Err(Error::Invariant(format!(
            "two_product: low part {} has no representation with amplitude {lo_exponent}",
            arith.display(&lo)
        )));
    }
    Ok(ProductPair { hi, lo, lo_exponent })
}

fn fma_lo<A: FloatArith>(arith: &A, a: &A::Float, b: &A::Float, hi: &A::Float) -> Result<A::Float> {
    arith.fma(a, b, &arith.neg(hi))
}

/// Veltkamp split of `x` into a high half and an exact remainder.
fn split<A: FloatArith>(arith: &A, x: &A::Float) -> Result<(A::Float, A::Float)> {
    let model = arith.model();
    let half = arith.precision().div_ceil(2);
    let c = crate::fmodel::BFloat { n: model.radix_pow(half as u64) + 1u32, e: 0 };
    let c = arith.from_bfloat(&c)?;
    let g = arith.mul(&c, x)?;
    let d = arith.sub(x, &g)?;
    let hi = arith.add(&g, &d)?;
    let lo = arith.sub(x, &hi)?;
    Ok((hi, lo))
}

fn dekker<A: FloatArith>(arith: &A, a: &A::Float, b: &A::Float, hi: &A::Float) -> Result<A::Float> {
    let (ah, al) = split(arith, a)?;
    let (bh, bl) = split(arith, b)?;
    let e1 = arith.sub(hi, &arith.mul(&ah, &bh)?)?;
    let e2 = arith.sub(&e1, &arith.mul(&al, &bh)?)?;
    let e3 = arith.sub(&e2, &arith.mul(&ah, &bl)?)?;
    arith.sub(&arith.mul(&al, &bl)?, &e3)
}
