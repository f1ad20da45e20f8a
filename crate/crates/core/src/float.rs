//! Arithmetic backends shared by the error-free transformations and the
//! streaming operators: the exact generic model and hardware binary64.

use std::cmp::Ordering;
use std::fmt::Debug;
use std::sync::LazyLock;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::fmodel::{BFloat, GenericFormat, RoundingMode};

/// Round-to-nearest-even floating-point arithmetic over one format.
pub trait FloatArith: Clone + Debug + Send + Sync + 'static {
    type Float: Clone + Debug + PartialEq + Send + Sync + 'static;
    /// Orders floats by absolute value.
    type MagKey: Ord + Clone + Debug + Send + Sync + 'static;

    /// The generic model describing this format.
    fn model(&self) -> &GenericFormat;

    fn zero(&self) -> Self::Float;
    fn is_zero(&self, x: &Self::Float) -> bool;
    fn is_negative(&self, x: &Self::Float) -> bool;
    fn neg(&self, x: &Self::Float) -> Self::Float;
    fn abs(&self, x: &Self::Float) -> Self::Float {
        if self.is_negative(x) {
            self.neg(x)
        } else {
            x.clone()
        }
    }

    fn add(&self, a: &Self::Float, b: &Self::Float) -> Result<Self::Float>;
    fn sub(&self, a: &Self::Float, b: &Self::Float) -> Result<Self::Float>;
    fn mul(&self, a: &Self::Float, b: &Self::Float) -> Result<Self::Float>;
    fn div(&self, a: &Self::Float, b: &Self::Float) -> Result<Self::Float>;
    /// `a * b + c` rounded once.
    fn fma(&self, a: &Self::Float, b: &Self::Float, c: &Self::Float) -> Result<Self::Float>;

    fn cmp_abs(&self, a: &Self::Float, b: &Self::Float) -> Ordering;
    fn magnitude_key(&self, x: &Self::Float) -> Self::MagKey;

    /// Amplitude of the stored representation.
    fn exponent(&self, x: &Self::Float) -> i64;
    fn canonical_exponent(&self, x: &Self::Float) -> i64;
    /// Largest bounded amplitude; `None` for zero.
    fn max_exponent(&self, x: &Self::Float) -> Option<i64>;

    fn is_bounded(&self, x: &Self::Float) -> bool;
    /// The stored representation as a model float.
    fn to_bfloat(&self, x: &Self::Float) -> BFloat;
    /// Exact conversion; fails when the value is not a float of this format.
    fn from_bfloat(&self, f: &BFloat) -> Result<Self::Float>;
    fn value(&self, x: &Self::Float) -> BigRational;
    fn display(&self, x: &Self::Float) -> String;

    fn beta(&self) -> u32 {
        self.model().beta()
    }
    fn precision(&self) -> u32 {
        self.model().precision()
    }
    fn e_min(&self) -> i64 {
        self.model().e_min()
    }
    fn n_max(&self) -> &BigInt {
        self.model().n_max()
    }
    fn ulp(&self) -> &BigRational {
        self.model().ulp()
    }
}

/// Whether `x` has a bounded representation with amplitude `e`.
pub fn valid_exponent<A: FloatArith>(arith: &A, x: &A::Float, e: i64) -> bool {
    if e < -arith.e_min() {
        return false;
    }
    match arith.max_exponent(x) {
        None => true,
        Some(top) => arith.canonical_exponent(x) <= e && e <= top,
    }
}

/// Compares `|x| * mx * beta^kx` with `|y| * my * beta^ky` exactly.
pub fn cmp_abs_scaled<A: FloatArith>(
    arith: &A,
    x: &A::Float,
    mx: u32,
    kx: i64,
    y: &A::Float,
    my: u32,
    ky: i64,
) -> Ordering {
    let fx = arith.to_bfloat(x);
    let fy = arith.to_bfloat(y);
    let m = arith.model();
    let ex = fx.e + kx;
    let ey = fy.e + ky;
    let base = ex.min(ey);
    let lhs = fx.n.abs() * mx * m.radix_pow((ex - base) as u64);
    let rhs = fy.n.abs() * my * m.radix_pow((ey - base) as u64);
    lhs.cmp(&rhs)
}

/// Exact rational `n * beta^e` in lowest terms.
pub fn dyadic_value(model: &GenericFormat, f: &BFloat) -> BigRational {
    if f.n.is_zero() {
        return BigRational::zero();
    }
    if model.beta() == 2 && f.e < 0 {
        let tz = f.n.trailing_zeros().unwrap_or(0).min(f.e.unsigned_abs());
        let n = &f.n >> tz;
        let k = f.e.unsigned_abs() - tz;
        if k == 0 {
            return BigRational::from_integer(n);
        }
        return BigRational::new_raw(n, BigInt::one() << k);
    }
    model.value(f)
}

impl FloatArith for GenericFormat {
    type Float = BFloat;
    type MagKey = (i64, BigInt);

    fn model(&self) -> &GenericFormat {
        self
    }

    fn zero(&self) -> BFloat {
        BFloat::new(0, -self.e_min())
    }

    fn is_zero(&self, x: &BFloat) -> bool {
        x.n.is_zero()
    }

    fn is_negative(&self, x: &BFloat) -> bool {
        x.n.is_negative()
    }

    fn neg(&self, x: &BFloat) -> BFloat {
        x.neg()
    }

    fn add(&self, a: &BFloat, b: &BFloat) -> Result<BFloat> {
        Ok(self.add_rounded(a, b, RoundingMode::NearestEven))
    }

    fn sub(&self, a: &BFloat, b: &BFloat) -> Result<BFloat> {
        Ok(self.sub_rounded(a, b, RoundingMode::NearestEven))
    }

    fn mul(&self, a: &BFloat, b: &BFloat) -> Result<BFloat> {
        Ok(self.mul_rounded(a, b, RoundingMode::NearestEven))
    }

    fn div(&self, a: &BFloat, b: &BFloat) -> Result<BFloat> {
        self.div_rounded(a, b, RoundingMode::NearestEven)
    }

    fn fma(&self, a: &BFloat, b: &BFloat, c: &BFloat) -> Result<BFloat> {
        Ok(self.fma_rounded(a, b, c, RoundingMode::NearestEven))
    }

    fn cmp_abs(&self, a: &BFloat, b: &BFloat) -> Ordering {
        GenericFormat::cmp_abs(self, a, b)
    }

    fn magnitude_key(&self, x: &BFloat) -> (i64, BigInt) {
        let c = self.canonicalize_bounded(x);
        if c.n.is_zero() {
            return (i64::MIN, BigInt::zero());
        }
        (c.e, c.n.abs())
    }

    fn exponent(&self, x: &BFloat) -> i64 {
        x.e
    }

    fn canonical_exponent(&self, x: &BFloat) -> i64 {
        GenericFormat::canonical_exponent(self, x)
    }

    fn max_exponent(&self, x: &BFloat) -> Option<i64> {
        GenericFormat::max_exponent(self, x)
    }

    fn is_bounded(&self, x: &BFloat) -> bool {
        GenericFormat::is_bounded(self, x)
    }

    fn to_bfloat(&self, x: &BFloat) -> BFloat {
        x.clone()
    }

    fn from_bfloat(&self, f: &BFloat) -> Result<BFloat> {
        if self.is_bounded(f) {
            return Ok(f.clone());
        }
        if f.n.is_zero() {
            return Ok(BFloat::new(0, -self.e_min()));
        }
        // Not bounded as written; it may still be exactly representable.
        let r = dyadic_value(self, f);
        let g = self.round(&r, RoundingMode::NearestEven);
        if self.value(&g) == r {
            Ok(g)
        } else {
            Err(Error::Unbounded { n: f.n.to_string(), e: f.e })
        }
    }

    fn value(&self, x: &BFloat) -> BigRational {
        dyadic_value(self, x)
    }

    fn display(&self, x: &BFloat) -> String {
        x.to_string()
    }
}

/// IEEE-754 binary64 computed by the hardware, round to nearest even.
/// Overflow to infinity is reported as an error; signed zeros are not
/// distinguished.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Binary64;

static BINARY64: LazyLock<GenericFormat> = LazyLock::new(GenericFormat::binary64);

const FRAC_BITS: u64 = 52;
const FRAC_MASK: u64 = (1 << FRAC_BITS) - 1;
/// Largest canonical amplitude of a finite binary64 value.
pub const BINARY64_MAX_EXPONENT: i64 = 971;

/// Canonical `(n, e)` of a finite double.
pub fn decompose_f64(x: f64) -> (i64, i64) {
    debug_assert!(x.is_finite());
    let bits = x.to_bits();
    let biased = ((bits >> FRAC_BITS) & 0x7ff) as i64;
    let frac = (bits & FRAC_MASK) as i64;
    let (n, e) = if biased == 0 { (frac, -1074) } else { (frac | 1 << FRAC_BITS, biased - 1075) };
    if x.is_sign_negative() {
        (-n, e)
    } else {
        (n, e)
    }
}

/// Double from a canonical binary64 pair.
fn compose_f64(n: i64, e: i64) -> f64 {
    let neg = n < 0;
    let m = n.unsigned_abs();
    let bits = if m == 0 {
        0
    } else if m >> FRAC_BITS == 0 {
        debug_assert_eq!(e, -1074);
        m
    } else {
        (((e + 1075) as u64) << FRAC_BITS) | (m & FRAC_MASK)
    };
    let v = f64::from_bits(bits);
    if neg {
        -v
    } else {
        v
    }
}

fn finite(x: f64, what: &str) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(Error::Overflow(format!("binary64 {what} left the finite range")))
    }
}

impl FloatArith for Binary64 {
    type Float = f64;
    type MagKey = u64;

    fn model(&self) -> &GenericFormat {
        &BINARY64
    }

    fn zero(&self) -> f64 {
        0.0
    }

    fn is_zero(&self, x: &f64) -> bool {
        *x == 0.0
    }

    fn is_negative(&self, x: &f64) -> bool {
        *x < 0.0
    }

    fn neg(&self, x: &f64) -> f64 {
        -*x
    }

    fn abs(&self, x: &f64) -> f64 {
        x.abs()
    }

    fn add(&self, a: &f64, b: &f64) -> Result<f64> {
        finite(a + b, "sum")
    }

    fn sub(&self, a: &f64, b: &f64) -> Result<f64> {
        finite(a - b, "difference")
    }

    fn mul(&self, a: &f64, b: &f64) -> Result<f64> {
        finite(a * b, "product")
    }

    fn div(&self, a: &f64, b: &f64) -> Result<f64> {
        if *b == 0.0 {
            return Err(Error::DivisionByZero);
        }
        finite(a / b, "quotient")
    }

    fn fma(&self, a: &f64, b: &f64, c: &f64) -> Result<f64> {
        finite(a.mul_add(*b, *c), "fused multiply-add")
    }

    fn cmp_abs(&self, a: &f64, b: &f64) -> Ordering {
        a.abs().to_bits().cmp(&b.abs().to_bits())
    }

    fn magnitude_key(&self, x: &f64) -> u64 {
        x.abs().to_bits()
    }

    fn exponent(&self, x: &f64) -> i64 {
        decompose_f64(*x).1
    }

    fn canonical_exponent(&self, x: &f64) -> i64 {
        decompose_f64(*x).1
    }

    fn max_exponent(&self, x: &f64) -> Option<i64> {
        if *x == 0.0 {
            return None;
        }
        let (n, e) = decompose_f64(*x);
        Some(e + n.trailing_zeros() as i64)
    }

    fn is_bounded(&self, x: &f64) -> bool {
        x.is_finite()
    }

    fn to_bfloat(&self, x: &f64) -> BFloat {
        let (n, e) = decompose_f64(*x);
        BFloat::new(n, e)
    }

    fn from_bfloat(&self, f: &BFloat) -> Result<f64> {
        let c = BINARY64.from_bfloat(f)?;
        let c = BINARY64.canonicalize_bounded(&c);
        if c.e > BINARY64_MAX_EXPONENT {
            return Err(Error::Overflow(format!("{c} exceeds the binary64 range")));
        }
        let n = c.n.to_i64().expect("canonical binary64 significand fits in i64");
        Ok(compose_f64(n, c.e))
    }

    fn value(&self, x: &f64) -> BigRational {
        let (n, e) = decompose_f64(*x);
        dyadic_value(&BINARY64, &BFloat::new(n, e))
    }

    fn display(&self, x: &f64) -> String {
        crate::text::format_hex(&BINARY64, &self.to_bfloat(x))
    }
}
