//! Radix-2 formats of at most 31 digits computed with machine integers.
//! Results agree with the generic model bit for bit; the exhaustive sweeps
//! use this backend for speed.

use std::cmp::Ordering;

use num_rational::BigRational;
use num_traits::ToPrimitive;

use crate::error::{Error, Result};
use crate::float::{dyadic_value, FloatArith};
use crate::fmodel::{BFloat, GenericFormat, RoundingMode};

pub const SMALL_MAX_PRECISION: u32 = 31;

/// A stored representation `n * 2^e`; it need not be canonical.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct SmallFloat {
    pub n: i64,
    pub e: i64,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct SmallBinary {
    model: GenericFormat,
    p: i64,
    e_min: i64,
    n_max: i64,
}

/// Beyond this gap the smaller addend only acts as a sticky bit.
const STICKY_GAP: i64 = 64;

fn bit_len(m: u128) -> i64 {
    128 - m.leading_zeros() as i64
}

impl SmallBinary {
    pub fn new(precision: u32, e_min: i64) -> Result<Self> {
        if !(1..=SMALL_MAX_PRECISION).contains(&precision) {
            return Err(Error::InvalidFormat(format!(
                "small binary formats need 1 <= p <= {SMALL_MAX_PRECISION}, got {precision}"
            )));
        }
        if !(0..=1 << 40).contains(&e_min) {
            return Err(Error::InvalidFormat(format!("e_min = {e_min} is out of range")));
        }
        let model = GenericFormat::new(2, precision, e_min)?;
        let p = precision as i64;
        Ok(SmallBinary { model, p, e_min, n_max: (1 << p) - 1 })
    }

    pub fn from_model(model: &GenericFormat) -> Result<Self> {
        if model.beta() != 2 {
            return Err(Error::UnsupportedRadix { beta: model.beta(), allow_three: false });
        }
        SmallBinary::new(model.precision(), model.e_min())
    }

    pub fn float(&self, n: i64, e: i64) -> Result<SmallFloat> {
        let f = SmallFloat { n, e };
        if self.is_bounded(&f) {
            Ok(f)
        } else {
            Err(Error::Unbounded { n: n.to_string(), e })
        }
    }

    pub fn canonicalize(&self, x: &SmallFloat) -> SmallFloat {
        if x.n == 0 {
            return SmallFloat { n: 0, e: -self.e_min };
        }
        let room = self.p - bit_len(x.n.unsigned_abs() as u128);
        let k = room.min(x.e + self.e_min).max(0);
        SmallFloat { n: x.n << k, e: x.e - k }
    }

    /// Nearest-even rounding of `n * 2^e`.
    fn round(&self, n: i128, e: i64) -> SmallFloat {
        if n == 0 {
            return SmallFloat { n: 0, e: -self.e_min };
        }
        let m = n.unsigned_abs();
        let mut shift = bit_len(m) - self.p;
        if e + shift < -self.e_min {
            shift = -self.e_min - e;
        }
        let (mut q, mut ex) = if shift <= 0 {
            (m << (-shift), e + shift)
        } else if shift >= 128 {
            (0, e + shift)
        } else {
            let q = m >> shift;
            let r = m & ((1u128 << shift) - 1);
            let half = 1u128 << (shift - 1);
            let up = r > half || (r == half && q & 1 == 1);
            (q + up as u128, e + shift)
        };
        if q == 1u128 << self.p {
            q >>= 1;
            ex += 1;
        }
        let q = q as i64;
        SmallFloat { n: if n < 0 { -q } else { q }, e: ex }
    }

    fn exact_sum(&self, a: &SmallFloat, b: &SmallFloat) -> SmallFloat {
        if a.n == 0 {
            return self.round(b.n as i128, b.e);
        }
        if b.n == 0 {
            return self.round(a.n as i128, a.e);
        }
        let (hi, lo) = if a.e >= b.e { (a, b) } else { (b, a) };
        let d = hi.e - lo.e;
        if d <= STICKY_GAP {
            self.round(((hi.n as i128) << d) + lo.n as i128, lo.e)
        } else {
            self.round(((hi.n as i128) << STICKY_GAP) + lo.n.signum() as i128, hi.e - STICKY_GAP)
        }
    }

    fn convert(&self, f: &BFloat) -> Result<SmallFloat> {
        let n = f.n.to_i64().ok_or_else(|| Error::Unbounded { n: f.n.to_string(), e: f.e })?;
        self.float(n, f.e)
    }
}

impl FloatArith for SmallBinary {
    type Float = SmallFloat;
    type MagKey = (i64, i64);

    fn model(&self) -> &GenericFormat {
        &self.model
    }

    fn zero(&self) -> SmallFloat {
        SmallFloat { n: 0, e: -self.e_min }
    }

    fn is_zero(&self, x: &SmallFloat) -> bool {
        x.n == 0
    }

    fn is_negative(&self, x: &SmallFloat) -> bool {
        x.n < 0
    }

    fn neg(&self, x: &SmallFloat) -> SmallFloat {
        SmallFloat { n: -x.n, e: x.e }
    }

    fn add(&self, a: &SmallFloat, b: &SmallFloat) -> Result<SmallFloat> {
        Ok(self.exact_sum(a, b))
    }

    fn sub(&self, a: &SmallFloat, b: &SmallFloat) -> Result<SmallFloat> {
        Ok(self.exact_sum(a, &self.neg(b)))
    }

    fn mul(&self, a: &SmallFloat, b: &SmallFloat) -> Result<SmallFloat> {
        Ok(self.round(a.n as i128 * b.n as i128, a.e + b.e))
    }

    fn div(&self, a: &SmallFloat, b: &SmallFloat) -> Result<SmallFloat> {
        if b.n == 0 {
            return Err(Error::DivisionByZero);
        }
        let num = (a.n.unsigned_abs() as u128) << 64;
        let den = b.n.unsigned_abs() as u128;
        let q = ((num / den) << 1 | (num % den != 0) as u128) as i128;
        let q = if (a.n < 0) != (b.n < 0) { -q } else { q };
        Ok(self.round(q, a.e - b.e - 65))
    }

    fn fma(&self, a: &SmallFloat, b: &SmallFloat, c: &SmallFloat) -> Result<SmallFloat> {
        let r = self.model.fma_rounded(
            &self.to_bfloat(a),
            &self.to_bfloat(b),
            &self.to_bfloat(c),
            RoundingMode::NearestEven,
        );
        self.convert(&r)
    }

    fn cmp_abs(&self, a: &SmallFloat, b: &SmallFloat) -> Ordering {
        self.magnitude_key(a).cmp(&self.magnitude_key(b))
    }

    fn magnitude_key(&self, x: &SmallFloat) -> (i64, i64) {
        if x.n == 0 {
            return (i64::MIN, 0);
        }
        let c = self.canonicalize(x);
        (c.e, c.n.abs())
    }

    fn exponent(&self, x: &SmallFloat) -> i64 {
        x.e
    }

    fn canonical_exponent(&self, x: &SmallFloat) -> i64 {
        self.canonicalize(x).e
    }

    fn max_exponent(&self, x: &SmallFloat) -> Option<i64> {
        if x.n == 0 {
            None
        } else {
            Some(x.e + x.n.trailing_zeros() as i64)
        }
    }

    fn is_bounded(&self, x: &SmallFloat) -> bool {
        x.n.abs() <= self.n_max && x.e >= -self.e_min
    }

    fn to_bfloat(&self, x: &SmallFloat) -> BFloat {
        BFloat::new(x.n, x.e)
    }

    fn from_bfloat(&self, f: &BFloat) -> Result<SmallFloat> {
        let g = self.model.from_bfloat(f)?;
        self.convert(&g)
    }

    fn value(&self, x: &SmallFloat) -> BigRational {
        dyadic_value(&self.model, &self.to_bfloat(x))
    }

    fn display(&self, x: &SmallFloat) -> String {
        format!("({},{})", x.n, x.e)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn all_reps(s: &SmallBinary, e_lo: i64, e_hi: i64) -> Vec<SmallFloat> {
        let mut out = Vec::new();
        for e in e_lo..=e_hi {
            for n in -s.n_max..=s.n_max {
                out.push(SmallFloat { n, e });
            }
        }
        out
    }

    #[test]
    fn operations_match_the_generic_model() {
        for (p, e_min) in [(4, 8), (3, 2), (1, 3)] {
            let s = SmallBinary::new(p, e_min).unwrap();
            let m = s.model().clone();
            let xs = all_reps(&s, -e_min, 6 - e_min);
            for a in &xs {
                for b in &xs {
                    let (fa, fb) = (s.to_bfloat(a), s.to_bfloat(b));
                    let sum = s.add(a, b).unwrap();
                    assert_eq!(s.to_bfloat(&sum), m.add(&fa, &fb).unwrap(), "{a:?} + {b:?}");
                    assert_eq!(s.to_bfloat(&s.mul(a, b).unwrap()), m.mul(&fa, &fb).unwrap());
                    if b.n != 0 {
                        assert_eq!(s.to_bfloat(&s.div(a, b).unwrap()), m.div(&fa, &fb).unwrap());
                    }
                    assert_eq!(s.cmp_abs(a, b), m.cmp_abs(&fa, &fb));
                    assert_eq!(s.magnitude_key(a).cmp(&s.magnitude_key(b)), m.cmp_abs(&fa, &fb));
                }
                assert_eq!(s.max_exponent(a), m.max_exponent(&s.to_bfloat(a)));
                assert_eq!(s.canonical_exponent(a), m.canonical_exponent(&s.to_bfloat(a)));
            }
        }
    }

    #[test]
    fn far_apart_addends_round_like_the_model() {
        let s = SmallBinary::new(6, 400).unwrap();
        let m = s.model().clone();
        for (a, b) in [((63, 100), (-1, -200)), ((32, 0), (1, -80)), ((33, 0), (-63, -90)), ((1, 0), (-1, -300))] {
            let (a, b) = (SmallFloat { n: a.0, e: a.1 }, SmallFloat { n: b.0, e: b.1 });
            let got = s.to_bfloat(&s.add(&a, &b).unwrap());
            assert_eq!(got, m.add(&s.to_bfloat(&a), &s.to_bfloat(&b)).unwrap());
        }
    }
}
