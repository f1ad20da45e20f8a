//! Generic bounded floating-point model.
//!
//! A float is a pair `(n, e)` standing for `n * beta^e`. A pair is bounded in a
//! format when `|n| <= beta^p - 1` and `e >= -e_min`; there is no upper
//! exponent limit. All arithmetic results are returned canonical.

use std::cmp::Ordering;
use std::fmt;

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RoundingMode {
    Down,
    Up,
    TowardZero,
    NearestEven,
}

impl RoundingMode {
    pub const ALL: [RoundingMode; 4] =
        [RoundingMode::Down, RoundingMode::Up, RoundingMode::TowardZero, RoundingMode::NearestEven];
}

/// A float `n * beta^e`. The radix is a property of the format, not the value.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct BFloat {
    pub n: BigInt,
    pub e: i64,
}

impl BFloat {
    pub fn new(n: impl Into<BigInt>, e: i64) -> Self {
        BFloat { n: n.into(), e }
    }

    pub fn is_zero(&self) -> bool {
        self.n.is_zero()
    }

    pub fn neg(&self) -> Self {
        BFloat { n: -&self.n, e: self.e }
    }

    pub fn abs(&self) -> Self {
        BFloat { n: self.n.abs(), e: self.e }
    }
}

impl fmt::Display for BFloat {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.n, self.e)
    }
}

/// Powers of the radix small enough for `i128` arithmetic.
#[derive(Clone, Debug, PartialEq, Eq)]
struct SmallPowers {
    pow: Vec<u128>,
    pow_p: u128,
    pow_p1: u128,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GenericFormat {
    beta: u32,
    precision: u32,
    e_min: i64,
    n_max: BigInt,
    ulp: BigRational,
    // beta^0 ..= beta^p
    pows: Vec<BigInt>,
    small: Option<SmallPowers>,
}

impl GenericFormat {
    pub fn new(beta: u32, precision: u32, e_min: i64) -> Result<Self> {
        if beta < 2 {
            return Err(Error::InvalidFormat(format!("radix {beta} must be at least 2")));
        }
        if precision < 1 {
            return Err(Error::InvalidFormat("precision must be at least 1".into()));
        }
        if precision > 100_000 {
            return Err(Error::InvalidFormat(format!("precision {precision} is too large")));
        }
        let b = BigInt::from(beta);
        let mut pows = Vec::with_capacity(precision as usize + 1);
        pows.push(BigInt::one());
        for k in 0..precision as usize {
            let next = &pows[k] * &b;
            pows.push(next);
        }
        let pow_p = &pows[precision as usize];
        let n_max = pow_p - 1u32;
        let ulp = BigRational::new(BigInt::one(), pows[precision as usize - 1].clone());
        let small = small_powers(beta, precision);
        Ok(GenericFormat { beta, precision, e_min, n_max, ulp, pows, small })
    }

    /// Format with an `r`-digit exponent field: `bias = ceil(beta^r / 2) - 1` and
    /// `e_min = bias + p - 2`.
    pub fn with_exponent_width(beta: u32, precision: u32, r: u32) -> Result<Self> {
        if r == 0 || r > 62 {
            return Err(Error::InvalidFormat(format!("exponent width {r} out of range")));
        }
        let field = (beta as i128).checked_pow(r).filter(|v| *v < i64::MAX as i128 / 2);
        let field = field.ok_or_else(|| Error::InvalidFormat("exponent field too wide".into()))?;
        let half_up = (field + 1) / 2;
        let e_min = half_up as i64 + precision as i64 - 3;
        GenericFormat::new(beta, precision, e_min)
    }

    pub fn binary64() -> Self {
        GenericFormat::with_exponent_width(2, 53, 11).expect("binary64 parameters are valid")
    }

    pub fn binary32() -> Self {
        GenericFormat::with_exponent_width(2, 24, 8).expect("binary32 parameters are valid")
    }

    pub fn beta(&self) -> u32 {
        self.beta
    }

    pub fn precision(&self) -> u32 {
        self.precision
    }

    pub fn e_min(&self) -> i64 {
        self.e_min
    }

    pub fn n_max(&self) -> &BigInt {
        &self.n_max
    }

    /// `beta^(1-p)`.
    pub fn ulp(&self) -> &BigRational {
        &self.ulp
    }

    /// `beta^k` for `k >= 0`.
    pub fn radix_pow(&self, k: u64) -> BigInt {
        if let Some(p) = self.pows.get(k as usize) {
            return p.clone();
        }
        if self.beta == 2 {
            return BigInt::one() << k;
        }
        let top = self.pows.len() as u64 - 1;
        let mut acc = self.pows[top as usize].clone();
        let mut left = k - top;
        while left > top {
            acc *= &self.pows[top as usize];
            left -= top;
        }
        acc * &self.pows[left as usize]
    }

    /// `beta^k` as a rational, for any sign of `k`.
    pub fn radix_pow_rational(&self, k: i64) -> BigRational {
        if k >= 0 {
            BigRational::from_integer(self.radix_pow(k as u64))
        } else {
            BigRational::new_raw(BigInt::one(), self.radix_pow(k.unsigned_abs()))
        }
    }

    pub fn value(&self, f: &BFloat) -> BigRational {
        if f.n.is_zero() {
            return BigRational::zero();
        }
        if f.e >= 0 {
            BigRational::from_integer(&f.n * self.radix_pow(f.e as u64))
        } else {
            BigRational::new(f.n.clone(), self.radix_pow(f.e.unsigned_abs()))
        }
    }

    pub fn is_bounded(&self, f: &BFloat) -> bool {
        f.e >= -self.e_min && f.n.magnitude() <= self.n_max.magnitude()
    }

    pub fn check_bounded(&self, f: &BFloat) -> Result<()> {
        if self.is_bounded(f) {
            Ok(())
        } else {
            Err(Error::Unbounded { n: f.n.to_string(), e: f.e })
        }
    }

    pub fn is_normal(&self, f: &BFloat) -> bool {
        self.is_bounded(f) && f.n.magnitude() * self.beta > *self.n_max.magnitude()
    }

    pub fn is_subnormal(&self, f: &BFloat) -> bool {
        self.is_bounded(f) && f.e == -self.e_min && f.n.magnitude() * self.beta <= *self.n_max.magnitude()
    }

    pub fn is_canonical(&self, f: &BFloat) -> bool {
        self.is_normal(f) || self.is_subnormal(f)
    }

    /// Number of base-beta digits of a nonzero magnitude that fits in `p` digits.
    fn digits_bounded(&self, mag: &BigInt) -> u32 {
        let idx = self.pows.partition_point(|p| p <= mag);
        idx as u32
    }

    pub fn canonicalize(&self, f: &BFloat) -> Result<BFloat> {
        self.check_bounded(f)?;
        Ok(self.canonicalize_bounded(f))
    }

    pub(crate) fn canonicalize_bounded(&self, f: &BFloat) -> BFloat {
        if f.n.is_zero() {
            return BFloat::new(0, -self.e_min);
        }
        let digits = match (self.small.as_ref(), f.n.to_i128()) {
            (Some(_), Some(v)) => v.unsigned_abs().ilog(self.beta as u128) + 1,
            _ => self.digits_bounded(&f.n.abs()),
        };
        let room = self.precision as i64 - digits as i64;
        let k = room.min(f.e + self.e_min);
        if k <= 0 {
            return f.clone();
        }
        BFloat { n: &f.n * &self.pows[k as usize], e: f.e - k }
    }

    /// Canonical amplitude of a bounded float.
    pub fn canonical_exponent(&self, f: &BFloat) -> i64 {
        self.canonicalize_bounded(f).e
    }

    /// Largest amplitude of any bounded representation of a nonzero float.
    /// `None` for zero, whose representations are unbounded above.
    pub fn max_exponent(&self, f: &BFloat) -> Option<i64> {
        if f.n.is_zero() {
            return None;
        }
        let c = self.canonicalize_bounded(f);
        Some(c.e + self.trailing_digits(&c.n) as i64)
    }

    fn trailing_digits(&self, n: &BigInt) -> u64 {
        if self.beta == 2 {
            return n.trailing_zeros().unwrap_or(0);
        }
        let b = BigInt::from(self.beta);
        let mut m = n.clone();
        let mut count = 0;
        loop {
            let (q, r) = m.div_rem(&b);
            if !r.is_zero() {
                return count;
            }
            m = q;
            count += 1;
        }
    }

    /// The representation of `f` with amplitude `e`, if it is bounded.
    pub fn with_exponent(&self, f: &BFloat, e: i64) -> Option<BFloat> {
        if e < -self.e_min {
            return None;
        }
        if f.n.is_zero() {
            return Some(BFloat::new(0, e));
        }
        let c = self.canonicalize_bounded(f);
        match e.cmp(&c.e) {
            Ordering::Less => None,
            Ordering::Equal => Some(c),
            Ordering::Greater => {
                let d = self.radix_pow((e - c.e) as u64);
                let (q, r) = c.n.div_rem(&d);
                if r.is_zero() {
                    Some(BFloat { n: q, e })
                } else {
                    None
                }
            }
        }
    }

    /// Rounds an exact rational.
    pub fn round(&self, x: &BigRational, mode: RoundingMode) -> BFloat {
        self.round_scaled(x.numer(), x.denom(), 0, mode)
    }

    /// Rounds `num / den * beta^scale` with `den > 0`.
    pub fn round_scaled(&self, num: &BigInt, den: &BigInt, scale: i64, mode: RoundingMode) -> BFloat {
        debug_assert!(den.is_positive());
        if num.is_zero() {
            return BFloat::new(0, -self.e_min);
        }
        if den.is_one() {
            if let Some(n) = num.to_i128() {
                if let Some(f) = self.round_small(n, scale, mode) {
                    return f;
                }
            }
        }
        self.round_big(num, den, scale, mode)
    }

    fn round_small(&self, n: i128, m: i64, mode: RoundingMode) -> Option<BFloat> {
        let sp = self.small.as_ref()?;
        let neg = n < 0;
        let mag = n.unsigned_abs();
        let digits = mag.ilog(self.beta as u128) as i64 + 1;
        let mut t = digits - self.precision as i64;
        if m.checked_add(t)? < -self.e_min {
            t = -self.e_min - m;
        }
        if t <= 0 {
            let k = (-t) as usize;
            let factor = *sp.pow.get(k)?;
            let out = mag.checked_mul(factor)?;
            let out = out as i128;
            return Some(BFloat::new(if neg { -out } else { out }, m + t));
        }
        let div = *sp.pow.get(t as usize)?;
        let q = mag / div;
        let r = mag % div;
        let inc = round_increment(mode, neg, r.is_zero(), (2 * r).cmp(&div), || {
            let up = if q + 1 == sp.pow_p { sp.pow_p1 } else { q + 1 };
            (q % 2 == 0, up % 2 == 0)
        });
        let mut q = q + inc as u128;
        let mut e = m + t;
        if q == sp.pow_p {
            q = sp.pow_p1;
            e += 1;
        }
        if q == 0 {
            return Some(BFloat::new(0, -self.e_min));
        }
        let q = q as i128;
        Some(BFloat::new(if neg { -q } else { q }, e))
    }

    fn round_big(&self, num: &BigInt, den: &BigInt, m: i64, mode: RoundingMode) -> BFloat {
        let neg = num.is_negative();
        let mag = num.abs();
        let lb = log2_approx(&mag) - log2_approx(den);
        let est = (lb / (self.beta as f64).log2()).floor() as i64;
        let p = self.precision as i64;
        let pow_p1 = &self.pows[self.precision as usize - 1];
        let pow_p = &self.pows[self.precision as usize];
        let mut t = est + 1 - p;
        let scaled = |t: i64| -> (BigInt, BigInt) {
            if t >= 0 {
                (mag.clone(), den * self.radix_pow(t as u64))
            } else {
                (&mag * self.radix_pow(t.unsigned_abs()), den.clone())
            }
        };
        let (mut sn, mut sd) = scaled(t);
        loop {
            if sn < pow_p1 * &sd {
                t -= 1;
            } else if sn >= pow_p * &sd {
                t += 1;
            } else {
                break;
            }
            (sn, sd) = scaled(t);
        }
        if m + t < -self.e_min {
            t = -self.e_min - m;
            (sn, sd) = scaled(t);
        }
        let (q, r) = sn.div_rem(&sd);
        let twice: BigInt = &r << 1;
        let inc = round_increment(mode, neg, r.is_zero(), twice.cmp(&sd), || {
            let up = &q + 1u32;
            let up = if &up == pow_p { pow_p1.clone() } else { up };
            (q.is_even(), up.is_even())
        });
        let mut q = if inc { q + 1u32 } else { q };
        let mut e = m + t;
        if &q == pow_p {
            q = pow_p1.clone();
            e += 1;
        }
        if q.is_zero() {
            return BFloat::new(0, -self.e_min);
        }
        BFloat { n: if neg { -q } else { q }, e }
    }

    /// Canonical float `n * beta^m` rounded.
    fn round_int(&self, n: BigInt, m: i64, mode: RoundingMode) -> BFloat {
        self.round_scaled(&n, &BigInt::one(), m, mode)
    }

    fn aligned_sum(&self, a: &BFloat, b: &BFloat) -> (BigInt, i64) {
        let m = a.e.min(b.e);
        let na = self.shift_up(&a.n, a.e - m);
        let nb = self.shift_up(&b.n, b.e - m);
        (na + nb, m)
    }

    fn shift_up(&self, n: &BigInt, k: i64) -> BigInt {
        if k == 0 {
            return n.clone();
        }
        if let (Some(sp), Some(v)) = (self.small.as_ref(), n.to_i128()) {
            if let Some(f) = sp.pow.get(k as usize) {
                if let Some(r) = v.checked_mul(*f as i128) {
                    return BigInt::from(r);
                }
            }
        }
        if self.beta == 2 {
            return n << k as u64;
        }
        n * self.radix_pow(k as u64)
    }

    pub fn add_rounded(&self, a: &BFloat, b: &BFloat, mode: RoundingMode) -> BFloat {
        if a.n.is_zero() {
            return self.round_int(b.n.clone(), b.e, mode);
        }
        if b.n.is_zero() {
            return self.round_int(a.n.clone(), a.e, mode);
        }
        let (n, m) = self.aligned_sum(a, b);
        self.round_int(n, m, mode)
    }

    pub fn sub_rounded(&self, a: &BFloat, b: &BFloat, mode: RoundingMode) -> BFloat {
        self.add_rounded(a, &b.neg(), mode)
    }

    pub fn mul_rounded(&self, a: &BFloat, b: &BFloat, mode: RoundingMode) -> BFloat {
        if a.n.is_zero() || b.n.is_zero() {
            return BFloat::new(0, -self.e_min);
        }
        self.round_int(&a.n * &b.n, a.e + b.e, mode)
    }

    /// `a * b + c` with a single rounding.
    pub fn fma_rounded(&self, a: &BFloat, b: &BFloat, c: &BFloat, mode: RoundingMode) -> BFloat {
        if a.n.is_zero() || b.n.is_zero() {
            return self.round_int(c.n.clone(), c.e, mode);
        }
        let prod = BFloat { n: &a.n * &b.n, e: a.e + b.e };
        self.add_rounded(&prod, c, mode)
    }

    pub fn div_rounded(&self, a: &BFloat, b: &BFloat, mode: RoundingMode) -> Result<BFloat> {
        if b.n.is_zero() {
            return Err(Error::DivisionByZero);
        }
        if a.n.is_zero() {
            return Ok(BFloat::new(0, -self.e_min));
        }
        let (num, den) = if b.n.is_negative() { (-&a.n, -&b.n) } else { (a.n.clone(), b.n.clone()) };
        Ok(self.round_scaled(&num, &den, a.e - b.e, mode))
    }

    /// Exact comparison of `|a|` and `|b|`.
    pub fn cmp_abs(&self, a: &BFloat, b: &BFloat) -> Ordering {
        match (a.n.is_zero(), b.n.is_zero()) {
            (true, true) => return Ordering::Equal,
            (true, false) => return Ordering::Less,
            (false, true) => return Ordering::Greater,
            _ => {}
        }
        let ca = self.canonicalize_bounded(a);
        let cb = self.canonicalize_bounded(b);
        ca.e.cmp(&cb.e).then_with(|| ca.n.magnitude().cmp(cb.n.magnitude()))
    }

    /// Round-off error amplitude bound: for `f = round(x)` with `f != x`, every
    /// bounded representation `(n', e')` of `x - f` has `e' < f.e`, and
    /// `(1, f.e - 1)` is the tight case. Returns the strict upper limit `f.e`.
    pub fn round_error_amplitude_bound(&self, f: &BFloat) -> i64 {
        f.e
    }

    /// Every canonical bounded float with amplitude in `[-e_min, e_top]`,
    /// ascending by value.
    pub fn enumerate_bounded(&self, e_top: i64, budget: usize) -> Result<Vec<BFloat>> {
        let zero = BFloat::new(0, -self.e_min);
        if e_top < -self.e_min {
            return Ok(vec![zero]);
        }
        let n_max = self.n_max.to_i64().filter(|v| *v < 1 << 40);
        let n_max = n_max.ok_or(Error::Budget(budget))?;
        let p1 = self.pows[self.precision as usize - 1].to_i64().unwrap_or(0);
        let amps = (e_top + self.e_min) as u128;
        let count = 1 + 2 * (n_max as u128) + 2 * amps * (n_max - p1 + 1) as u128;
        if count > budget as u128 {
            return Err(Error::Budget(budget));
        }
        let mut positive = Vec::with_capacity(count as usize / 2);
        for n in 1..=n_max {
            positive.push(BFloat::new(n, -self.e_min));
        }
        for e in (-self.e_min + 1)..=e_top {
            for n in p1..=n_max {
                positive.push(BFloat::new(n, e));
            }
        }
        let mut out: Vec<BFloat> = positive.iter().rev().map(BFloat::neg).collect();
        out.push(zero);
        out.extend(positive);
        Ok(out)
    }

    /// Every bounded representation (canonical or not) with amplitude in
    /// `[-e_min, e_top]`, zero included once per amplitude.
    pub fn enumerate_representations(&self, e_top: i64, budget: usize) -> Result<Vec<BFloat>> {
        let n_max = self.n_max.to_i64().filter(|v| *v < 1 << 40).ok_or(Error::Budget(budget))?;
        let amps = (e_top + self.e_min + 1).max(0) as u128;
        if amps * (2 * n_max as u128 + 1) > budget as u128 {
            return Err(Error::Budget(budget));
        }
        let mut out = Vec::new();
        for e in -self.e_min..=e_top {
            for n in -n_max..=n_max {
                out.push(BFloat::new(n, e));
            }
        }
        Ok(out)
    }

    /// Membership of `f` in the rounding class of `x` under `mode`. For
    /// `NearestEven` this is the tie-to-even class; see [`Self::in_nearest_class`]
    /// for the plain nearest class.
    pub fn in_rounding_class(&self, f: &BFloat, x: &BigRational, mode: RoundingMode) -> bool {
        self.is_bounded(f) && self.value(f) == self.value(&self.round(x, mode))
    }

    /// Membership in the nearest class: no bounded float is strictly closer to `x`.
    pub fn in_nearest_class(&self, f: &BFloat, x: &BigRational) -> bool {
        if !self.is_bounded(f) {
            return false;
        }
        let d = (self.value(f) - x).abs();
        let lo = (self.value(&self.round(x, RoundingMode::Down)) - x).abs();
        let hi = (self.value(&self.round(x, RoundingMode::Up)) - x).abs();
        d <= lo && d <= hi
    }
}

/// Whether to step the truncated magnitude up by one unit. `half` compares
/// twice the remainder with the divisor; `parity` yields the evenness of the
/// canonical significands of the two candidates.
fn round_increment(
    mode: RoundingMode,
    neg: bool,
    exact: bool,
    half: Ordering,
    parity: impl FnOnce() -> (bool, bool),
) -> bool {
    if exact {
        return false;
    }
    match mode {
        RoundingMode::TowardZero => false,
        RoundingMode::Down => neg,
        RoundingMode::Up => !neg,
        RoundingMode::NearestEven => match half {
            Ordering::Less => false,
            Ordering::Greater => true,
            Ordering::Equal => {
                let (low_even, high_even) = parity();
                // Both candidates odd only happens for p = 1 with an even radix;
                // the tie then goes away from zero.
                !low_even || high_even
            }
        },
    }
}

fn small_powers(beta: u32, precision: u32) -> Option<SmallPowers> {
    let b = beta as u128;
    let mut pow = vec![1u128];
    while let Some(next) = pow.last().unwrap().checked_mul(b) {
        if next >= 1 << 126 {
            break;
        }
        pow.push(next);
    }
    let pow_p = *pow.get(precision as usize)?;
    if pow_p >= 1 << 62 {
        return None;
    }
    let pow_p1 = pow[precision as usize - 1];
    Some(SmallPowers { pow, pow_p, pow_p1 })
}

fn log2_approx(x: &BigInt) -> f64 {
    let bits = x.bits();
    if bits <= 64 {
        return x.to_f64().unwrap_or(0.0).abs().log2();
    }
    let shift = bits - 64;
    let top: BigInt = x.abs() >> shift;
    top.to_f64().unwrap_or(1.0).log2() + shift as f64
}
