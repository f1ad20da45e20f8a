//! Input generators shared by the benchmarks.

use adapt_core::{BigRational, PseudoExpansion};
use adapt_core::{Binary64, FloatArith};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A double with a full random significand and exponent in `[lo, hi]`.
pub fn float_in(rng: &mut impl Rng, lo: i32, hi: i32) -> f64 {
    let m: u64 = rng.gen_range(1u64 << 52..1u64 << 53);
    let s = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
    s * m as f64 * 2f64.powi(rng.gen_range(lo..=hi) - 52)
}

/// A pseudo-expansion of `len` components with ratio at most 1/4.
pub fn expansion(rng: &mut impl Rng, len: usize) -> PseudoExpansion<f64> {
    let mut e = rng.gen_range(-20..20);
    let mut xs = Vec::with_capacity(len);
    for _ in 0..len {
        xs.push(float_in(rng, e, e));
        e -= rng.gen_range(3..60);
    }
    PseudoExpansion::new(&Binary64, xs, BigRational::new(1.into(), 4.into())).expect("ratios of at most 1/4")
}

/// Orientation matrix of three nearly collinear points.
pub fn orientation(rng: &mut impl Rng) -> Vec<Vec<BigRational>> {
    let p = [float_in(rng, 0, 3), float_in(rng, 0, 3)];
    let q = [float_in(rng, 0, 3), float_in(rng, 0, 3)];
    let t = rng.gen::<f64>();
    let r = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
    [p, q, r].iter().map(|pt| vec![Binary64.value(&pt[0]), Binary64.value(&pt[1]), Binary64.value(&1.0)]).collect()
}
