#![allow(dead_code)]

use adapt_core::{BigRational, Binary64, FloatArith, PseudoExpansion};
use rand::Rng;

pub const SEED: u64 = 0x5eed_2024;

pub fn rng(salt: u64) -> rand_chacha::ChaCha8Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(SEED ^ salt)
}

pub fn exact(x: f64) -> BigRational {
    Binary64.value(&x)
}

pub fn sum(xs: &[f64]) -> BigRational {
    xs.iter().map(|&x| exact(x)).fold(BigRational::from_integer(0.into()), |a, b| a + b)
}

/// A float with a random 53-bit significand, sign and binary exponent in `[lo, hi]`.
pub fn float_in(rng: &mut impl Rng, lo: i32, hi: i32) -> f64 {
    let m: u64 = rng.gen_range(1u64 << 52..1u64 << 53);
    let m = if rng.gen_bool(0.3) { m & !((1u64 << rng.gen_range(0..52)) - 1) } else { m };
    let s = if rng.gen_bool(0.5) { -1.0 } else { 1.0 };
    s * m as f64 * 2f64.powi(rng.gen_range(lo..=hi) - 52)
}

/// Components whose magnitudes shrink by at least `2^gap_min` each step.
pub fn pseudo(rng: &mut impl Rng, len: usize, gap_min: i32, gap_max: i32) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut e = rng.gen_range(-40..40);
    for _ in 0..len {
        out.push(float_in(rng, e, e));
        e -= rng.gen_range(gap_min..=gap_max);
    }
    out
}

pub fn quarter() -> BigRational {
    BigRational::new(1.into(), 4.into())
}

pub fn pseudo_exp(xs: Vec<f64>) -> PseudoExpansion<f64> {
    PseudoExpansion::new(&Binary64, xs, quarter()).expect("valid pseudo-expansion")
}

/// `x` moved by `k` units in the last place (through zero is not needed).
pub fn nudge(x: f64, k: i64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(k.unsigned_abs()) * k.signum() as f64;
    }
    let bits = x.to_bits() as i64;
    let step = if x > 0.0 { k } else { -k };
    f64::from_bits((bits + step) as u64)
}

pub fn rational_matrix(m: &[Vec<f64>]) -> Vec<Vec<BigRational>> {
    m.iter().map(|r| r.iter().map(|&x| exact(x)).collect()).collect()
}

pub fn det_exact(m: &[Vec<BigRational>]) -> BigRational {
    if m.len() == 2 {
        return &m[0][0] * &m[1][1] - &m[0][1] * &m[1][0];
    }
    let minor = |c0: usize, c1: usize| &m[1][c0] * &m[2][c1] - &m[1][c1] * &m[2][c0];
    &m[0][0] * minor(1, 2) - &m[0][1] * minor(0, 2) + &m[0][2] * minor(0, 1)
}

/// A nearly singular 2×2 or 3×3 matrix: proportional rows, or the orientation
/// matrix of three nearly collinear points, with some entries moved by a few
/// ulps.
pub fn near_degenerate(rng: &mut impl Rng) -> Vec<Vec<f64>> {
    let mut m = if rng.gen_bool(0.3) {
        let (a, b) = (float_in(rng, -4, 4), float_in(rng, -4, 4));
        let s = if rng.gen_bool(0.5) { rng.gen_range(1..50) as f64 } else { float_in(rng, -3, 3) };
        vec![vec![a, b], vec![a * s, b * s]]
    } else {
        let scale = rng.gen_range(-20..20);
        let p = [float_in(rng, scale, scale + 3), float_in(rng, scale, scale + 3)];
        let q = [float_in(rng, scale, scale + 3), float_in(rng, scale, scale + 3)];
        let t = match rng.gen_range(0..3) {
            0 => 0.5,
            1 => rng.gen_range(-3..5) as f64,
            _ => rng.gen::<f64>() * 4.0 - 2.0,
        };
        let r = [p[0] + t * (q[0] - p[0]), p[1] + t * (q[1] - p[1])];
        vec![vec![p[0], p[1], 1.0], vec![q[0], q[1], 1.0], vec![r[0], r[1], 1.0]]
    };
    let dim = m.len();
    for _ in 0..rng.gen_range(0..3) {
        let (i, j) = (rng.gen_range(0..dim), rng.gen_range(0..2));
        m[i][j] = nudge(m[i][j], rng.gen_range(-2..=2));
    }
    m
}
