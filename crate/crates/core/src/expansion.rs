//! Expansions (non-overlapping float sums) and pseudo-expansions (float sums
//! whose consecutive nonzero components shrink by a factor `epsilon < 1/2`).
//! Components are stored most significant first.

use std::cmp::Ordering;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::eft::{fast_two_sum, two_sum};
use crate::error::{precondition, Error, Result};
use crate::float::{cmp_abs_scaled, FloatArith};

#[derive(Clone, Debug, PartialEq)]
pub struct Expansion<F> {
    components: Vec<F>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PseudoExpansion<F> {
    components: Vec<F>,
    epsilon: BigRational,
}

fn nonzero<A: FloatArith>(arith: &A, xs: impl IntoIterator<Item = A::Float>) -> Vec<A::Float> {
    xs.into_iter().filter(|x| !arith.is_zero(x)).collect()
}

/// Exact sum of the components.
pub fn value_of<A: FloatArith>(arith: &A, xs: &[A::Float]) -> BigRational {
    xs.iter().fold(BigRational::zero(), |acc, x| acc + arith.value(x))
}

/// `|y| < beta^e` for the largest bounded amplitude `e` of `x`.
fn below_top_digit<A: FloatArith>(arith: &A, x: &A::Float, y: &A::Float) -> bool {
    let Some(top) = arith.max_exponent(x) else {
        return false;
    };
    let one = arith.from_bfloat(&crate::fmodel::BFloat::new(1, 0));
    match one {
        Ok(one) => cmp_abs_scaled(arith, y, 1, 0, &one, 1, top) == Ordering::Less,
        Err(_) => false,
    }
}

/// Checks the non-overlap condition on the nonzero components.
pub fn validate_expansion<A: FloatArith>(arith: &A, xs: &[A::Float]) -> bool {
    if xs.iter().any(|x| !arith.is_bounded(x)) {
        return false;
    }
    let nz = nonzero(arith, xs.iter().cloned());
    nz.windows(2).all(|w| below_top_digit(arith, &w[0], &w[1]))
}

/// Checks `0 < epsilon < 1/2` and `|x_{i+1}| <= epsilon |x_i|` on the nonzero
/// components.
pub fn validate_pseudo<A: FloatArith>(arith: &A, xs: &[A::Float], epsilon: &BigRational) -> bool {
    if !epsilon_in_range(epsilon) || xs.iter().any(|x| !arith.is_bounded(x)) {
        return false;
    }
    let vals: Vec<BigRational> = nonzero(arith, xs.iter().cloned()).iter().map(|x| arith.value(x).abs()).collect();
    vals.windows(2).all(|w| w[1] <= &w[0] * epsilon)
}

fn epsilon_in_range(eps: &BigRational) -> bool {
    eps.is_positive() && eps * BigInt::from(2) < BigRational::one()
}

impl<F: Clone> Expansion<F> {
    /// Drops zero components and checks the non-overlap condition.
    pub fn new<A: FloatArith<Float = F>>(arith: &A, components: Vec<F>) -> Result<Self> {
        let components = nonzero(arith, components);
        if !validate_expansion(arith, &components) {
            return precondition("components overlap or are not bounded");
        }
        Ok(Expansion { components })
    }

    pub(crate) fn from_valid(components: Vec<F>) -> Self {
        Expansion { components }
    }

    pub fn components(&self) -> &[F] {
        &self.components
    }

    pub fn into_components(self) -> Vec<F> {
        self.components
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn value<A: FloatArith<Float = F>>(&self, arith: &A) -> BigRational {
        value_of(arith, &self.components)
    }
}

impl<F: Clone> PseudoExpansion<F> {
    /// Drops zero components and checks the ratio chain.
    pub fn new<A: FloatArith<Float = F>>(arith: &A, components: Vec<F>, epsilon: BigRational) -> Result<Self> {
        if !epsilon_in_range(&epsilon) {
            return precondition(format!("epsilon {epsilon} must lie in (0, 1/2)"));
        }
        let components = nonzero(arith, components);
        if !validate_pseudo(arith, &components, &epsilon) {
            return precondition(format!("component ratios exceed epsilon {epsilon}"));
        }
        Ok(PseudoExpansion { components, epsilon })
    }

    /// Builds from the tail hypothesis `|sum_{j>i} x_j| <= lambda |x_i|`, which
    /// gives `epsilon = lambda / (1 - lambda)`; `lambda < 1/3` keeps
    /// `epsilon < 1/2`. The hypothesis itself is trusted.
    pub fn from_tail_bound<A: FloatArith<Float = F>>(
        arith: &A,
        components: Vec<F>,
        lambda: BigRational,
    ) -> Result<Self> {
        let third = BigRational::new(1.into(), 3.into());
        if !lambda.is_positive() || lambda >= third {
            return precondition(format!("lambda {lambda} must lie in (0, 1/3)"));
        }
        let epsilon = &lambda / (BigRational::one() - &lambda);
        Ok(PseudoExpansion { components: nonzero(arith, components), epsilon })
    }

    pub fn components(&self) -> &[F] {
        &self.components
    }

    pub fn into_components(self) -> Vec<F> {
        self.components
    }

    pub fn epsilon(&self) -> &BigRational {
        &self.epsilon
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    pub fn value<A: FloatArith<Float = F>>(&self, arith: &A) -> BigRational {
        value_of(arith, &self.components)
    }

    /// `epsilon / (1 - epsilon) * |x_i|`, a bound on the sum of the components
    /// after `x_i`.
    pub fn tail_bound<A: FloatArith<Float = F>>(&self, arith: &A, i: usize) -> Result<BigRational> {
        let x = self.components.get(i).ok_or_else(|| {
            Error::Precondition(format!("component index {i} out of range for length {}", self.components.len()))
        })?;
        Ok(tail_factor(&self.epsilon) * arith.value(x).abs())
    }
}

/// `epsilon / (1 - epsilon)`.
pub fn tail_factor(epsilon: &BigRational) -> BigRational {
    epsilon / (BigRational::one() - epsilon)
}

/// Exact non-overlapping expansion with the same value as `xs` (radix 2).
///
/// The components are first accumulated into a non-overlapping expansion by
/// repeated TwoSum (zero-eliminating grow), then compressed by two sweeps of
/// Fast2Sum, and returned most significant first.
pub fn renormalize<A: FloatArith>(arith: &A, xs: &[A::Float]) -> Result<Expansion<A::Float>> {
    if arith.beta() != 2 {
        return Err(Error::UnsupportedRadix { beta: arith.beta(), allow_three: false });
    }
    // Increasing magnitude.
    let mut h: Vec<A::Float> = Vec::new();
    for x in xs.iter().rev() {
        if arith.is_zero(x) {
            continue;
        }
        let mut q = x.clone();
        let mut next = Vec::with_capacity(h.len() + 1);
        for hi in &h {
            let r = two_sum(arith, &q, hi)?;
            if !arith.is_zero(&r.lo) {
                next.push(r.lo);
            }
            q = r.hi;
        }
        if !arith.is_zero(&q) {
            next.push(q);
        }
        h = next;
    }
    let out = compress(arith, &h)?;
    debug_assert!(validate_expansion(arith, &out));
    Ok(Expansion::from_valid(out))
}

/// Compression of an increasing non-overlapping expansion; returns it most
/// significant first with zeros removed.
fn compress<A: FloatArith>(arith: &A, e: &[A::Float]) -> Result<Vec<A::Float>> {
    let m = e.len();
    if m == 0 {
        return Ok(Vec::new());
    }
    let mut g: Vec<A::Float> = vec![arith.zero(); m];
    let mut q = e[m - 1].clone();
    let mut bottom = m - 1;
    for i in (0..m - 1).rev() {
        let r = fast_two_sum(arith, &q, &e[i])?;
        if arith.is_zero(&r.lo) {
            q = r.hi;
        } else {
            g[bottom] = r.hi;
            bottom -= 1;
            q = r.lo;
        }
    }
    g[bottom] = q;
    let mut h = Vec::with_capacity(m - bottom);
    let mut q = g[bottom].clone();
    for gi in &g[bottom + 1..] {
        let r = fast_two_sum(arith, gi, &q)?;
        if !arith.is_zero(&r.lo) {
            h.push(r.lo);
        }
        q = r.hi;
    }
    h.push(q);
    h.retain(|x| !arith.is_zero(x));
    h.reverse();
    Ok(h)
}
