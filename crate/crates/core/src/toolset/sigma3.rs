//! The three-input summation operator: it keeps two residuals `a`, `b`,
//! absorbs one new float `c` per firing and emits a component once the
//! residual pair no longer captures the exact pending sum.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::Signed;

use super::{add_stat, Stats, StreamItem, Tracer};
use crate::eft::{fast_two_sum_at, two_sum, EftPair};
use crate::error::{Error, Result};
use crate::float::{valid_exponent, FloatArith};

/// Stands for the unbounded top amplitude of zero.
const UNBOUNDED: i64 = i64::MAX / 4;

#[derive(Clone, Debug, PartialEq)]
pub struct ThreeSumState<F> {
    pub a: F,
    pub b: F,
}

impl<F: Clone> ThreeSumState<F> {
    pub fn zero<A: FloatArith<Float = F>>(arith: &A) -> Self {
        ThreeSumState { a: arith.zero(), b: arith.zero() }
    }
}

/// Outcome of one firing, with the intermediate values of the three exact sums.
#[derive(Clone, Debug, PartialEq)]
pub struct Sigma3Step<F> {
    pub state: ThreeSumState<F>,
    pub emitted: Option<F>,
    /// Whether all three exact sums ran as Fast2Sum.
    pub early_exit: bool,
    /// Amplitude used for `c`.
    pub e_c: i64,
    pub u: F,
    pub v: F,
    pub w: F,
    pub a1: F,
    pub b1: F,
    pub c1: F,
}

fn top<A: FloatArith>(arith: &A, x: &A::Float) -> i64 {
    arith.max_exponent(x).unwrap_or(UNBOUNDED)
}

/// `a = 0` or `|b| + n_max beta^e_c <= n_max beta^e_a`.
fn early_exit_allowed<A: FloatArith>(arith: &A, a: &A::Float, e_a: i64, b: &A::Float, e_c: i64) -> bool {
    if arith.is_zero(a) {
        return true;
    }
    if arith.is_zero(b) {
        return e_c <= e_a;
    }
    let model = arith.model();
    let fb = arith.to_bfloat(b);
    let base = e_c.min(fb.e);
    let nmax = model.n_max();
    let lhs = fb.n.abs() * model.radix_pow((fb.e - base) as u64) + nmax * model.radix_pow((e_c - base) as u64);
    let rhs: BigInt = nmax * model.radix_pow((e_a - base) as u64);
    lhs <= rhs
}

fn early_sum<A: FloatArith>(
    arith: &A,
    x: &A::Float,
    e_x: i64,
    y: &A::Float,
    cap: i64,
) -> Option<Result<EftPair<A::Float>>> {
    let e_y = top(arith, y).min(cap);
    if !arith.is_zero(y) && !valid_exponent(arith, y, e_y) {
        return None;
    }
    if e_y > e_x {
        return None;
    }
    Some(fast_two_sum_at(arith, x, e_x.min(UNBOUNDED), y, e_y))
}

/// One firing. `c.amplitude` caps the amplitude used for `c`; it is lowered
/// further to the state's `b` amplitude if needed, and the step fails if `c`
/// has no representation there.
pub fn sigma3_step<A: FloatArith>(
    arith: &A,
    state: &ThreeSumState<A::Float>,
    c: &StreamItem<A::Float>,
) -> Result<Sigma3Step<A::Float>> {
    if arith.beta() != 2 {
        return Err(Error::UnsupportedRadix { beta: arith.beta(), allow_three: false });
    }
    let (a, b) = (&state.a, &state.b);
    let e_a = top(arith, a);
    let e_b = top(arith, b).min(e_a);
    if !arith.is_zero(b) && arith.canonical_exponent(b) > e_b {
        return Err(Error::Invariant(format!(
            "sigma3 state out of order: a = {}, b = {}",
            arith.display(a),
            arith.display(b)
        )));
    }
    let e_c = c.amplitude.min(top(arith, &c.val)).min(e_b);
    if !arith.is_zero(&c.val) && arith.canonical_exponent(&c.val) > e_c {
        return Err(Error::Precondition(format!(
            "sigma3 input {} is larger than the state allows (amplitude cap {e_c})",
            arith.display(&c.val)
        )));
    }
    let early = early_exit_allowed(arith, a, e_a, b, e_c);
    let (uv, aw, bc) = if early {
        let uv = fast_two_sum_at(arith, b, e_b.min(UNBOUNDED), &c.val, e_c)?;
        let aw = early_sum(arith, a, e_a, &uv.hi, e_a)
            .ok_or_else(|| Error::Invariant("early exit allowed but u is above a".into()))??;
        let e_w = top(arith, &aw.lo);
        let bc = match early_sum(arith, &aw.lo, e_w, &uv.lo, e_w) {
            Some(r) => r?,
            None => {
                let e_v = top(arith, &uv.lo);
                early_sum(arith, &uv.lo, e_v, &aw.lo, e_v)
                    .ok_or_else(|| Error::Invariant("early exit allowed but w and v are not ordered".into()))??
            }
        };
        (uv, aw, bc)
    } else {
        let uv = two_sum(arith, b, &c.val)?;
        let aw = two_sum(arith, a, &uv.hi)?;
        let bc = two_sum(arith, &aw.lo, &uv.lo)?;
        (uv, aw, bc)
    };
    let (emitted, next) = if arith.is_zero(&bc.lo) {
        (None, ThreeSumState { a: aw.hi.clone(), b: bc.hi.clone() })
    } else {
        (Some(aw.hi.clone()), ThreeSumState { a: bc.hi.clone(), b: bc.lo.clone() })
    };
    Ok(Sigma3Step {
        state: next,
        emitted,
        early_exit: early,
        e_c,
        u: uv.hi,
        v: uv.lo,
        w: aw.lo,
        a1: aw.hi,
        b1: bc.hi,
        c1: bc.lo,
    })
}

/// Remaining nonzero residuals, `a` then `b`.
pub fn sigma3_flush<A: FloatArith>(arith: &A, state: &ThreeSumState<A::Float>) -> Vec<A::Float> {
    [&state.a, &state.b].into_iter().filter(|x| !arith.is_zero(x)).cloned().collect()
}

/// A Σ3 stage with firing statistics.
#[derive(Clone, Debug)]
pub struct Sigma3<A: FloatArith> {
    arith: A,
    state: ThreeSumState<A::Float>,
    firings: u64,
    early_exits: u64,
    emissions: u64,
    tracer: Tracer,
    name: &'static str,
}

impl<A: FloatArith> Sigma3<A> {
    pub fn new(arith: &A) -> Self {
        Sigma3 {
            arith: arith.clone(),
            state: ThreeSumState::zero(arith),
            firings: 0,
            early_exits: 0,
            emissions: 0,
            tracer: Tracer::default(),
            name: "sigma3",
        }
    }

    pub fn with_tracer(mut self, tracer: Tracer, name: &'static str) -> Self {
        self.tracer = tracer;
        self.name = name;
        self
    }

    pub fn state(&self) -> &ThreeSumState<A::Float> {
        &self.state
    }

    pub fn set_state(&mut self, state: ThreeSumState<A::Float>) {
        self.state = state;
    }

    /// Whether `c` can be inserted without breaking the amplitude order.
    pub fn accepts(&self, c: &StreamItem<A::Float>) -> bool {
        let arith = &self.arith;
        if arith.is_zero(&c.val) {
            return true;
        }
        let e_a = top(arith, &self.state.a);
        let e_b = top(arith, &self.state.b).min(e_a);
        let e_c = c.amplitude.min(top(arith, &c.val)).min(e_b);
        arith.canonical_exponent(&c.val) <= e_c
    }

    pub fn push(&mut self, c: &StreamItem<A::Float>) -> Result<Option<A::Float>> {
        let step = sigma3_step(&self.arith, &self.state, c)?;
        self.firings += 1;
        self.early_exits += step.early_exit as u64;
        self.emissions += step.emitted.is_some() as u64;
        let arith = &self.arith;
        self.tracer.record(self.name, || {
            let st = format!("{},{}", arith.display(&step.state.a), arith.display(&step.state.b));
            (format!("{}@{}", arith.display(&c.val), step.e_c), step.emitted.as_ref().map(|x| arith.display(x)), st)
        });
        self.state = step.state;
        Ok(step.emitted)
    }

    pub fn flush(&mut self) -> Vec<A::Float> {
        let out = sigma3_flush(&self.arith, &self.state);
        self.state = ThreeSumState::zero(&self.arith);
        out
    }

    /// Exact value of the retained residuals.
    pub fn pending_value(&self) -> BigRational {
        self.arith.value(&self.state.a) + self.arith.value(&self.state.b)
    }

    pub fn is_empty(&self) -> bool {
        self.arith.is_zero(&self.state.a) && self.arith.is_zero(&self.state.b)
    }

    pub fn collect_stats(&self, stats: &mut Stats) {
        add_stat(stats, self.name, self.firings);
        add_stat(stats, "sigma3.early_exit", self.early_exits);
        add_stat(stats, "sigma3.emit", self.emissions);
    }
}
