//! Addition, multiplication and division of pseudo-expansions as streams
//! emitting the most significant component first.

use std::collections::VecDeque;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::eft::{two_product, two_sum, EftPair, ProductPair};
use crate::error::{Error, Result};
use crate::expansion::{renormalize, value_of, PseudoExpansion};
use crate::float::{valid_exponent, FloatArith};
use crate::toolset::{
    abs_value, add_stat, mq_merge, pp_generate, BoxItems, BoxStream, FloatStream, ItemSource, KeyPolicy, Keyed,
    PriorityQueue, Pull, Sigma3, Stats, StreamItem, Tracer, VecSource,
};

/// `(6 #L + 6) / (n_max - 1 - 6 #L)`, or `None` when it is not below 1.
pub fn sum_epsilon<A: FloatArith>(arith: &A, len: usize) -> Option<BigRational> {
    let six_l = BigInt::from(6u64) * BigInt::from(len as u64);
    let den = arith.n_max() - BigInt::one() - &six_l;
    if !den.is_positive() {
        return None;
    }
    let eps = BigRational::new(six_l + BigInt::from(6u64), den);
    (eps < BigRational::one()).then_some(eps)
}

/// `3 (1 + 2 #L) ulp`, the tail factor of a sum output.
pub fn sum_tail_factor<A: FloatArith>(arith: &A, len: usize) -> BigRational {
    BigRational::from_integer(BigInt::from(3 * (1 + 2 * len as u64))) * arith.ulp()
}

/// Lowers amplitudes of a magnitude-sorted item stream to their running
/// minimum.
pub struct Rerepresent<A: FloatArith> {
    arith: A,
    inner: BoxItems<A>,
    floor: i64,
}

impl<A: FloatArith> Rerepresent<A> {
    pub fn new(arith: &A, inner: BoxItems<A>) -> Self {
        Rerepresent { arith: arith.clone(), inner, floor: i64::MAX }
    }
}

impl<A: FloatArith> ItemSource<A> for Rerepresent<A> {
    fn pull_item(&mut self) -> Result<Pull<StreamItem<A::Float>>> {
        Ok(match self.inner.pull_item()? {
            Pull::Item(mut it) => {
                let e = it.amplitude.min(self.floor);
                if !valid_exponent(&self.arith, &it.val, e) {
                    return Err(Error::Invariant(format!(
                        "{} has no representation with amplitude {e}",
                        self.arith.display(&it.val)
                    )));
                }
                self.floor = e;
                it.amplitude = e;
                Pull::Item(it)
            }
            other => other,
        })
    }

    fn residual(&self) -> Option<BigRational> {
        self.inner.residual()
    }

    fn collect_stats(&self, stats: &mut Stats) {
        self.inner.collect_stats(stats)
    }
}

/// A Σ3 stage fed by an amplitude-sorted item stream, drained at the end.
pub struct SumStream<A: FloatArith> {
    arith: A,
    src: BoxItems<A>,
    sigma: Sigma3<A>,
    flushed: VecDeque<A::Float>,
    src_done: bool,
}

impl<A: FloatArith> SumStream<A> {
    pub fn new(arith: &A, src: BoxItems<A>, tracer: Tracer) -> Self {
        SumStream {
            arith: arith.clone(),
            src,
            sigma: Sigma3::new(arith).with_tracer(tracer, "sigma3"),
            flushed: VecDeque::new(),
            src_done: false,
        }
    }
}

impl<A: FloatArith> FloatStream<A> for SumStream<A> {
    fn pull(&mut self) -> Result<Pull<A::Float>> {
        while !self.src_done {
            match self.src.pull_item()? {
                Pull::Item(c) => {
                    if let Some(x) = self.sigma.push(&c)? {
                        return Ok(Pull::Item(x));
                    }
                }
                Pull::Frozen => return Ok(Pull::Frozen),
                Pull::Done => {
                    self.src_done = true;
                    self.flushed = self.sigma.flush().into();
                }
            }
        }
        Ok(match self.flushed.pop_front() {
            Some(x) => Pull::Item(x),
            None => Pull::Done,
        })
    }

    fn residual(&self) -> Option<BigRational> {
        if self.src_done {
            let rest: Vec<A::Float> = self.flushed.iter().cloned().collect();
            return Some(value_of(&self.arith, &rest).abs());
        }
        Some(self.sigma.pending_value().abs() + self.src.residual()?)
    }

    fn collect_stats(&self, stats: &mut Stats) {
        self.sigma.collect_stats(stats);
        self.src.collect_stats(stats);
    }
}

/// `A + B` over two float streams: magnitude merge, amplitude re-representation, Σ3.
pub fn add_streams<A: FloatArith>(arith: &A, a: BoxStream<A>, b: BoxStream<A>, tracer: Tracer) -> SumStream<A> {
    let merged = mq_merge(arith, Box::new(Keyed::new(arith, a)), Box::new(Keyed::new(arith, b)), KeyPolicy::Magnitude)
        .with_tracer(tracer.clone());
    SumStream::new(arith, Box::new(Rerepresent::new(arith, Box::new(merged))), tracer)
}

/// `A × B` over two float streams: partial products sorted by amplitude, Σ3.
pub fn mul_streams<A: FloatArith>(arith: &A, a: BoxStream<A>, b: BoxStream<A>, tracer: Tracer) -> SumStream<A> {
    let pp = pp_generate(arith, a, b).with_tracer(tracer.clone());
    SumStream::new(arith, Box::new(pp), tracer)
}

fn check_radix<A: FloatArith>(arith: &A) -> Result<()> {
    if arith.beta() != 2 {
        return Err(Error::UnsupportedRadix { beta: arith.beta(), allow_three: false });
    }
    Ok(())
}

fn side_condition<A: FloatArith>(arith: &A, len: usize) -> Result<()> {
    if sum_epsilon(arith, len).is_none() {
        return Err(Error::Precondition(format!(
            "{len} inputs are too many for the sum bound at precision {}; renormalize first",
            arith.precision()
        )));
    }
    Ok(())
}

pub fn add<A: FloatArith>(
    arith: &A,
    a: &PseudoExpansion<A::Float>,
    b: &PseudoExpansion<A::Float>,
) -> Result<SumStream<A>> {
    check_radix(arith)?;
    side_condition(arith, a.len() + b.len())?;
    Ok(add_streams(
        arith,
        Box::new(VecSource::pseudo(arith, a)),
        Box::new(VecSource::pseudo(arith, b)),
        Tracer::default(),
    ))
}

pub fn mul<A: FloatArith>(
    arith: &A,
    a: &PseudoExpansion<A::Float>,
    b: &PseudoExpansion<A::Float>,
) -> Result<SumStream<A>> {
    check_radix(arith)?;
    side_condition(arith, 2 * a.len() * b.len())?;
    Ok(mul_streams(
        arith,
        Box::new(VecSource::pseudo(arith, a)),
        Box::new(VecSource::pseudo(arith, b)),
        Tracer::default(),
    ))
}

/// At most `n` items of a stream.
pub struct Take<A: FloatArith> {
    inner: BoxStream<A>,
    left: usize,
}

impl<A: FloatArith> Take<A> {
    pub fn new(inner: BoxStream<A>, n: usize) -> Self {
        Take { inner, left: n }
    }
}

impl<A: FloatArith> FloatStream<A> for Take<A> {
    fn pull(&mut self) -> Result<Pull<A::Float>> {
        if self.left == 0 {
            return Ok(Pull::Done);
        }
        let r = self.inner.pull()?;
        if matches!(r, Pull::Item(_)) {
            self.left -= 1;
        }
        Ok(r)
    }

    fn residual(&self) -> Option<BigRational> {
        self.inner.residual()
    }

    fn collect_stats(&self, stats: &mut Stats) {
        self.inner.collect_stats(stats)
    }
}

/// One quotient digit and the error budget certified for it.
#[derive(Clone, Debug, PartialEq)]
pub struct DivStep<F> {
    /// The digit as emitted (signs restored).
    pub q: F,
    /// Approximation of the remainder head used for the guess, in the
    /// sign-factored problem.
    pub w: F,
    /// Divisor approximation used for the guess, sign-factored like `w`.
    pub d: F,
    pub eps_w: BigRational,
    pub eps_d: BigRational,
    pub eps_q: BigRational,
    pub epsilon: BigRational,
    pub kappa: BigRational,
}

/// Snapshot of a division in progress. `remainder` holds every generated term
/// of `R - (sum of q_digits) D`, including the products of the digits with the
/// known divisor components that have not been fed yet.
#[derive(Clone, Debug, PartialEq)]
pub struct DivState<F> {
    pub q_digits: Vec<F>,
    pub remainder: Vec<F>,
    pub divisor_head: EftPair<F>,
    pub divisor_tail: Vec<F>,
}

/// `eps (3 + eps) / (1 - eps)`.
pub fn contraction(eps: &BigRational) -> BigRational {
    let three = BigRational::from_integer(3.into());
    eps * (three + eps) / (BigRational::one() - eps)
}

enum Pending<F> {
    Item(StreamItem<F>),
    /// The next unread component of `R`.
    R(StreamItem<F>),
    /// `-q_j d_k` with the product already formed.
    Cursor {
        j: usize,
        k: usize,
        product: ProductPair<F>,
    },
}

struct Lazy<A: FloatArith> {
    src: BoxStream<A>,
    known: Vec<A::Float>,
    done: bool,
}

impl<A: FloatArith> Lazy<A> {
    fn ensure(&mut self, arith: &A, k: usize, sign: bool) -> Result<bool> {
        while self.known.len() <= k && !self.done {
            match self.src.pull()? {
                Pull::Item(x) if arith.is_zero(&x) => {}
                Pull::Item(x) => self.known.push(if sign { arith.neg(&x) } else { x }),
                Pull::Done => self.done = true,
                Pull::Frozen => return Ok(false),
            }
        }
        Ok(true)
    }

    fn residual(&self) -> Option<BigRational> {
        if self.done {
            Some(BigRational::zero())
        } else {
            self.src.residual()
        }
    }
}

type PendingKey<A> = (i64, <A as FloatArith>::MagKey);

/// Non-restoring division `R / D`.
///
/// Both operands are made positive-headed first. The remainder head lives in
/// a Σ3 state; everything else owed to the remainder (unread components of
/// `R`, the low part of the divisor head times each digit, the products of
/// digits with `d_k`, `k >= 2`) waits in a priority queue ordered by
/// amplitude. Before each digit the queue feeds the Σ3 until its top is below
/// `4 ulp |a ⊕ b|`.
pub struct DivStream<A: FloatArith> {
    arith: A,
    r: Lazy<A>,
    d: Lazy<A>,
    r_neg: bool,
    d_neg: bool,
    r_read: usize,
    r_queued: bool,
    started: bool,
    finished: bool,
    max_digits: Option<usize>,
    dh: EftPair<A::Float>,
    sigma: Sigma3<A>,
    extra: Vec<A::Float>,
    pending: PriorityQueue<PendingKey<A>, Pending<A::Float>>,
    digits: Vec<A::Float>,
    steps: Vec<DivStep<A::Float>>,
    fed: u64,
    spills: u64,
    emits_in_feed: u64,
    tracer: Tracer,
}

pub fn div_streams<A: FloatArith>(arith: &A, r: BoxStream<A>, d: BoxStream<A>, tracer: Tracer) -> DivStream<A> {
    DivStream {
        arith: arith.clone(),
        r: Lazy { src: r, known: Vec::new(), done: false },
        d: Lazy { src: d, known: Vec::new(), done: false },
        r_neg: false,
        d_neg: false,
        r_read: 0,
        r_queued: false,
        started: false,
        finished: false,
        max_digits: None,
        dh: EftPair { hi: arith.zero(), lo: arith.zero() },
        sigma: Sigma3::new(arith).with_tracer(tracer.clone(), "div.sigma3"),
        extra: Vec::new(),
        pending: PriorityQueue::new(),
        digits: Vec::new(),
        steps: Vec::new(),
        fed: 0,
        spills: 0,
        emits_in_feed: 0,
        tracer,
    }
}

/// The first `n_digits` quotient digits of `R / D`.
pub fn div<A: FloatArith>(
    arith: &A,
    r: &PseudoExpansion<A::Float>,
    d: &PseudoExpansion<A::Float>,
    n_digits: usize,
) -> Result<DivStream<A>> {
    check_radix(arith)?;
    if d.is_empty() {
        return Err(Error::DivisionByZero);
    }
    let mut s = div_streams(
        arith,
        Box::new(VecSource::pseudo(arith, r)),
        Box::new(VecSource::pseudo(arith, d)),
        Tracer::default(),
    );
    s.max_digits = Some(n_digits);
    Ok(s)
}

impl<A: FloatArith> DivStream<A> {
    pub fn with_max_digits(mut self, n: usize) -> Self {
        self.max_digits = Some(n);
        self
    }

    pub fn steps(&self) -> &[DivStep<A::Float>] {
        &self.steps
    }

    fn item_key(&self, it: &StreamItem<A::Float>) -> PendingKey<A> {
        (it.amplitude, self.arith.magnitude_key(&it.val))
    }

    fn push_item(&mut self, val: A::Float, amplitude: i64) {
        if self.arith.is_zero(&val) {
            return;
        }
        let it = StreamItem { val, amplitude };
        let key = self.item_key(&it);
        self.pending.insert(key, Pending::Item(it));
    }

    fn push_value(&mut self, val: A::Float) {
        let e = self.arith.canonical_exponent(&val);
        self.push_item(val, e);
    }

    fn push_product(&mut self, p: ProductPair<A::Float>) {
        let lo_e = p.lo_exponent;
        self.push_value(p.hi);
        self.push_item(p.lo, lo_e);
    }

    fn push_cursor(&mut self, j: usize, k: usize) -> Result<()> {
        let minus_q = self.arith.neg(&self.digits_internal(j));
        let product = two_product(&self.arith, &minus_q, &self.d.known[k])?;
        let key = (self.arith.canonical_exponent(&product.hi), self.arith.magnitude_key(&product.hi));
        self.pending.insert(key, Pending::Cursor { j, k, product });
        Ok(())
    }

    /// Digit `j` in the sign-factored problem.
    fn digits_internal(&self, j: usize) -> A::Float {
        if self.r_neg != self.d_neg {
            self.arith.neg(&self.digits[j])
        } else {
            self.digits[j].clone()
        }
    }

    /// Makes sure the next component of `R` is queued. `false` when frozen.
    fn queue_r(&mut self) -> Result<bool> {
        if self.r_queued {
            return Ok(true);
        }
        let (need, neg) = (self.r_read, self.r_neg);
        if !self.r.ensure(&self.arith, need, neg)? {
            return Ok(false);
        }
        if let Some(x) = self.r.known.get(need).cloned() {
            self.r_read += 1;
            self.r_queued = true;
            let it = StreamItem { amplitude: self.arith.canonical_exponent(&x), val: x };
            let key = self.item_key(&it);
            self.pending.insert(key, Pending::R(it));
        }
        Ok(true)
    }

    /// Inserts one term into the remainder head.
    fn absorb(&mut self, c: StreamItem<A::Float>) -> Result<()> {
        self.fed += 1;
        if self.sigma.accepts(&c) {
            if let Some(x) = self.sigma.push(&c)? {
                self.emits_in_feed += 1;
                self.extra.push(x);
            }
            return Ok(());
        }
        let st = self.sigma.state().clone();
        let x = renormalize(&self.arith, &[st.a, st.b, c.val])?.into_components();
        self.install(x);
        Ok(())
    }

    /// Sets the Σ3 state to the two leading components and queues the rest.
    fn install(&mut self, x: Vec<A::Float>) {
        let mut it = x.into_iter();
        let a = it.next().unwrap_or_else(|| self.arith.zero());
        let b = it.next().unwrap_or_else(|| self.arith.zero());
        self.sigma.set_state(crate::toolset::ThreeSumState { a, b });
        for rest in it {
            self.spills += 1;
            self.push_value(rest);
        }
    }

    fn head_terms(&self) -> Vec<A::Float> {
        let st = self.sigma.state();
        let mut xs = self.extra.clone();
        xs.push(st.a.clone());
        xs.push(st.b.clone());
        xs
    }

    /// Exact bound on the part of the remainder outside the Σ3 state and extras.
    fn outside_bound(&self) -> Option<BigRational> {
        let arith = &self.arith;
        let mut total = BigRational::zero();
        let abs_d: Vec<BigRational> = self.d.known.iter().map(|x| abs_value(arith, x)).collect();
        let mut suffix = vec![BigRational::zero(); abs_d.len() + 1];
        for k in (0..abs_d.len()).rev() {
            suffix[k] = &suffix[k + 1] + &abs_d[k];
        }
        for (_, p) in self.pending.iter() {
            match p {
                Pending::Item(it) | Pending::R(it) => total += abs_value(arith, &it.val),
                Pending::Cursor { j, k, .. } => total += abs_value(arith, &self.digits[*j]) * &suffix[*k],
            }
        }
        for x in &self.r.known[self.r_read..] {
            total += abs_value(arith, x);
        }
        total += self.r.residual()?;
        let rd = self.d.residual()?;
        if !rd.is_zero() {
            let qs = self.digits.iter().fold(BigRational::zero(), |acc, q| acc + abs_value(arith, q));
            total += qs * rd;
        }
        Some(total)
    }

    /// Bound on `|D - d_head|`.
    fn divisor_error(&self) -> Option<BigRational> {
        let arith = &self.arith;
        let mut e = abs_value(arith, &self.dh.lo);
        for x in self.d.known.iter().skip(2) {
            e += abs_value(arith, x);
        }
        Some(e + self.d.residual()?)
    }

    fn start(&mut self) -> Result<Pull<()>> {
        if !self.d.ensure(&self.arith, 2, false)? {
            return Ok(Pull::Frozen);
        }
        if !self.r.ensure(&self.arith, 0, false)? {
            return Ok(Pull::Frozen);
        }
        if self.d.known.is_empty() {
            return Err(Error::DivisionByZero);
        }
        self.d_neg = self.arith.is_negative(&self.d.known[0]);
        if self.d_neg {
            self.d.known = self.d.known.iter().map(|x| self.arith.neg(x)).collect();
        }
        self.started = true;
        let d0 = self.d.known[0].clone();
        let d1 = self.d.known.get(1).cloned().unwrap_or_else(|| self.arith.zero());
        self.dh = two_sum(&self.arith, &d0, &d1)?;
        if self.r.known.is_empty() {
            return Ok(Pull::Done);
        }
        self.r_neg = self.arith.is_negative(&self.r.known[0]);
        if self.r_neg {
            self.r.known = self.r.known.iter().map(|x| self.arith.neg(x)).collect();
        }
        Ok(Pull::Item(()))
    }

    fn sign_flags(&self) -> (bool, bool) {
        (self.r_neg, self.d_neg)
    }

    /// Feeds the Σ3 until the top of the queue is small against the head.
    /// `force` feeds one more term regardless of size.
    fn feed(&mut self, mut force: bool) -> Result<Pull<()>> {
        loop {
            if !self.queue_r()? {
                return Ok(Pull::Frozen);
            }
            let Some((_, top)) = self.pending.peek() else {
                return Ok(Pull::Item(()));
            };
            let (c, cursor) = match top {
                Pending::Item(it) | Pending::R(it) => (it.val.clone(), None),
                Pending::Cursor { j, k, product } => (product.hi.clone(), Some((*j, *k))),
            };
            if let Some((_, k)) = cursor {
                let neg = self.d_neg;
                if !self.d.ensure(&self.arith, k + 1, neg)? {
                    return Ok(Pull::Frozen);
                }
            }
            if !force {
                let w = self.head_approx()?;
                if !self.arith.is_zero(&w) {
                    let lhs = abs_value(&self.arith, &c);
                    let rhs = BigRational::from_integer(4.into()) * self.arith.ulp() * abs_value(&self.arith, &w);
                    if lhs < rhs {
                        return Ok(Pull::Item(()));
                    }
                }
            }
            force = false;
            let (_, entry) = self.pending.pop_max()?;
            let item = match entry {
                Pending::Item(it) => it,
                Pending::R(it) => {
                    self.r_queued = false;
                    it
                }
                Pending::Cursor { j, k, product } => {
                    if k + 1 < self.d.known.len() {
                        self.push_cursor(j, k + 1)?;
                    }
                    let lo_e = product.lo_exponent;
                    self.push_item(product.lo, lo_e);
                    let e = self.arith.canonical_exponent(&product.hi);
                    StreamItem { val: product.hi, amplitude: e }
                }
            };
            self.absorb(item)?;
        }
    }

    fn head_approx(&self) -> Result<A::Float> {
        let x = renormalize(&self.arith, &self.head_terms())?.into_components();
        match x.len() {
            0 => Ok(self.arith.zero()),
            1 => Ok(x[0].clone()),
            _ => self.arith.add(&x[0], &x[1]),
        }
    }

    fn next_digit(&mut self) -> Result<Pull<A::Float>> {
        if self.finished {
            return Ok(Pull::Done);
        }
        if !self.started {
            match self.start()? {
                Pull::Item(()) => {}
                Pull::Frozen => return Ok(Pull::Frozen),
                Pull::Done => {
                    self.finished = true;
                    return Ok(Pull::Done);
                }
            }
        }
        if self.max_digits.is_some_and(|n| self.digits.len() >= n) {
            return Ok(Pull::Done);
        }
        let arith = self.arith.clone();
        let mut force = false;
        let (w, x, eps_w) = loop {
            if let Pull::Frozen = self.feed(force)? {
                return Ok(Pull::Frozen);
            }
            let x = renormalize(&arith, &self.head_terms())?.into_components();
            let Some(outside) = self.outside_bound() else {
                return Ok(Pull::Frozen);
            };
            if x.is_empty() && self.pending.is_empty() && outside.is_zero() {
                self.finished = true;
                return Ok(Pull::Done);
            }
            let w = match x.len() {
                0 => arith.zero(),
                1 => x[0].clone(),
                _ => arith.add(&x[0], &x[1])?,
            };
            let err = (value_of(&arith, &x) - arith.value(&w)).abs() + outside;
            let wa = abs_value(&arith, &w);
            let half = BigRational::new(1.into(), 2.into());
            if !arith.is_zero(&w) && err < &wa * &half {
                break (w, x, &err / (wa - &err));
            }
            if self.pending.is_empty() {
                if !self.r.done || !self.d.done {
                    return Ok(Pull::Frozen);
                }
                return Err(Error::Invariant("division step cannot be certified".into()));
            }
            force = true;
        };
        let ed = self.divisor_error().ok_or(Error::Frozen)?;
        let dha = abs_value(&arith, &self.dh.hi);
        if ed >= dha {
            return Err(Error::Invariant("divisor head does not dominate the divisor".into()));
        }
        let eps_d = &ed / (&dha - &ed);
        let q = arith.div(&w, &self.dh.hi)?;
        let exact_q = arith.value(&w) / arith.value(&self.dh.hi);
        let eps_q = ((arith.value(&q) - &exact_q) / &exact_q).abs();
        let epsilon = eps_w.clone().max(eps_d.clone()).max(eps_q.clone());
        let kappa = contraction(&epsilon);

        let p = two_product(&arith, &q, &self.dh.hi)?;
        let mut terms = x;
        terms.push(arith.neg(&p.hi));
        terms.push(arith.neg(&p.lo));
        let folded = renormalize(&arith, &terms)?.into_components();
        self.extra.clear();
        self.install(folded);

        let (rn, dn) = self.sign_flags();
        let q_out = if rn != dn { arith.neg(&q) } else { q.clone() };
        self.digits.push(q_out.clone());
        let j = self.digits.len() - 1;
        if !arith.is_zero(&self.dh.lo) {
            let minus_q = arith.neg(&q);
            let t = two_product(&arith, &minus_q, &self.dh.lo)?;
            self.push_product(t);
        }
        if self.d.known.len() > 2 {
            self.push_cursor(j, 2)?;
        }
        let st = self.sigma.state().clone();
        self.tracer.record("div", || {
            (
                arith.display(&w),
                Some(arith.display(&q_out)),
                format!("{},{}", arith.display(&st.a), arith.display(&st.b)),
            )
        });
        self.steps.push(DivStep { q: q_out.clone(), w, d: self.dh.hi.clone(), eps_w, eps_d, eps_q, epsilon, kappa });
        Ok(Pull::Item(q_out))
    }

    /// Terms of the remainder, signs restored.
    pub fn state(&self) -> Result<DivState<A::Float>> {
        let arith = &self.arith;
        let mut rem = self.head_terms();
        for (_, p) in self.pending.iter() {
            match p {
                Pending::Item(it) | Pending::R(it) => rem.push(it.val.clone()),
                Pending::Cursor { j, k, product } => {
                    rem.push(product.hi.clone());
                    rem.push(product.lo.clone());
                    let minus_q = arith.neg(&self.digits_internal(*j));
                    for dk in &self.d.known[k + 1..] {
                        let t = two_product(arith, &minus_q, dk)?;
                        rem.push(t.hi);
                        rem.push(t.lo);
                    }
                }
            }
        }
        rem.extend(self.r.known[self.r_read..].iter().cloned());
        let fix = |x: &A::Float, neg: bool| if neg { arith.neg(x) } else { x.clone() };
        let remainder = rem.iter().filter(|x| !arith.is_zero(x)).map(|x| fix(x, self.r_neg)).collect();
        Ok(DivState {
            q_digits: self.digits.clone(),
            remainder,
            divisor_head: EftPair { hi: fix(&self.dh.hi, self.d_neg), lo: fix(&self.dh.lo, self.d_neg) },
            divisor_tail: self.d.known.iter().skip(2).map(|x| fix(x, self.d_neg)).collect(),
        })
    }
}

impl<A: FloatArith> FloatStream<A> for DivStream<A> {
    fn pull(&mut self) -> Result<Pull<A::Float>> {
        self.next_digit()
    }

    /// `(|head| + outside) / (|d_head| - |D - d_head|)`.
    fn residual(&self) -> Option<BigRational> {
        if self.finished {
            return Some(BigRational::zero());
        }
        if !self.started {
            return None;
        }
        let head = value_of(&self.arith, &self.head_terms()).abs();
        let num = head + self.outside_bound()?;
        let den = abs_value(&self.arith, &self.dh.hi) - self.divisor_error()?;
        den.is_positive().then(|| num / den)
    }

    fn collect_stats(&self, stats: &mut Stats) {
        add_stat(stats, "div", self.digits.len() as u64);
        add_stat(stats, "div.feed", self.fed);
        add_stat(stats, "div.spill", self.spills);
        add_stat(stats, "div.feed_emit", self.emits_in_feed);
        self.sigma.collect_stats(stats);
        self.r.src.collect_stats(stats);
        self.d.src.collect_stats(stats);
    }
}

/// A prefix of a stream and a certified bound on what it leaves out.
#[derive(Clone, Debug, PartialEq)]
pub struct Rounded<F> {
    pub components: Vec<F>,
    pub bound: BigRational,
}

/// Pulls at least one component, then until the certified residual is at
/// most `target` or the stream ends.
pub fn round_result<A: FloatArith>(stream: &mut dyn FloatStream<A>, target: &BigRational) -> Result<Rounded<A::Float>> {
    let mut components = Vec::new();
    loop {
        match stream.pull()? {
            Pull::Item(x) => components.push(x),
            Pull::Frozen => return Err(Error::Frozen),
            Pull::Done => {
                let bound = stream.residual().unwrap_or_else(BigRational::zero);
                return Ok(Rounded { components, bound });
            }
        }
        if let Some(r) = stream.residual() {
            if &r <= target {
                return Ok(Rounded { components, bound: r });
            }
        }
    }
}
