//! Pull-driven stream stages carrying floats most significant first.
//!
//! A stage answers a pull with an item, with [`Pull::Frozen`] when it needs
//! input that does not exist yet, or with [`Pull::Done`]. A frozen stage keeps
//! its state and can be pulled again once its producers have advanced.

mod pp;
mod pq;
mod sigma3;

use std::collections::{BTreeMap, VecDeque};
use std::fmt;
use std::sync::{Arc, Mutex};

use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::Result;
use crate::expansion::tail_factor;
use crate::float::FloatArith;

pub use pp::{pp_generate, PartialProducts};
pub use pq::PriorityQueue;
pub use sigma3::{sigma3_flush, sigma3_step, Sigma3, Sigma3Step, ThreeSumState};

#[derive(Clone, Debug, PartialEq)]
pub enum Pull<T> {
    Item(T),
    Frozen,
    Done,
}

/// A float with the amplitude of the representation it travels with.
#[derive(Clone, Debug, PartialEq)]
pub struct StreamItem<F> {
    pub val: F,
    pub amplitude: i64,
}

/// Ordering key used by a merge stage.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum KeyPolicy {
    /// Exact absolute value.
    Magnitude,
    /// Amplitude of the carried representation.
    Amplitude,
}

/// Firing counts per stage name.
pub type Stats = BTreeMap<&'static str, u64>;

/// Optional per-firing trace sink, shared by all stages of a pipeline.
#[derive(Clone, Default)]
pub struct Tracer(Option<Arc<Mutex<Vec<String>>>>);

impl fmt::Debug for Tracer {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Tracer({})", if self.0.is_some() { "on" } else { "off" })
    }
}

impl Tracer {
    pub fn enabled() -> Self {
        Tracer(Some(Arc::new(Mutex::new(Vec::new()))))
    }

    pub fn is_enabled(&self) -> bool {
        self.0.is_some()
    }

    /// Records `stage=<name> in=<item> out=<item?> state=<a,b>`. The closure is
    /// only evaluated when tracing is on.
    pub fn record(&self, stage: &str, line: impl FnOnce() -> (String, Option<String>, String)) {
        if let Some(sink) = &self.0 {
            let (input, output, state) = line();
            let output = output.unwrap_or_else(|| "-".into());
            let text = format!("stage={stage} in={input} out={output} state={state}");
            sink.lock().expect("trace sink poisoned").push(text);
        }
    }

    pub fn lines(&self) -> Vec<String> {
        match &self.0 {
            Some(sink) => sink.lock().expect("trace sink poisoned").clone(),
            None => Vec::new(),
        }
    }
}

/// A stream of floats, most significant first.
pub trait FloatStream<A: FloatArith>: Send {
    fn pull(&mut self) -> Result<Pull<A::Float>>;

    /// Certified bound on `|value - sum of emitted components|`, when known.
    fn residual(&self) -> Option<BigRational>;

    fn collect_stats(&self, _stats: &mut Stats) {}
}

pub type BoxStream<A> = Box<dyn FloatStream<A>>;

/// A stream of keyed items.
pub trait ItemSource<A: FloatArith>: Send {
    fn pull_item(&mut self) -> Result<Pull<StreamItem<A::Float>>>;
    fn residual(&self) -> Option<BigRational>;
    fn collect_stats(&self, _stats: &mut Stats) {}
}

pub type BoxItems<A> = Box<dyn ItemSource<A>>;

pub(crate) fn add_stat(stats: &mut Stats, name: &'static str, n: u64) {
    *stats.entry(name).or_insert(0) += n;
}

pub(crate) fn abs_value<A: FloatArith>(arith: &A, x: &A::Float) -> BigRational {
    arith.value(x).abs()
}

pub(crate) fn sum_abs<'a, A: FloatArith>(arith: &A, xs: impl IntoIterator<Item = &'a A::Float>) -> BigRational {
    xs.into_iter().fold(BigRational::zero(), |acc, x| acc + abs_value(arith, x))
}

/// Components of a known list.
pub struct VecSource<A: FloatArith> {
    arith: A,
    items: Vec<A::Float>,
    pos: usize,
    epsilon: Option<BigRational>,
}

impl<A: FloatArith> VecSource<A> {
    /// Components of a non-overlapping expansion (or any exact list); the
    /// residual is the exact remaining sum.
    pub fn new(arith: &A, items: Vec<A::Float>) -> Self {
        let items = items.into_iter().filter(|x| !arith.is_zero(x)).collect();
        VecSource { arith: arith.clone(), items, pos: 0, epsilon: None }
    }

    /// Components of a pseudo-expansion; the residual is its tail bound.
    pub fn pseudo(arith: &A, x: &crate::PseudoExpansion<A::Float>) -> Self {
        VecSource { arith: arith.clone(), items: x.components().to_vec(), pos: 0, epsilon: Some(x.epsilon().clone()) }
    }
}

impl<A: FloatArith> FloatStream<A> for VecSource<A> {
    fn pull(&mut self) -> Result<Pull<A::Float>> {
        match self.items.get(self.pos) {
            Some(x) => {
                self.pos += 1;
                Ok(Pull::Item(x.clone()))
            }
            None => Ok(Pull::Done),
        }
    }

    fn residual(&self) -> Option<BigRational> {
        if self.pos >= self.items.len() {
            return Some(BigRational::zero());
        }
        match &self.epsilon {
            Some(eps) if self.pos == 0 => Some(abs_value(&self.arith, &self.items[0]) / (BigRational::one() - eps)),
            Some(eps) => Some(tail_factor(eps) * abs_value(&self.arith, &self.items[self.pos - 1])),
            None => {
                let rest = self.items[self.pos..].iter().fold(BigRational::zero(), |acc, x| acc + self.arith.value(x));
                Some(rest.abs())
            }
        }
    }
}

#[derive(Debug)]
struct FeedState<F> {
    queue: VecDeque<F>,
    closed: bool,
}

/// A stream fed from outside. Pulling an empty open feed freezes the consumer.
pub struct Feed<A: FloatArith> {
    arith: A,
    state: Arc<Mutex<FeedState<A::Float>>>,
}

/// Producer side of a [`Feed`].
#[derive(Clone)]
pub struct FeedHandle<F> {
    state: Arc<Mutex<FeedState<F>>>,
}

impl<F> FeedHandle<F> {
    pub fn push(&self, x: F) {
        self.state.lock().expect("feed poisoned").queue.push_back(x);
    }

    pub fn close(&self) {
        self.state.lock().expect("feed poisoned").closed = true;
    }
}

impl<A: FloatArith> Feed<A> {
    pub fn new(arith: &A) -> (Self, FeedHandle<A::Float>) {
        let state = Arc::new(Mutex::new(FeedState { queue: VecDeque::new(), closed: false }));
        (Feed { arith: arith.clone(), state: state.clone() }, FeedHandle { state })
    }
}

impl<A: FloatArith> FloatStream<A> for Feed<A> {
    fn pull(&mut self) -> Result<Pull<A::Float>> {
        let mut st = self.state.lock().expect("feed poisoned");
        loop {
            match st.queue.pop_front() {
                Some(x) if self.arith.is_zero(&x) => continue,
                Some(x) => return Ok(Pull::Item(x)),
                None if st.closed => return Ok(Pull::Done),
                None => return Ok(Pull::Frozen),
            }
        }
    }

    fn residual(&self) -> Option<BigRational> {
        let st = self.state.lock().expect("feed poisoned");
        if !st.closed {
            return None;
        }
        let rest = st.queue.iter().fold(BigRational::zero(), |acc, x| acc + self.arith.value(x));
        Some(rest.abs())
    }
}

/// The componentwise negation of a stream.
pub struct Negate<A: FloatArith> {
    arith: A,
    inner: BoxStream<A>,
}

impl<A: FloatArith> Negate<A> {
    pub fn new(arith: &A, inner: BoxStream<A>) -> Self {
        Negate { arith: arith.clone(), inner }
    }
}

impl<A: FloatArith> FloatStream<A> for Negate<A> {
    fn pull(&mut self) -> Result<Pull<A::Float>> {
        Ok(match self.inner.pull()? {
            Pull::Item(x) => Pull::Item(self.arith.neg(&x)),
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

/// Tags each float of a stream with its canonical amplitude, skipping zeros.
pub struct Keyed<A: FloatArith> {
    arith: A,
    inner: BoxStream<A>,
}

impl<A: FloatArith> Keyed<A> {
    pub fn new(arith: &A, inner: BoxStream<A>) -> Self {
        Keyed { arith: arith.clone(), inner }
    }
}

impl<A: FloatArith> ItemSource<A> for Keyed<A> {
    fn pull_item(&mut self) -> Result<Pull<StreamItem<A::Float>>> {
        loop {
            return Ok(match self.inner.pull()? {
                Pull::Item(x) if self.arith.is_zero(&x) => continue,
                Pull::Item(x) => {
                    let amplitude = self.arith.canonical_exponent(&x);
                    Pull::Item(StreamItem { val: x, amplitude })
                }
                Pull::Frozen => Pull::Frozen,
                Pull::Done => Pull::Done,
            });
        }
    }

    fn residual(&self) -> Option<BigRational> {
        self.inner.residual()
    }

    fn collect_stats(&self, stats: &mut Stats) {
        self.inner.collect_stats(stats)
    }
}

/// Items from a known list.
pub struct ItemVec<A: FloatArith> {
    arith: A,
    items: VecDeque<StreamItem<A::Float>>,
}

impl<A: FloatArith> ItemVec<A> {
    pub fn new(arith: &A, items: Vec<StreamItem<A::Float>>) -> Self {
        ItemVec { arith: arith.clone(), items: items.into() }
    }
}

impl<A: FloatArith> ItemSource<A> for ItemVec<A> {
    fn pull_item(&mut self) -> Result<Pull<StreamItem<A::Float>>> {
        Ok(match self.items.pop_front() {
            Some(x) => Pull::Item(x),
            None => Pull::Done,
        })
    }

    fn residual(&self) -> Option<BigRational> {
        Some(sum_abs(&self.arith, self.items.iter().map(|i| &i.val)))
    }
}

/// Merges two key-descending item streams into one. It fires only when both
/// inputs have an item or one input is finished; ties go to the first input.
pub struct MergeQueue<A: FloatArith> {
    arith: A,
    policy: KeyPolicy,
    inputs: [BoxItems<A>; 2],
    heads: [Option<StreamItem<A::Float>>; 2],
    done: [bool; 2],
    firings: u64,
    tracer: Tracer,
}

pub fn mq_merge<A: FloatArith>(arith: &A, s1: BoxItems<A>, s2: BoxItems<A>, policy: KeyPolicy) -> MergeQueue<A> {
    MergeQueue {
        arith: arith.clone(),
        policy,
        inputs: [s1, s2],
        heads: [None, None],
        done: [false, false],
        firings: 0,
        tracer: Tracer::default(),
    }
}

impl<A: FloatArith> MergeQueue<A> {
    pub fn with_tracer(mut self, tracer: Tracer) -> Self {
        self.tracer = tracer;
        self
    }

    fn first_wins(&self, x: &StreamItem<A::Float>, y: &StreamItem<A::Float>) -> bool {
        match self.policy {
            KeyPolicy::Magnitude => self.arith.cmp_abs(&x.val, &y.val).is_ge(),
            KeyPolicy::Amplitude => x.amplitude >= y.amplitude,
        }
    }

    /// Items buffered in the heads.
    pub fn buffered(&self) -> impl Iterator<Item = &StreamItem<A::Float>> {
        self.heads.iter().flatten()
    }
}

impl<A: FloatArith> ItemSource<A> for MergeQueue<A> {
    fn pull_item(&mut self) -> Result<Pull<StreamItem<A::Float>>> {
        for k in 0..2 {
            if self.heads[k].is_none() && !self.done[k] {
                match self.inputs[k].pull_item()? {
                    Pull::Item(x) => self.heads[k] = Some(x),
                    Pull::Frozen => return Ok(Pull::Frozen),
                    Pull::Done => self.done[k] = true,
                }
            }
        }
        let pick = match (&self.heads[0], &self.heads[1]) {
            (None, None) => return Ok(Pull::Done),
            (Some(_), None) => 0,
            (None, Some(_)) => 1,
            (Some(x), Some(y)) => {
                if self.first_wins(x, y) {
                    0
                } else {
                    1
                }
            }
        };
        let item = self.heads[pick].take().expect("picked head exists");
        self.firings += 1;
        let arith = &self.arith;
        self.tracer.record("mq", || {
            let s = arith.display(&item.val);
            (format!("{s}@{}", item.amplitude), Some(s), format!("input{}", pick + 1))
        });
        Ok(Pull::Item(item))
    }

    fn residual(&self) -> Option<BigRational> {
        let mut total = sum_abs(&self.arith, self.buffered().map(|i| &i.val));
        for (k, input) in self.inputs.iter().enumerate() {
            if !self.done[k] {
                total += input.residual()?;
            }
        }
        Some(total)
    }

    fn collect_stats(&self, stats: &mut Stats) {
        add_stat(stats, "mq", self.firings);
        for input in &self.inputs {
            input.collect_stats(stats);
        }
    }
}

/// Re-represents a magnitude-sorted list so that amplitudes are non-increasing:
/// each float starts from its canonical amplitude and is lowered to the running
/// minimum. Fails if a float has no representation at that amplitude.
pub fn rerepresent<A: FloatArith>(arith: &A, xs: &[A::Float]) -> Result<Vec<StreamItem<A::Float>>> {
    let mut out = Vec::with_capacity(xs.len());
    let mut floor = i64::MAX;
    for x in xs {
        let e = arith.canonical_exponent(x).min(floor);
        if !crate::float::valid_exponent(arith, x, e) {
            return Err(crate::Error::Precondition(format!(
                "{} has no representation with amplitude {e}",
                arith.display(x)
            )));
        }
        floor = e;
        out.push(StreamItem { val: x.clone(), amplitude: e });
    }
    Ok(out)
}

/// Drains a stream into a list. `Frozen` is reported as an error.
pub fn collect<A: FloatArith>(stream: &mut dyn FloatStream<A>) -> Result<Vec<A::Float>> {
    let mut out = Vec::new();
    loop {
        match stream.pull()? {
            Pull::Item(x) => out.push(x),
            Pull::Done => return Ok(out),
            Pull::Frozen => return Err(crate::Error::Frozen),
        }
    }
}
