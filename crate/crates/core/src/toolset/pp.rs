//! Partial-product generation for the product of two streams.
//!
//! One cursor `i_j` per component `b_j` lives in a priority queue keyed by the
//! magnitude of `a_{i_j} ⊗ b_j`. Popping a cursor yields the high part of the
//! product; the low part waits in a FIFO keyed by its amplitude bound. The
//! stage emits the merge of both, sorted by amplitude.

use std::collections::VecDeque;

use num_rational::BigRational;
use num_traits::Zero;

use super::{abs_value, add_stat, BoxStream, ItemSource, PriorityQueue, Pull, Stats, StreamItem, Tracer};
use crate::eft::{two_product, ProductPair};
use crate::error::Result;
use crate::float::FloatArith;

struct Cursor<F> {
    i: usize,
    j: usize,
    product: ProductPair<F>,
}

/// Lazily-read components of one operand.
struct Operand<A: FloatArith> {
    src: BoxStream<A>,
    known: Vec<A::Float>,
    done: bool,
}

impl<A: FloatArith> Operand<A> {
    fn new(src: BoxStream<A>) -> Self {
        Operand { src, known: Vec::new(), done: false }
    }

    /// Reads until component `k` is known or the operand ends. `false` when
    /// the source is frozen.
    fn ensure(&mut self, arith: &A, k: usize) -> Result<bool> {
        while self.known.len() <= k && !self.done {
            match self.src.pull()? {
                Pull::Item(x) if arith.is_zero(&x) => {}
                Pull::Item(x) => self.known.push(x),
                Pull::Done => self.done = true,
                Pull::Frozen => return Ok(false),
            }
        }
        Ok(true)
    }

    fn has(&self, k: usize) -> bool {
        k < self.known.len()
    }

    fn residual(&self) -> Option<BigRational> {
        if self.done {
            Some(BigRational::zero())
        } else {
            self.src.residual()
        }
    }
}

/// The PP/PQ pair for `A × B` plus the waiting queue of low parts.
pub struct PartialProducts<A: FloatArith> {
    arith: A,
    a: Operand<A>,
    b: Operand<A>,
    pq: PriorityQueue<A::MagKey, Cursor<A::Float>>,
    started: bool,
    cursors: usize,
    hi_head: Option<StreamItem<A::Float>>,
    waiting: VecDeque<StreamItem<A::Float>>,
    waiting_max: usize,
    products: u64,
    emitted: u64,
    tracer: Tracer,
}

pub fn pp_generate<A: FloatArith>(arith: &A, a: BoxStream<A>, b: BoxStream<A>) -> PartialProducts<A> {
    PartialProducts {
        arith: arith.clone(),
        a: Operand::new(a),
        b: Operand::new(b),
        pq: PriorityQueue::new(),
        started: false,
        cursors: 0,
        hi_head: None,
        waiting: VecDeque::new(),
        waiting_max: 0,
        products: 0,
        emitted: 0,
        tracer: Tracer::default(),
    }
}

impl<A: FloatArith> PartialProducts<A> {
    pub fn with_tracer(mut self, tracer: Tracer) -> Self {
        self.tracer = tracer;
        self
    }

    /// Largest number of low parts held at once so far.
    pub fn waiting_high_water(&self) -> usize {
        self.waiting_max
    }

    /// Number of components of `B` read so far.
    pub fn b_known(&self) -> usize {
        self.b.known.len()
    }

    fn cursor(&mut self, i: usize, j: usize) -> Result<()> {
        let product = two_product(&self.arith, &self.a.known[i], &self.b.known[j])?;
        self.products += 1;
        self.cursors = self.cursors.max(j + 1);
        let key = self.arith.magnitude_key(&product.hi);
        self.pq.insert(key, Cursor { i, j, product });
        Ok(())
    }

    /// Next product in decreasing magnitude of its high part.
    pub fn next_product(&mut self) -> Result<Pull<ProductPair<A::Float>>> {
        let arith = self.arith.clone();
        if !self.started {
            if !self.a.ensure(&arith, 0)? || !self.b.ensure(&arith, 0)? {
                return Ok(Pull::Frozen);
            }
            self.started = true;
            if !self.a.has(0) || !self.b.has(0) {
                return Ok(Pull::Done);
            }
            self.cursor(0, 0)?;
        }
        let (i, j) = match self.pq.peek() {
            None => return Ok(Pull::Done),
            Some((_, c)) => (c.i, c.j),
        };
        if !self.a.ensure(&arith, i + 1)? {
            return Ok(Pull::Frozen);
        }
        if i == 0 && !self.b.ensure(&arith, j + 1)? {
            return Ok(Pull::Frozen);
        }
        let (_, top) = if self.a.has(i + 1) {
            let product = two_product(&arith, &self.a.known[i + 1], &self.b.known[j])?;
            self.products += 1;
            let key = arith.magnitude_key(&product.hi);
            self.pq.update_top(key, Cursor { i: i + 1, j, product })?
        } else {
            self.pq.pop_max()?
        };
        if i == 0 && self.b.has(j + 1) {
            self.cursor(0, j + 1)?;
        }
        Ok(Pull::Item(top.product))
    }

    fn push_waiting(&mut self, item: StreamItem<A::Float>) {
        self.waiting.push_back(item);
        self.waiting_max = self.waiting_max.max(self.waiting.len());
    }

    fn emit(&mut self, item: StreamItem<A::Float>, from: &str) -> Result<Pull<StreamItem<A::Float>>> {
        self.emitted += 1;
        let arith = &self.arith;
        let waiting = self.waiting.len();
        self.tracer.record("pp", || {
            let s = arith.display(&item.val);
            (format!("{s}@{}", item.amplitude), Some(from.to_string()), format!("waiting={waiting}"))
        });
        Ok(Pull::Item(item))
    }
}

impl<A: FloatArith> ItemSource<A> for PartialProducts<A> {
    fn pull_item(&mut self) -> Result<Pull<StreamItem<A::Float>>> {
        if self.hi_head.is_none() {
            match self.next_product()? {
                Pull::Item(p) => {
                    if !self.arith.is_zero(&p.lo) {
                        self.push_waiting(StreamItem { val: p.lo, amplitude: p.lo_exponent });
                    }
                    let amplitude = self.arith.canonical_exponent(&p.hi);
                    self.hi_head = Some(StreamItem { val: p.hi, amplitude });
                }
                Pull::Frozen => return Ok(Pull::Frozen),
                Pull::Done => {
                    return match self.waiting.pop_front() {
                        Some(lo) => self.emit(lo, "lo"),
                        None => Ok(Pull::Done),
                    };
                }
            }
        }
        let hi_amp = self.hi_head.as_ref().expect("head present").amplitude;
        match self.waiting.front() {
            Some(lo) if lo.amplitude >= hi_amp => {
                let lo = self.waiting.pop_front().expect("front exists");
                self.emit(lo, "lo")
            }
            _ => {
                let hi = self.hi_head.take().expect("head present");
                self.emit(hi, "hi")
            }
        }
    }

    /// Unemitted known products, low parts and the cross terms with the
    /// unknown tails of both operands.
    fn residual(&self) -> Option<BigRational> {
        let arith = &self.arith;
        let ra = self.a.residual()?;
        let rb = self.b.residual()?;
        let abs_a: Vec<BigRational> = self.a.known.iter().map(|x| abs_value(arith, x)).collect();
        let abs_b: Vec<BigRational> = self.b.known.iter().map(|x| abs_value(arith, x)).collect();
        let mut suffix_a = vec![BigRational::zero(); abs_a.len() + 1];
        for i in (0..abs_a.len()).rev() {
            suffix_a[i] = &suffix_a[i + 1] + &abs_a[i];
        }
        let total_a = suffix_a[0].clone();
        let total_b = abs_b.iter().fold(BigRational::zero(), |acc, x| acc + x);
        let mut rest = BigRational::zero();
        for (_, c) in self.pq.iter() {
            rest += &abs_b[c.j] * &suffix_a[c.i];
        }
        for bj in abs_b.iter().skip(self.cursors) {
            rest += bj * &total_a;
        }
        if let Some(h) = &self.hi_head {
            rest += abs_value(arith, &h.val);
        }
        for w in &self.waiting {
            rest += abs_value(arith, &w.val);
        }
        rest += &total_a * &rb + &ra * &total_b + &ra * &rb;
        Some(rest)
    }

    fn collect_stats(&self, stats: &mut Stats) {
        add_stat(stats, "pp", self.products);
        add_stat(stats, "pq", self.emitted);
        self.a.src.collect_stats(stats);
        self.b.src.collect_stats(stats);
    }
}
