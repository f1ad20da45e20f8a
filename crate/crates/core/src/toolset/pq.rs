//! Max-first priority queue with replace-top, backed by a binary heap.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

struct Entry<K, T> {
    key: K,
    seq: Reverse<u64>,
    item: T,
}

impl<K: Ord, T> PartialEq for Entry<K, T> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<K: Ord, T> Eq for Entry<K, T> {}

impl<K: Ord, T> PartialOrd for Entry<K, T> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<K: Ord, T> Ord for Entry<K, T> {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key.cmp(&other.key).then(self.seq.cmp(&other.seq))
    }
}

/// Largest key first; equal keys come out in insertion order.
pub struct PriorityQueue<K, T> {
    heap: BinaryHeap<Entry<K, T>>,
    next_seq: u64,
}

impl<K: Ord, T> Default for PriorityQueue<K, T> {
    fn default() -> Self {
        PriorityQueue { heap: BinaryHeap::new(), next_seq: 0 }
    }
}

impl<K: Ord, T> PriorityQueue<K, T> {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.heap.len()
    }

    pub fn is_empty(&self) -> bool {
        self.heap.is_empty()
    }

    fn entry(&mut self, key: K, item: T) -> Entry<K, T> {
        let seq = Reverse(self.next_seq);
        self.next_seq += 1;
        Entry { key, seq, item }
    }

    pub fn insert(&mut self, key: K, item: T) {
        let e = self.entry(key, item);
        self.heap.push(e);
    }

    pub fn peek(&self) -> Option<(&K, &T)> {
        self.heap.peek().map(|e| (&e.key, &e.item))
    }

    pub fn pop_max(&mut self) -> Result<(K, T)> {
        self.heap
            .pop()
            .map(|e| (e.key, e.item))
            .ok_or_else(|| Error::Precondition("pop on an empty priority queue".into()))
    }

    /// Replaces the maximum with a new entry and returns the old one.
    pub fn update_top(&mut self, key: K, item: T) -> Result<(K, T)> {
        if self.heap.is_empty() {
            return Err(Error::Precondition("update_top on an empty priority queue".into()));
        }
        let fresh = self.entry(key, item);
        let mut top = self.heap.peek_mut().expect("heap is not empty");
        let old = std::mem::replace(&mut *top, fresh);
        drop(top);
        Ok((old.key, old.item))
    }

    pub fn iter(&self) -> impl Iterator<Item = (&K, &T)> {
        self.heap.iter().map(|e| (&e.key, &e.item))
    }
}
