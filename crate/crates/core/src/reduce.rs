//! Deterministic summation.
//!
//! Every reduction in the crate goes through the helpers here. Work is split
//! by index, never by thread, and partial results are combined with a fixed
//! binary tree, so a sum evaluates to the same bits for any worker count.

use rayon::prelude::*;

const BLOCK: usize = 16;

/// Pairwise (cascade) sum of a slice with a fixed tree shape.
pub fn pairwise_sum(xs: &[f64]) -> f64 {
    if xs.len() <= BLOCK {
        return xs.iter().fold(0.0, |acc, &x| acc + x);
    }
    let mid = xs.len() / 2;
    pairwise_sum(&xs[..mid]) + pairwise_sum(&xs[mid..])
}

/// Streaming pairwise accumulator.
///
/// Values are summed sequentially in blocks of 16; block sums are merged like
/// a binary counter, giving the same tree as [`pairwise_sum`] up to the ragged
/// final blocks. No allocation.
#[derive(Debug, Clone)]
pub struct TreeAccumulator {
    block: f64,
    in_block: usize,
    // levels[k] holds the sum of 2^k blocks when occupied[k] is set
    levels: [f64; 64],
    occupied: u64,
}

impl Default for TreeAccumulator {
    fn default() -> Self {
        Self::new()
    }
}

impl TreeAccumulator {
    pub fn new() -> Self {
        Self {
            block: 0.0,
            in_block: 0,
            levels: [0.0; 64],
            occupied: 0,
        }
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        self.block += x;
        self.in_block += 1;
        if self.in_block == BLOCK {
            self.flush_block();
        }
    }

    fn flush_block(&mut self) {
        let mut carry = self.block;
        let mut level = 0;
        while self.occupied & (1 << level) != 0 {
            carry += self.levels[level];
            self.occupied &= !(1 << level);
            level += 1;
        }
        self.levels[level] = carry;
        self.occupied |= 1 << level;
        self.block = 0.0;
        self.in_block = 0;
    }

    pub fn total(&self) -> f64 {
        let mut acc = self.block;
        for level in 0..64 {
            if self.occupied & (1 << level) != 0 {
                acc += self.levels[level];
            }
        }
        acc
    }
}

/// Evaluates `f` at `0..n` in parallel and returns the values in index order.
pub fn par_map<F>(n: usize, f: F) -> Vec<f64>
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    (0..n).into_par_iter().map(f).collect()
}

/// Parallel sum of `f(0) + ... + f(n-1)` with a deterministic tree.
pub fn par_sum<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    pairwise_sum(&par_map(n, f))
}
