//! Run configuration and validation.

use crate::error::{Error, Result};
use crate::sortcount::SorterChoice;
use crate::wire;

pub const DEFAULT_SEED: u64 = 0x9E3779B97F4A7C15;
pub const DEFAULT_BATCH_SIZE: usize = 80_000;
pub const DEFAULT_LOWER: u64 = 2;
pub const DEFAULT_UPPER: u64 = 50;
pub const DEFAULT_RANKS: usize = 4;
pub const DEFAULT_WORKERS_PER_RANK: usize = 2;
pub const DEFAULT_THREADS_PER_WORKER: usize = 4;
pub const DEFAULT_TASKS_PER_WORKER: usize = 3;
pub const DEFAULT_HEAVY_FACTOR: f64 = 4.0;

/// Default minimizer length: half of k for small k, a constant for large k.
pub fn default_m(k: usize) -> usize {
    if k < 46 {
        k / 2
    } else {
        23
    }
}

#[derive(Debug, Clone)]
pub struct RunConfig {
    pub k: usize,
    pub m: usize,
    pub ranks: usize,
    pub workers_per_rank: usize,
    pub threads_per_worker: usize,
    pub tasks_per_worker: usize,
    pub batch_size: usize,
    pub lower: u64,
    pub upper: u64,
    pub seed: u64,
    pub canonical: bool,
    pub extensions: bool,
    pub heavy_factor: f64,
    pub sorter: SorterChoice,
    /// Per-sort memory budget in bytes; `None` means unlimited.
    pub memory_budget: Option<u64>,
    /// Three-stage exchange pipelining; off executes the stages in order.
    pub overlap: bool,
}

impl RunConfig {
    pub fn new(k: usize) -> RunConfig {
        RunConfig {
            k,
            m: default_m(k),
            ranks: DEFAULT_RANKS,
            workers_per_rank: DEFAULT_WORKERS_PER_RANK,
            threads_per_worker: DEFAULT_THREADS_PER_WORKER,
            tasks_per_worker: DEFAULT_TASKS_PER_WORKER,
            batch_size: DEFAULT_BATCH_SIZE,
            lower: DEFAULT_LOWER,
            upper: DEFAULT_UPPER,
            seed: DEFAULT_SEED,
            canonical: false,
            extensions: false,
            heavy_factor: DEFAULT_HEAVY_FACTOR,
            sorter: SorterChoice::Auto,
            memory_budget: None,
            overlap: true,
        }
    }

    /// Total task count `s`: one batch per (rank, worker, task slot).
    pub fn total_tasks(&self) -> usize {
        self.ranks * self.workers_per_rank * self.tasks_per_worker
    }

    /// Key words per k-mer.
    pub fn key_words(&self) -> usize {
        self.k.div_ceil(32)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(Error::Config(msg));
        if !(1..=crate::seq::MAX_K).contains(&self.k) {
            return fail(format!("k={} out of range 1..={}", self.k, crate::seq::MAX_K));
        }
        if self.m < 1 || self.m >= self.k || self.m > crate::seq::MAX_M {
            return fail(format!(
                "m={} must satisfy 1 <= m < k={} and m <= {}",
                self.m,
                self.k,
                crate::seq::MAX_M
            ));
        }
        if self.ranks < 1
            || self.workers_per_rank < 1
            || self.threads_per_worker < 1
            || self.tasks_per_worker < 1
        {
            return fail("ranks, workers, threads and tasks per worker must be >= 1".into());
        }
        if self.total_tasks() > u32::MAX as usize {
            return fail(format!("task count {} exceeds u32", self.total_tasks()));
        }
        if self.lower > self.upper {
            return fail(format!(
                "lower bound {} exceeds upper bound {}",
                self.lower, self.upper
            ));
        }
        if self.heavy_factor.is_nan() || self.heavy_factor <= 1.0 {
            return fail(format!("heavy factor {} must be > 1", self.heavy_factor));
        }
        if wire::max_supermer_bases(self.batch_size, self.k, self.extensions).is_none() {
            return fail(format!(
                "batch size {} cannot hold one k={} supermer record",
                self.batch_size, self.k
            ));
        }
        let kmerlist_need = wire::kmerlist_record_bytes(self.key_words()) + wire::SENTINEL_BYTES;
        if self.batch_size < kmerlist_need {
            return fail(format!(
                "batch size {} cannot hold one kmer-list record ({kmerlist_need} bytes)",
                self.batch_size
            ));
        }
        Ok(())
    }
}
