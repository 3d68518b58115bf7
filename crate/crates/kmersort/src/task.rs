//! Task abstraction layer: k-mers are partitioned into `s` independent
//! tasks rather than one batch per rank. Tasks are the unit of size
//! accounting, greedy rank assignment, heavy-hitter detection and sorting;
//! a worker is a thread group inside a rank that processes whole tasks.

use crate::error::{Error, Result};
use crate::seq::KmerCodec;
use crate::sortcount::{self, KmerArray, Run, SorterKind};
use crate::supermer::{expand_supermer, Supermer};
use crate::wire::KmerListRecord;

/// Per-task summary carried into the run report.
#[derive(Debug, Clone, serde::Serialize)]
pub struct TaskDescriptor {
    pub task_id: usize,
    pub size_bytes: u64,
    pub owner_rank: usize,
    pub heavy: bool,
}

/// Element-wise sum of the per-rank task size vectors.
pub fn gather_task_sizes(per_rank: &[Vec<u64>]) -> Result<Vec<u64>> {
    let Some(first) = per_rank.first() else {
        return Ok(Vec::new());
    };
    let tasks = first.len();
    let mut total = vec![0u64; tasks];
    for report in per_rank {
        if report.len() != tasks {
            return Err(Error::Internal(format!(
                "task size report length {} != {}",
                report.len(),
                tasks
            )));
        }
        for (sum, &v) in total.iter_mut().zip(report) {
            *sum += v;
        }
    }
    Ok(total)
}

/// Greedy task-to-rank assignment: tasks in descending size order are
/// first-fit placed under a load threshold that starts at
/// `max(ceil(total/ranks), max task size)` and grows by 10% until every task
/// fits. Returns the owner rank per task.
pub fn assign_tasks(sizes: &[u64], ranks: usize) -> Vec<usize> {
    assert!(ranks >= 1);
    let mut order: Vec<usize> = (0..sizes.len()).collect();
    order.sort_by_key(|&t| (std::cmp::Reverse(sizes[t]), t));
    let total: u64 = sizes.iter().sum();
    let avg = total.div_ceil(ranks as u64);
    let max = sizes.iter().copied().max().unwrap_or(0);
    let mut threshold = avg.max(max);
    loop {
        let mut owner = vec![0usize; sizes.len()];
        let mut loads = vec![0u64; ranks];
        let mut ok = true;
        'tasks: for &t in &order {
            for (r, load) in loads.iter_mut().enumerate() {
                if *load + sizes[t] <= threshold {
                    *load += sizes[t];
                    owner[t] = r;
                    continue 'tasks;
                }
            }
            ok = false;
            break;
        }
        if ok {
            return owner;
        }
        threshold = threshold + (threshold / 10).max(1);
    }
}

/// Flag tasks whose size exceeds `factor` times the mean task size.
pub fn detect_heavy_hitters(sizes: &[u64], factor: f64) -> Vec<bool> {
    debug_assert!(factor > 1.0);
    if sizes.is_empty() {
        return Vec::new();
    }
    let mean = sizes.iter().sum::<u64>() as f64 / sizes.len() as f64;
    let cutoff = factor * mean;
    sizes.iter().map(|&s| s as f64 > cutoff).collect()
}

/// A thread group within a rank and the tasks it owns.
#[derive(Debug, Clone)]
pub struct Worker {
    pub worker_id: usize,
    pub threads: usize,
    pub tasks: Vec<usize>,
}

/// Largest-task-first assignment of a rank's tasks onto its workers: each
/// task goes to the currently least-loaded worker.
pub fn assign_to_workers(
    tasks: &[(usize, u64)],
    workers_per_rank: usize,
    threads_per_worker: usize,
) -> Vec<Worker> {
    assert!(workers_per_rank >= 1);
    let mut workers: Vec<Worker> = (0..workers_per_rank)
        .map(|worker_id| Worker {
            worker_id,
            threads: threads_per_worker,
            tasks: Vec::new(),
        })
        .collect();
    let mut loads = vec![0u64; workers_per_rank];
    let mut order: Vec<&(usize, u64)> = tasks.iter().collect();
    order.sort_by_key(|(t, size)| (std::cmp::Reverse(*size), *t));
    for (task, size) in order {
        let w = (0..workers_per_rank).min_by_key(|&w| (loads[w], w)).unwrap();
        loads[w] += size;
        workers[w].tasks.push(*task);
    }
    workers
}

/// Turn one heavy task's local supermers into pre-aggregated
/// (k-mer, count) records, ascending by k-mer. Count-only: provenance is
/// not representable in this form.
pub fn kmerlist_transform(
    supermers: &[Supermer],
    codec: &KmerCodec,
    canonical: bool,
    sorter: SorterKind,
    threads: usize,
) -> Vec<KmerListRecord> {
    let mut arr = KmerArray::new(codec.width(), false);
    for sm in supermers {
        for (km, _) in expand_supermer(sm, codec, canonical) {
            arr.push(km, None);
        }
    }
    sortcount::sort_with(&mut arr, sorter, threads);
    sortcount::scan_runs(&arr)
        .into_iter()
        .map(|run| KmerListRecord {
            kmer: run.kmer,
            count: u32::try_from(run.count).expect("per-sender count exceeds u32"),
        })
        .collect()
}

/// Merge every sender's kmer-list stream for one task: concatenate, sort by
/// k-mer, and sum counts of equal keys.
pub fn merge_kmerlists(mut records: Vec<KmerListRecord>) -> Vec<Run> {
    records.sort_unstable_by_key(|r| r.kmer);
    let mut out: Vec<Run> = Vec::new();
    for rec in records {
        match out.last_mut() {
            Some(run) if run.kmer == rec.kmer => run.count += rec.count as u64,
            _ => out.push(Run {
                kmer: rec.kmer,
                count: rec.count as u64,
                extensions: Vec::new(),
            }),
        }
    }
    out
}
