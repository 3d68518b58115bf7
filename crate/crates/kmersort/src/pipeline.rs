//! End-to-end orchestration: read partitioning across ranks, supermer
//! construction, size gathering and task assignment, the two exchange
//! phases, per-task sorting and counting, and the global merge.
//!
//! Ranks are simulated in one process. Every algorithmic decision of the
//! distributed design is kept: per-rank queues, fixed-size exchange rounds,
//! a root-style size gather, and per-task counting. The final histogram is
//! therefore independent of rank count, worker layout, batch size, sorter
//! backend, overlap mode and heavy-hitter factor.

use std::time::Instant;

use rayon::prelude::*;

use crate::config::RunConfig;
use crate::error::{Error, Result};
use crate::exchange::{self, KmerListEncoder, Topology};
use crate::fasta::IngestStats;
use crate::minimizer;
use crate::seq::{Extension, KmerCodec, Read};
use crate::sortcount::{self, Histogram, KmerArray, Run, SorterChoice};
use crate::supermer::{expand_codes_with, supermers_of_read, Supermer};
use crate::task::{self, TaskDescriptor};
use crate::wire::{self, KmerListRecord, SupermerEncoder};

#[derive(Debug, Clone, serde::Serialize)]
pub struct ReportParams {
    pub k: usize,
    pub m: usize,
    pub ranks: usize,
    pub workers_per_rank: usize,
    pub threads_per_worker: usize,
    pub tasks_per_worker: usize,
    pub tasks: usize,
    pub batch_size: usize,
    pub lower: u64,
    pub upper: u64,
    pub seed: u64,
    pub canonical: bool,
    pub extensions: bool,
    pub heavy_factor: f64,
    pub sorter: String,
    pub memory_budget: Option<u64>,
    pub overlap: bool,
}

#[derive(Debug, Clone, serde::Serialize)]
pub struct HistogramSummary {
    pub total_kmer_instances: u64,
    pub distinct_kmers: u64,
    pub filtered_distinct: u64,
}

/// Machine-readable run summary; field names are stable.
#[derive(Debug, Clone, serde::Serialize)]
pub struct RunReport {
    pub params: ReportParams,
    pub io_seconds: f64,
    pub prepare_seconds: f64,
    pub exchange_seconds: f64,
    pub count_seconds: f64,
    pub ingest: IngestStats,
    pub reads_skipped_short: u64,
    pub supermers: u64,
    pub supermer_splits: u64,
    pub exchange: exchange::ExchangeStats,
    pub extension_bytes_full: u64,
    pub extension_bytes_encoded: u64,
    pub tasks: Vec<TaskDescriptor>,
    pub histogram: HistogramSummary,
}

fn sorter_name(choice: SorterChoice) -> String {
    match choice {
        SorterChoice::Auto => "auto",
        SorterChoice::InPlace => "inplace",
        SorterChoice::OutOfPlace => "outofplace",
    }
    .to_string()
}

/// Longest-first greedy read partitioning: reads in descending length order
/// each go to the currently least-loaded rank (ties to the lower rank id).
pub fn partition_reads(reads: &[Read], ranks: usize) -> Vec<Vec<&Read>> {
    assert!(ranks >= 1);
    let mut order: Vec<&Read> = reads.iter().collect();
    order.sort_by_key(|r| (std::cmp::Reverse(r.len()), r.id));
    let mut out: Vec<Vec<&Read>> = vec![Vec::new(); ranks];
    let mut loads = vec![0u64; ranks];
    for read in order {
        let rank = (0..ranks).min_by_key(|&r| (loads[r], r)).unwrap();
        loads[rank] += read.len() as u64;
        out[rank].push(read);
    }
    out
}

struct RankPrep {
    /// All supermers of the rank in production order (read-major), already
    /// split to fit one exchange batch.
    supermers: Vec<Supermer>,
    /// Accumulated wire payload bytes per destination task.
    sizes: Vec<u64>,
    skipped_short: u64,
    splits: u64,
}

fn prepare_rank(reads: &[&Read], cfg: &RunConfig, tasks: usize, max_bases: usize) -> RankPrep {
    let mut prep = RankPrep {
        supermers: Vec::new(),
        sizes: vec![0u64; tasks],
        skipped_short: 0,
        splits: 0,
    };
    for read in reads {
        if read.len() < cfg.k {
            prep.skipped_short += 1;
            continue;
        }
        for sm in supermers_of_read(read, cfg.k, cfg.m, cfg.seed, tasks) {
            let pieces = if sm.len() > max_bases {
                let pieces = sm.split(cfg.k, max_bases);
                prep.splits += (pieces.len() - 1) as u64;
                pieces
            } else {
                vec![sm]
            };
            for piece in pieces {
                prep.sizes[piece.dest_task as usize] +=
                    wire::supermer_record_max_bytes(piece.len(), cfg.extensions) as u64;
                prep.supermers.push(piece);
            }
        }
    }
    prep
}

enum TaskInput {
    Normal(KmerArray),
    Heavy(Vec<KmerListRecord>),
}

/// Run the counting pipeline over already-ingested reads.
pub fn run_pipeline(cfg: &RunConfig, reads: &[Read]) -> Result<(Histogram, RunReport)> {
    cfg.validate()?;
    let codec = KmerCodec::new(cfg.k).expect("validated");
    let tasks = cfg.total_tasks();
    let ranks = cfg.ranks;
    let topo = Topology::new(ranks, cfg.batch_size);
    let max_bases =
        wire::max_supermer_bases(cfg.batch_size, cfg.k, cfg.extensions).expect("validated");

    // Stage 1: parse reads into destination-homogeneous supermers per rank.
    let prep_start = Instant::now();
    let rank_reads = partition_reads(reads, ranks);
    let mut preps: Vec<RankPrep> = rank_reads
        .par_iter()
        .map(|rs| prepare_rank(rs, cfg, tasks, max_bases))
        .collect();
    let prepare_seconds = prep_start.elapsed().as_secs_f64();

    // Root gather: global task sizes drive assignment and heavy detection.
    let size_reports: Vec<Vec<u64>> = preps.iter().map(|p| p.sizes.clone()).collect();
    let sizes = task::gather_task_sizes(&size_reports)?;
    let owner = task::assign_tasks(&sizes, ranks);
    // The kmer-list form carries neither provenance nor a strand-merged
    // value's source task, so it only applies to plain forward counting.
    let heavy_eligible = !cfg.extensions && !cfg.canonical;
    let heavy = if heavy_eligible {
        task::detect_heavy_hitters(&sizes, cfg.heavy_factor)
    } else {
        vec![false; tasks]
    };

    // Stage 2: route supermers (normal tasks) and pre-aggregated kmer lists
    // (heavy tasks) to their owner ranks in fixed-size rounds.
    let exchange_start = Instant::now();
    let supermer_total: u64 = preps.iter().map(|p| p.supermers.len() as u64).sum();
    let mut queues_a: Vec<Vec<Supermer>> = vec![Vec::new(); ranks * ranks];
    let mut heavy_local: Vec<Vec<Vec<Supermer>>> = vec![vec![Vec::new(); tasks]; ranks];
    for (rank, prep) in preps.iter_mut().enumerate() {
        for sm in prep.supermers.drain(..) {
            let t = sm.dest_task as usize;
            if heavy[t] {
                heavy_local[rank][t].push(sm);
            } else {
                queues_a[rank * ranks + owner[t]].push(sm);
            }
        }
    }

    let plan_a = exchange::plan_rounds(&queues_a, &topo, || SupermerEncoder::new(cfg.extensions))?;
    drop(queues_a);
    let mut task_arrays: Vec<KmerArray> = (0..tasks)
        .map(|_| KmerArray::new(codec.width(), cfg.extensions))
        .collect();
    let mut codes: Vec<u8> = Vec::new();
    let stats_a = exchange::run_exchange(&topo, &plan_a, cfg.overlap, |_round, dst, src, batch| {
        for rec in wire::decode_stream(batch, cfg.k, cfg.extensions, src, dst)? {
            codes.clear();
            codes.extend(rec.bases.codes());
            let t = minimizer::task_of_first_kmer(&codes, cfg.k, cfg.m, cfg.seed, tasks);
            if owner[t] != dst || heavy[t] {
                return Err(Error::Internal(format!(
                    "supermer for task {t} delivered to rank {dst}"
                )));
            }
            let ext = rec.ext.unwrap_or(Extension { read_id: 0, pos: 0 });
            let arr = &mut task_arrays[t];
            expand_codes_with(&codes, ext, &codec, cfg.canonical, |km, e| {
                arr.push(km, cfg.extensions.then_some(e));
            });
        }
        Ok(())
    })?;
    let (extension_bytes_full, extension_bytes_encoded) = plan_a
        .encoders
        .iter()
        .fold((0u64, 0u64), |(f, e), enc| {
            (f + enc.ext_bytes_full, e + enc.ext_bytes_encoded)
        });
    drop(plan_a);

    let mut exchange_stats = stats_a;
    let mut heavy_inbox: Vec<Vec<KmerListRecord>> = vec![Vec::new(); tasks];
    if heavy.iter().any(|&h| h) {
        let mut queues_b: Vec<Vec<KmerListRecord>> = vec![Vec::new(); ranks * ranks];
        for (rank, local) in heavy_local.iter().enumerate() {
            for (t, sms) in local.iter().enumerate() {
                if !heavy[t] || sms.is_empty() {
                    continue;
                }
                let instances: usize = sms.iter().map(|sm| sm.kmer_count(cfg.k)).sum();
                let kind = sortcount::select_sorter(
                    instances,
                    codec.width() * 8,
                    cfg.memory_budget,
                    cfg.sorter,
                );
                let recs = task::kmerlist_transform(
                    sms,
                    &codec,
                    cfg.canonical,
                    kind,
                    cfg.threads_per_worker,
                );
                queues_b[rank * ranks + owner[t]].extend(recs);
            }
        }
        let width = codec.width();
        let plan_b = exchange::plan_rounds(&queues_b, &topo, || KmerListEncoder { width })?;
        let stats_b = exchange::run_exchange(&topo, &plan_b, cfg.overlap, |_round, dst, src, batch| {
            for rec in wire::decode_kmerlist_stream(batch, width, src, dst)? {
                let kmer_codes = codec.unpack_codes(rec.kmer);
                let t =
                    minimizer::task_of_first_kmer(&kmer_codes, cfg.k, cfg.m, cfg.seed, tasks);
                if owner[t] != dst || !heavy[t] {
                    return Err(Error::Internal(format!(
                        "kmer-list record for task {t} delivered to rank {dst}"
                    )));
                }
                heavy_inbox[t].push(rec);
            }
            Ok(())
        })?;
        exchange_stats.merge(&stats_b);
    }
    let exchange_seconds = exchange_start.elapsed().as_secs_f64();

    // Stage 3: per-task sort + linear scan on each owner rank's workers,
    // then a global merge (a canonical value can arrive via two tasks).
    let count_start = Instant::now();
    let mut inputs: Vec<Option<TaskInput>> = task_arrays
        .into_iter()
        .map(|arr| Some(TaskInput::Normal(arr)))
        .collect();
    for (t, inbox) in heavy_inbox.into_iter().enumerate() {
        if heavy[t] {
            inputs[t] = Some(TaskInput::Heavy(inbox));
        }
    }
    let mut jobs: Vec<(usize, Vec<(usize, TaskInput)>)> = Vec::new();
    for rank in 0..ranks {
        let owned: Vec<(usize, u64)> = (0..tasks)
            .filter(|&t| owner[t] == rank)
            .map(|t| (t, sizes[t]))
            .collect();
        for worker in task::assign_to_workers(&owned, cfg.workers_per_rank, cfg.threads_per_worker)
        {
            if worker.tasks.is_empty() {
                continue;
            }
            let batch: Vec<(usize, TaskInput)> = worker
                .tasks
                .iter()
                .map(|&t| (t, inputs[t].take().expect("each task runs once")))
                .collect();
            jobs.push((worker.threads, batch));
        }
    }
    let results: Vec<Vec<(usize, Vec<Run>)>> = jobs
        .into_par_iter()
        .map(|(threads, batch)| {
            batch
                .into_iter()
                .map(|(t, input)| {
                    let runs = match input {
                        TaskInput::Normal(mut arr) => {
                            let kind = sortcount::select_sorter(
                                arr.len(),
                                arr.record_bytes(),
                                cfg.memory_budget,
                                cfg.sorter,
                            );
                            sortcount::sort_with(&mut arr, kind, threads);
                            sortcount::scan_runs(&arr)
                        }
                        TaskInput::Heavy(recs) => task::merge_kmerlists(recs),
                    };
                    (t, runs)
                })
                .collect()
        })
        .collect();

    let mut per_task_runs: Vec<Vec<Run>> = vec![Vec::new(); tasks];
    for (t, runs) in results.into_iter().flatten() {
        per_task_runs[t] = runs;
    }
    let mut merged = merge_sorted_runs(per_task_runs);
    if cfg.extensions {
        for run in &mut merged {
            run.extensions.sort_unstable();
        }
    }
    let histogram = Histogram::from_runs(merged, cfg.lower, cfg.upper);
    let count_seconds = count_start.elapsed().as_secs_f64();

    let report = RunReport {
        params: ReportParams {
            k: cfg.k,
            m: cfg.m,
            ranks: cfg.ranks,
            workers_per_rank: cfg.workers_per_rank,
            threads_per_worker: cfg.threads_per_worker,
            tasks_per_worker: cfg.tasks_per_worker,
            tasks,
            batch_size: cfg.batch_size,
            lower: cfg.lower,
            upper: cfg.upper,
            seed: cfg.seed,
            canonical: cfg.canonical,
            extensions: cfg.extensions,
            heavy_factor: cfg.heavy_factor,
            sorter: sorter_name(cfg.sorter),
            memory_budget: cfg.memory_budget,
            overlap: cfg.overlap,
        },
        io_seconds: 0.0,
        prepare_seconds,
        exchange_seconds,
        count_seconds,
        ingest: IngestStats::default(),
        reads_skipped_short: preps.iter().map(|p| p.skipped_short).sum(),
        supermers: supermer_total,
        supermer_splits: preps.iter().map(|p| p.splits).sum(),
        exchange: exchange_stats,
        extension_bytes_full,
        extension_bytes_encoded,
        tasks: (0..tasks)
            .map(|t| TaskDescriptor {
                task_id: t,
                size_bytes: sizes[t],
                owner_rank: owner[t],
                heavy: heavy[t],
            })
            .collect(),
        histogram: HistogramSummary {
            total_kmer_instances: histogram.total_instances,
            distinct_kmers: histogram.distinct,
            filtered_distinct: histogram.filtered.len() as u64,
        },
    };
    Ok((histogram, report))
}

/// K-way merge of per-task sorted run lists, summing counts of equal keys.
/// Task partitioning keeps a forward value in one list, but a canonical
/// value can arrive via both strands' tasks.
fn merge_sorted_runs(per_task: Vec<Vec<Run>>) -> Vec<Run> {
    use std::cmp::Reverse;
    use std::collections::BinaryHeap;

    let total: usize = per_task.iter().map(Vec::len).sum();
    let mut iters: Vec<std::vec::IntoIter<Run>> =
        per_task.into_iter().map(Vec::into_iter).collect();
    let mut heads: Vec<Option<Run>> = iters.iter_mut().map(Iterator::next).collect();
    let mut heap: BinaryHeap<Reverse<(crate::seq::PackedKmer, usize)>> = heads
        .iter()
        .enumerate()
        .filter_map(|(i, head)| head.as_ref().map(|r| Reverse((r.kmer, i))))
        .collect();
    let mut out: Vec<Run> = Vec::with_capacity(total);
    while let Some(Reverse((_, i))) = heap.pop() {
        let run = heads[i].take().expect("heap entry has a live head");
        if let Some(next) = iters[i].next() {
            heap.push(Reverse((next.kmer, i)));
            heads[i] = Some(next);
        }
        match out.last_mut() {
            Some(last) if last.kmer == run.kmer => {
                last.count += run.count;
                last.extensions.extend(run.extensions);
            }
            _ => out.push(run),
        }
    }
    out
}

/// Ingest FASTA files, run the pipeline, and fill in i/o accounting.
pub fn run_from_files(
    cfg: &RunConfig,
    paths: &[std::path::PathBuf],
) -> Result<(Histogram, RunReport)> {
    let io_start = Instant::now();
    let (reads, ingest) = crate::fasta::parse_fasta(paths)?;
    let io_seconds = io_start.elapsed().as_secs_f64();
    let (histogram, mut report) = run_pipeline(cfg, &reads)?;
    report.io_seconds = io_seconds;
    report.ingest = ingest;
    Ok((histogram, report))
}
