//! Sorting-based exact k-mer counting with supermer partitioning.
//!
//! The engine simulates a distributed-memory counter on one machine: reads
//! are split across R ranks, parsed into minimizer-partitioned supermers,
//! exchanged in fixed-size all-to-all rounds (with optional delta-compressed
//! provenance), and counted per task by radix sort plus a linear scan. Heavy
//! tasks detected from size statistics travel pre-aggregated as
//! (k-mer, count) tuples instead.

pub mod config;
pub mod error;
pub mod exchange;
pub mod fasta;
pub mod minimizer;
pub mod output;
pub mod pipeline;
pub mod seq;
pub mod sortcount;
pub mod supermer;
pub mod task;
pub mod wire;

pub use config::RunConfig;
pub use error::{Error, Result};
pub use pipeline::{run_from_files, run_pipeline, RunReport};
pub use sortcount::Histogram;
