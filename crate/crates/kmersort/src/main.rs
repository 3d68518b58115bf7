use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use kmersort::config::{self, RunConfig};
use kmersort::output;
use kmersort::seq::KmerCodec;
use kmersort::sortcount::SorterChoice;

#[derive(Debug, Clone, Copy, clap::ValueEnum)]
enum SorterArg {
    Auto,
    Inplace,
    Outofplace,
}

impl From<SorterArg> for SorterChoice {
    fn from(a: SorterArg) -> Self {
        match a {
            SorterArg::Auto => SorterChoice::Auto,
            SorterArg::Inplace => SorterChoice::InPlace,
            SorterArg::Outofplace => SorterChoice::OutOfPlace,
        }
    }
}

fn parse_u64_maybe_hex(s: &str) -> Result<u64, String> {
    let parsed = if let Some(hex) = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        u64::from_str_radix(hex, 16)
    } else {
        s.parse()
    };
    parsed.map_err(|e| e.to_string())
}

/// Sorting-based exact k-mer counter over FASTA input.
#[derive(Parser, Debug)]
#[command(name = "kmersort", version)]
struct Cli {
    /// K-mer length (2..=63).
    #[arg(long)]
    k: usize,

    /// Minimizer length; defaults to k/2 for k < 46, else 23.
    #[arg(long)]
    m: Option<usize>,

    /// Simulated rank count.
    #[arg(long, default_value_t = config::DEFAULT_RANKS)]
    ranks: usize,

    #[arg(long, default_value_t = config::DEFAULT_WORKERS_PER_RANK)]
    workers_per_rank: usize,

    #[arg(long, default_value_t = config::DEFAULT_THREADS_PER_WORKER)]
    threads_per_worker: usize,

    #[arg(long, default_value_t = config::DEFAULT_TASKS_PER_WORKER)]
    tasks_per_worker: usize,

    /// Bytes per (source, destination) pair per exchange round.
    #[arg(long, default_value_t = config::DEFAULT_BATCH_SIZE)]
    batch_size: usize,

    /// Lowest k-mer frequency kept in the dump.
    #[arg(long, default_value_t = config::DEFAULT_LOWER)]
    lower: u64,

    /// Highest k-mer frequency kept in the dump.
    #[arg(long, default_value_t = config::DEFAULT_UPPER)]
    upper: u64,

    /// Minimizer hash seed (decimal or 0x-prefixed hex).
    #[arg(long, value_parser = parse_u64_maybe_hex, default_value = "0x9E3779B97F4A7C15")]
    seed: u64,

    /// Count strand-merged (canonical) k-mers.
    #[arg(long)]
    canonical: bool,

    /// Carry (read_id, pos_in_read) provenance through the pipeline.
    #[arg(long)]
    extensions: bool,

    /// Task size multiple of the mean that marks a heavy hitter ("inf"
    /// disables the kmer-list path).
    #[arg(long, default_value_t = config::DEFAULT_HEAVY_FACTOR)]
    heavy_factor: f64,

    #[arg(long, value_enum, default_value_t = SorterArg::Auto)]
    sorter: SorterArg,

    /// Per-sort memory budget in bytes; unlimited when absent.
    #[arg(long)]
    memory_budget: Option<u64>,

    /// Histogram TSV path; stdout when absent.
    #[arg(long)]
    out_histogram: Option<PathBuf>,

    /// Filtered k-mer dump TSV path.
    #[arg(long)]
    out_dump: Option<PathBuf>,

    /// JSON run report path.
    #[arg(long)]
    out_report: Option<PathBuf>,

    /// Run the exchange stages strictly in order instead of pipelined.
    #[arg(long)]
    no_overlap: bool,

    /// Input FASTA files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

impl Cli {
    fn to_config(&self) -> RunConfig {
        let mut cfg = RunConfig::new(self.k);
        if let Some(m) = self.m {
            cfg.m = m;
        }
        cfg.ranks = self.ranks;
        cfg.workers_per_rank = self.workers_per_rank;
        cfg.threads_per_worker = self.threads_per_worker;
        cfg.tasks_per_worker = self.tasks_per_worker;
        cfg.batch_size = self.batch_size;
        cfg.lower = self.lower;
        cfg.upper = self.upper;
        cfg.seed = self.seed;
        cfg.canonical = self.canonical;
        cfg.extensions = self.extensions;
        cfg.heavy_factor = self.heavy_factor;
        cfg.sorter = self.sorter.into();
        cfg.memory_budget = self.memory_budget;
        cfg.overlap = !self.no_overlap;
        cfg
    }
}

fn run(cli: &Cli) -> kmersort::Result<()> {
    let cfg = cli.to_config();
    cfg.validate()?;
    let (histogram, report) = kmersort::run_from_files(&cfg, &cli.inputs)?;
    let codec = KmerCodec::new(cfg.k).expect("validated");

    let hist_text = output::histogram_tsv(&histogram);
    match &cli.out_histogram {
        Some(path) => output::write_text(path, &hist_text)?,
        None => print!("{hist_text}"),
    }
    if let Some(path) = &cli.out_dump {
        output::write_text(path, &output::dump_tsv(&histogram, &codec, cfg.extensions))?;
    }
    if let Some(path) = &cli.out_report {
        output::write_text(path, &output::report_json(&report))?;
    }

    eprintln!(
        "counted {} k-mer instances, {} distinct ({} in [{}, {}]) \
         in {:.2}s io + {:.2}s prepare + {:.2}s exchange + {:.2}s count",
        report.histogram.total_kmer_instances,
        report.histogram.distinct_kmers,
        report.histogram.filtered_distinct,
        cfg.lower,
        cfg.upper,
        report.io_seconds,
        report.prepare_seconds,
        report.exchange_seconds,
        report.count_seconds,
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
