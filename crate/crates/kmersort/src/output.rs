//! Output emission: histogram TSV, filtered k-mer dump TSV, and the JSON run
//! report. Files are written whole; a failed write removes the partial file.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::pipeline::RunReport;
use crate::seq::KmerCodec;
use crate::sortcount::Histogram;

/// `count<TAB>num_distinct` lines, ascending by count.
pub fn histogram_tsv(h: &Histogram) -> String {
    let mut out = String::new();
    for (count, distinct) in &h.by_frequency {
        writeln!(out, "{count}\t{distinct}").unwrap();
    }
    out
}

/// Filtered k-mers as `kmer<TAB>count` lines ascending by k-mer, each
/// followed by its `read_id<TAB>pos` provenance lines when extensions are
/// enabled. Starts with a header line.
pub fn dump_tsv(h: &Histogram, codec: &KmerCodec, extensions: bool) -> String {
    let mut out = String::from("#kmer\tcount\n");
    for run in &h.filtered {
        let kmer = String::from_utf8(codec.unpack(run.kmer)).unwrap();
        writeln!(out, "{kmer}\t{}", run.count).unwrap();
        if extensions {
            for e in &run.extensions {
                writeln!(out, "{}\t{}", e.read_id, e.pos).unwrap();
            }
        }
    }
    out
}

pub fn report_json(report: &RunReport) -> String {
    let mut s = serde_json::to_string_pretty(report).expect("report serializes");
    s.push('\n');
    s
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| {
        let _ = std::fs::remove_file(path);
        Error::Io {
            path: path.to_path_buf(),
            source: e,
        }
    })
}
