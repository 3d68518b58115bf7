//! FASTA ingestion and sanitization.
//!
//! Sequences are upper-cased and split into independent fragments at every
//! non-ACGT character and at the 65,535-base cap imposed by the 16-bit wire
//! length field. Fragments get dense 0-based ids in file order; k-mers never
//! span a split point.

use std::io::BufRead;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::seq::Read;

/// Longest fragment the wire-format length field can carry.
pub const MAX_READ_BASES: usize = u16::MAX as usize;

#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct IngestStats {
    /// FASTA records (header lines) seen.
    pub records: u64,
    /// Sanitized fragments produced.
    pub reads: u64,
    pub bases: u64,
    /// Fragment boundaries forced by a non-ACGT character.
    pub non_acgt_splits: u64,
    /// Fragment boundaries forced by the length cap.
    pub length_splits: u64,
}

pub fn parse_fasta(paths: &[PathBuf]) -> Result<(Vec<Read>, IngestStats)> {
    let mut reads = Vec::new();
    let mut stats = IngestStats::default();
    for path in paths {
        parse_one(path, &mut reads, &mut stats)?;
    }
    Ok((reads, stats))
}

fn parse_one(path: &Path, reads: &mut Vec<Read>, stats: &mut IngestStats) -> Result<()> {
    let file = std::fs::File::open(path).map_err(|e| Error::Ingest {
        path: path.to_path_buf(),
        line: 0,
        msg: format!("cannot open: {e}"),
    })?;
    let mut reader = std::io::BufReader::new(file);
    let mut line = String::new();
    let mut line_no = 0usize;
    let mut in_record = false;
    let mut fragment: Vec<u8> = Vec::new();

    let mut flush = |fragment: &mut Vec<u8>, stats: &mut IngestStats| {
        if !fragment.is_empty() {
            stats.reads += 1;
            stats.bases += fragment.len() as u64;
            reads.push(Read {
                id: (reads.len()) as u32,
                bases: std::mem::take(fragment),
            });
        }
    };

    loop {
        line.clear();
        let n = reader.read_line(&mut line).map_err(|e| Error::Ingest {
            path: path.to_path_buf(),
            line: line_no + 1,
            msg: format!("read failed: {e}"),
        })?;
        if n == 0 {
            break;
        }
        line_no += 1;
        let text = line.trim_end_matches(['\n', '\r']);
        if text.starts_with('>') {
            flush(&mut fragment, stats);
            stats.records += 1;
            in_record = true;
            continue;
        }
        if text.is_empty() {
            continue;
        }
        if !in_record {
            return Err(Error::Ingest {
                path: path.to_path_buf(),
                line: line_no,
                msg: "sequence data before first header".into(),
            });
        }
        for &b in text.as_bytes() {
            match b {
                b'A' | b'C' | b'G' | b'T' => fragment.push(b),
                b'a' | b'c' | b'g' | b't' => fragment.push(b.to_ascii_uppercase()),
                _ => {
                    if !fragment.is_empty() {
                        stats.non_acgt_splits += 1;
                    }
                    flush(&mut fragment, stats);
                }
            }
            if fragment.len() == MAX_READ_BASES {
                stats.length_splits += 1;
                flush(&mut fragment, stats);
            }
        }
    }
    flush(&mut fragment, stats);
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::io::Write;

    fn parse_text(text: &str) -> Result<(Vec<Read>, IngestStats)> {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(text.as_bytes()).unwrap();
        parse_fasta(&[f.path().to_path_buf()])
    }

    #[test]
    fn single_record() {
        let (reads, stats) = parse_text(">r1\nACGT\n").unwrap();
        assert_eq!(reads.len(), 1);
        assert_eq!(reads[0].id, 0);
        assert_eq!(reads[0].bases, b"ACGT");
        assert_eq!(stats.records, 1);
        assert_eq!(stats.bases, 4);
    }

    #[test]
    fn line_wrapping_joins() {
        let (reads, _) = parse_text(">r1\nAC\nGT\n").unwrap();
        assert_eq!(reads.len(), 1);
        assert_eq!(reads[0].bases, b"ACGT");
    }

    #[test]
    fn non_acgt_splits_fragments() {
        let (reads, stats) = parse_text(">r1\nACNNGT\n").unwrap();
        assert_eq!(reads.len(), 2);
        assert_eq!(reads[0].bases, b"AC");
        assert_eq!(reads[0].id, 0);
        assert_eq!(reads[1].bases, b"GT");
        assert_eq!(reads[1].id, 1);
        assert_eq!(stats.non_acgt_splits, 1);
    }

    #[test]
    fn lowercase_is_uppercased() {
        let (reads, _) = parse_text(">r\nacgt\n").unwrap();
        assert_eq!(reads[0].bases, b"ACGT");
    }

    #[test]
    fn sequence_before_header_is_an_error() {
        let err = parse_text("ACGT\n>r1\nACGT\n").unwrap_err();
        match err {
            Error::Ingest { line, .. } => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_file_is_ingest_error() {
        let err = parse_fasta(&[PathBuf::from("/nonexistent/x.fa")]).unwrap_err();
        assert!(matches!(err, Error::Ingest { line: 0, .. }));
    }

    #[test]
    fn ids_are_dense_across_files() {
        let mut f1 = tempfile::NamedTempFile::new().unwrap();
        f1.write_all(b">a\nACGT\n>b\nGGGG\n").unwrap();
        let mut f2 = tempfile::NamedTempFile::new().unwrap();
        f2.write_all(b">c\nTTTT\n").unwrap();
        let (reads, stats) =
            parse_fasta(&[f1.path().to_path_buf(), f2.path().to_path_buf()]).unwrap();
        let ids: Vec<u32> = reads.iter().map(|r| r.id).collect();
        assert_eq!(ids, vec![0, 1, 2]);
        assert_eq!(stats.records, 3);
    }

    #[test]
    fn oversized_sequence_is_capped() {
        let long = "A".repeat(MAX_READ_BASES + 10);
        let (reads, stats) = parse_text(&format!(">r\n{long}\n")).unwrap();
        assert_eq!(reads.len(), 2);
        assert_eq!(reads[0].len(), MAX_READ_BASES);
        assert_eq!(reads[1].len(), 10);
        assert_eq!(stats.length_splits, 1);
    }

    #[test]
    fn crlf_is_tolerated() {
        let (reads, _) = parse_text(">r\r\nAC\r\nGT\r\n").unwrap();
        assert_eq!(reads[0].bases, b"ACGT");
    }
}
