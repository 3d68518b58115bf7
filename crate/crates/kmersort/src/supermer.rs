//! Supermer construction and expansion.
//!
//! A supermer is a maximal run of consecutive bases whose k-mers all map to
//! one destination task; exchanging it instead of its k-mers avoids resending
//! the k-1 overlapping bases of every adjacent pair. Expansion on the
//! receiving side reconstructs the exact (k-mer, extension) multiset.

use crate::minimizer::minimizers_of_codes;
use crate::seq::{encode_base, Extension, KmerCodec, PackedKmer, PackedSeq, Read};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Supermer {
    pub bases: PackedSeq,
    pub dest_task: u32,
    /// Provenance of the first k-mer; interior k-mers are reconstructed by
    /// offsetting the position.
    pub ext: Extension,
}

impl Supermer {
    #[inline]
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }

    /// Number of k-mers the supermer expands to.
    #[inline]
    pub fn kmer_count(&self, k: usize) -> usize {
        debug_assert!(self.bases.len() >= k);
        self.bases.len() - k + 1
    }

    /// Split into pieces of at most `max_bases` bases. Adjacent pieces share
    /// k-1 bases so the union of their k-mers equals the original's.
    pub fn split(&self, k: usize, max_bases: usize) -> Vec<Supermer> {
        assert!(max_bases >= k);
        if self.len() <= max_bases {
            return vec![self.clone()];
        }
        let kmers_per_piece = max_bases - k + 1;
        let total_kmers = self.kmer_count(k);
        let mut out = Vec::with_capacity(total_kmers.div_ceil(kmers_per_piece));
        let mut first = 0usize;
        while first < total_kmers {
            let last = (first + kmers_per_piece - 1).min(total_kmers - 1);
            out.push(Supermer {
                bases: self.bases.slice(first, last - first + k),
                dest_task: self.dest_task,
                ext: Extension {
                    read_id: self.ext.read_id,
                    pos: self.ext.pos + first as u32,
                },
            });
            first = last + 1;
        }
        out
    }
}

/// Partition a read into supermers: scan k-mers left to right and extend the
/// open supermer while the destination task is unchanged, emitting on change
/// and at the end of the read. Reads shorter than k yield nothing.
pub fn supermers_of_read(
    read: &Read,
    k: usize,
    m: usize,
    seed: u64,
    tasks: usize,
) -> Vec<Supermer> {
    if read.len() < k {
        return Vec::new();
    }
    let codes: Vec<u8> = read
        .bases
        .iter()
        .map(|&b| encode_base(b).expect("read is sanitized"))
        .collect();
    let minimizers = minimizers_of_codes(&codes, k, m, seed);
    let dests: Vec<u32> = minimizers
        .iter()
        .map(|e| crate::minimizer::destination_task(e.score, tasks) as u32)
        .collect();

    let mut out = Vec::new();
    let mut start = 0usize;
    for i in 1..=dests.len() {
        if i == dests.len() || dests[i] != dests[start] {
            out.push(Supermer {
                bases: PackedSeq::from_codes(&codes[start..i - 1 + k]),
                dest_task: dests[start],
                ext: Extension {
                    read_id: read.id,
                    pos: start as u32,
                },
            });
            start = i;
        }
    }
    out
}

/// Expand a supermer back into its k-mers. K-mer `j` carries extension
/// `(ext.read_id, ext.pos + j)`; canonicalization, when enabled, is applied
/// here on the receiving side.
pub fn expand_supermer(
    sm: &Supermer,
    codec: &KmerCodec,
    canonical: bool,
) -> Vec<(PackedKmer, Extension)> {
    let k = codec.k();
    assert!(sm.len() >= k, "supermer shorter than k");
    let codes: Vec<u8> = sm.bases.codes().collect();
    expand_codes(&codes, sm.ext, codec, canonical)
}

/// Expansion over already-decoded 2-bit codes (what the wire decoder holds),
/// streamed to a consumer to keep the receive path allocation-free.
pub fn expand_codes_with<F: FnMut(PackedKmer, Extension)>(
    codes: &[u8],
    ext: Extension,
    codec: &KmerCodec,
    canonical: bool,
    mut take: F,
) {
    let k = codec.k();
    debug_assert!(codes.len() >= k);
    let mut km = codec.pack_codes(&codes[..k]);
    for j in 0..=codes.len() - k {
        if j > 0 {
            km = codec.roll(km, codes[j + k - 1]);
        }
        let value = if canonical { codec.canonical(km) } else { km };
        take(
            value,
            Extension {
                read_id: ext.read_id,
                pos: ext.pos + j as u32,
            },
        );
    }
}

/// [`expand_codes_with`] collected into a vector.
pub fn expand_codes(
    codes: &[u8],
    ext: Extension,
    codec: &KmerCodec,
    canonical: bool,
) -> Vec<(PackedKmer, Extension)> {
    let mut out = Vec::with_capacity(codes.len() + 1 - codec.k());
    expand_codes_with(codes, ext, codec, canonical, |km, e| out.push((km, e)));
    out
}
