// Each integration test binary compiles its own copy of this module and
// uses a different subset of it.
#![allow(dead_code)]

//! Shared helpers for the integration suites: synthetic data generation and
//! independent oracles. The oracles deliberately avoid the library's packed
//! representation and rolling updates: values are rebuilt per window with
//! plain base-4 arithmetic over a private encoding table.

use std::collections::HashMap;
use std::hash::{BuildHasherDefault, Hasher};

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use kmersort::seq::Read;

/// Minimal multiply-xor hasher for the oracle maps; the default hasher
/// dominates the exactness suite's runtime on large maps.
#[derive(Default)]
pub struct FoldHasher(u64);

impl Hasher for FoldHasher {
    fn finish(&self) -> u64 {
        self.0
    }

    fn write(&mut self, bytes: &[u8]) {
        for &b in bytes {
            self.0 = (self.0 ^ b as u64).wrapping_mul(0x100000001b3);
        }
    }

    fn write_u128(&mut self, v: u128) {
        let x = (v as u64) ^ ((v >> 64) as u64).wrapping_mul(0x9E3779B97F4A7C15);
        let x = (x ^ (x >> 32)).wrapping_mul(0xD6E8FEB86659FD93);
        self.0 = x ^ (x >> 32);
    }
}

pub type CountMap = HashMap<u128, u64, BuildHasherDefault<FoldHasher>>;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_bases(rng: &mut ChaCha8Rng, len: usize) -> Vec<u8> {
    (0..len).map(|_| b"ACGT"[rng.random_range(0..4)]).collect()
}

/// Uniform random reads with lengths drawn from `len_range`.
pub fn random_reads(
    rng: &mut ChaCha8Rng,
    count: usize,
    len_range: std::ops::Range<usize>,
) -> Vec<Read> {
    (0..count)
        .map(|i| Read {
            id: i as u32,
            bases: {
                let len = rng.random_range(len_range.clone());
                random_bases(rng, len)
            },
        })
        .collect()
}

/// Reads where roughly `repeat_fraction` of all bases come from (AATGG)_n
/// blocks embedded in otherwise random sequence.
pub fn repeat_seeded_reads(
    rng: &mut ChaCha8Rng,
    count: usize,
    len_range: std::ops::Range<usize>,
    repeat_fraction: f64,
) -> Vec<Read> {
    (0..count)
        .map(|i| {
            let len = rng.random_range(len_range.clone());
            let mut bases = Vec::with_capacity(len);
            while bases.len() < len {
                if rng.random_bool(repeat_fraction) {
                    let block = (len - bases.len()).min(rng.random_range(50..300));
                    bases.extend(
                        b"AATGG".iter().cycle().take(block).copied(),
                    );
                } else {
                    let block = (len - bases.len()).min(rng.random_range(50..300));
                    bases.extend(random_bases(rng, block));
                }
            }
            Read {
                id: i as u32,
                bases,
            }
        })
        .collect()
}

/// Genome-like reads: sampled windows of one reference that carries
/// (AATGG)_n segments at fixed loci covering roughly `repeat_fraction` of
/// its bases. K-mers recur across reads at coverage depth, so heavy tasks
/// aggregate well.
pub fn coverage_repeat_reads(
    rng: &mut ChaCha8Rng,
    reference_len: usize,
    count: usize,
    read_len: usize,
    repeat_fraction: f64,
) -> Vec<Read> {
    let mut reference = Vec::with_capacity(reference_len);
    while reference.len() < reference_len {
        let ref_run = rng
            .random_range(700..2100)
            .min(reference_len - reference.len());
        reference.extend(random_bases(rng, ref_run));
        let room = reference_len - reference.len();
        if room == 0 {
            break;
        }
        let rep_run =
            ((ref_run as f64 * repeat_fraction / (1.0 - repeat_fraction)) as usize).min(room);
        reference.extend(b"AATGG".iter().cycle().take(rep_run).copied());
    }
    (0..count)
        .map(|i| {
            let at = rng.random_range(0..=reference_len - read_len);
            Read {
                id: i as u32,
                bases: reference[at..at + read_len].to_vec(),
            }
        })
        .collect()
}

const ORACLE_CODE: [i8; 256] = {
    let mut t = [-1i8; 256];
    t[b'A' as usize] = 0;
    t[b'C' as usize] = 1;
    t[b'G' as usize] = 2;
    t[b'T' as usize] = 3;
    t
};

/// Base-4 numeral of a window, leftmost base most significant.
pub fn oracle_value(window: &[u8]) -> u128 {
    let mut v = 0u128;
    for &b in window {
        let c = ORACLE_CODE[b as usize];
        assert!(c >= 0, "oracle sees only ACGT");
        v = v * 4 + c as u128;
    }
    v
}

/// Numeral of the reverse complement of a window.
pub fn oracle_rc_value(window: &[u8]) -> u128 {
    let mut v = 0u128;
    for &b in window.iter().rev() {
        let c = ORACLE_CODE[b as usize];
        assert!(c >= 0);
        v = v * 4 + (3 - c) as u128;
    }
    v
}

/// Brute-force hash-map counter over sanitized reads; keys are window
/// numerals (strand-merged when `canonical`).
pub fn oracle_counts(reads: &[Read], k: usize, canonical: bool) -> CountMap {
    let mut map = CountMap::default();
    for read in reads {
        if read.len() < k {
            continue;
        }
        for i in 0..=read.len() - k {
            let window = &read.bases[i..i + k];
            let mut v = oracle_value(window);
            if canonical {
                v = v.min(oracle_rc_value(window));
            }
            *map.entry(v).or_insert(0u64) += 1;
        }
    }
    map
}

/// Pipeline histogram (run with bounds [1, max]) as numeral -> count.
pub fn histogram_as_map(h: &kmersort::Histogram, k: usize) -> CountMap {
    h.filtered
        .iter()
        .map(|r| (r.kmer.value(k), r.count))
        .collect()
}

/// Drain-compare a full-bounds histogram against an oracle count map.
pub fn assert_counts_match(h: &kmersort::Histogram, k: usize, mut oracle: CountMap, label: &str) {
    for run in &h.filtered {
        match oracle.remove(&run.kmer.value(k)) {
            Some(count) if count == run.count => {}
            got => panic!(
                "{label}: k-mer {:x} counted {} by pipeline, {:?} by oracle",
                run.kmer.value(k),
                run.count,
                got
            ),
        }
    }
    assert!(
        oracle.is_empty(),
        "{label}: {} oracle k-mers missing from pipeline output",
        oracle.len()
    );
}
