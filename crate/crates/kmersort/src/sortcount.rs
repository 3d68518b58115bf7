//! Radix sorting of packed k-mer records and linear-scan counting.
//!
//! Records are fixed-stride runs of u64 words: the key words first, then an
//! optional provenance word that travels with its key. Two backends share
//! one ordering contract (ascending by key words): an in-place MSD sort with
//! byte digits and cycle permutation whose auxiliary memory does not grow
//! with the input, and a faster LSD sort that ping-pongs through an
//! equal-sized auxiliary array. Counting is a single linear scan over the
//! sorted records.

use std::collections::BTreeMap;

use rayon::prelude::*;

use crate::seq::{Extension, PackedKmer};

/// Sub-slabs at or below this record count are finished by insertion sort.
const INSERTION_CUTOFF: usize = 32;

/// Buckets above this record count keep recursing in parallel.
const PARALLEL_CUTOFF: usize = 1 << 14;

const MAX_STRIDE: usize = 3;

/// Flat array of fixed-width records: `key_words` key words, plus one
/// payload word when extensions ride along.
#[derive(Debug, Clone, Default)]
pub struct KmerArray {
    data: Vec<u64>,
    key_words: usize,
    stride: usize,
}

impl KmerArray {
    pub fn new(key_words: usize, with_extensions: bool) -> Self {
        assert!((1..=2).contains(&key_words));
        KmerArray {
            data: Vec::new(),
            key_words,
            stride: key_words + usize::from(with_extensions),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.data.len() / self.stride
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn record_bytes(&self) -> usize {
        self.stride * 8
    }

    pub fn has_extensions(&self) -> bool {
        self.stride > self.key_words
    }

    #[inline]
    pub fn push(&mut self, km: PackedKmer, ext: Option<Extension>) {
        self.data.extend_from_slice(&km.words[..self.key_words]);
        if self.has_extensions() {
            let e = ext.expect("extension payload required by array layout");
            self.data.push(((e.read_id as u64) << 32) | e.pos as u64);
        }
    }

    #[inline]
    pub fn key(&self, i: usize) -> PackedKmer {
        let at = i * self.stride;
        let mut words = [0u64; 2];
        words[..self.key_words].copy_from_slice(&self.data[at..at + self.key_words]);
        PackedKmer::from_words(words)
    }

    #[inline]
    pub fn extension(&self, i: usize) -> Option<Extension> {
        self.has_extensions().then(|| {
            let w = self.data[i * self.stride + self.key_words];
            Extension {
                read_id: (w >> 32) as u32,
                pos: w as u32,
            }
        })
    }

    pub fn is_sorted(&self) -> bool {
        (1..self.len()).all(|i| self.key(i - 1) <= self.key(i))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SorterChoice {
    Auto,
    InPlace,
    OutOfPlace,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub enum SorterKind {
    InPlace,
    OutOfPlace,
}

/// Pick a backend: out-of-place needs room for a second array of equal size
/// plus 10% slack; an explicit choice always wins. No budget means no limit.
pub fn select_sorter(
    records: usize,
    record_bytes: usize,
    budget: Option<u64>,
    choice: SorterChoice,
) -> SorterKind {
    match choice {
        SorterChoice::InPlace => SorterKind::InPlace,
        SorterChoice::OutOfPlace => SorterKind::OutOfPlace,
        SorterChoice::Auto => match budget {
            None => SorterKind::OutOfPlace,
            Some(budget) => {
                let live = records as u64 * record_bytes as u64;
                let need = 2 * live + 2 * live / 10;
                if budget >= need {
                    SorterKind::OutOfPlace
                } else {
                    SorterKind::InPlace
                }
            }
        },
    }
}

/// Ascending in-place MSD radix sort; `threads > 1` lets top-level digit
/// buckets be processed in parallel.
pub fn sort_inplace(arr: &mut KmerArray, threads: usize) {
    let (stride, key_words) = (arr.stride, arr.key_words);
    msd_sort(&mut arr.data, stride, key_words, 0, threads > 1);
}

/// Ascending LSD radix sort through an equal-sized auxiliary array.
pub fn sort_outofplace(arr: &mut KmerArray) {
    let (stride, key_words) = (arr.stride, arr.key_words);
    lsd_sort(&mut arr.data, stride, key_words);
}

pub fn sort_with(arr: &mut KmerArray, kind: SorterKind, threads: usize) {
    match kind {
        SorterKind::InPlace => sort_inplace(arr, threads),
        SorterKind::OutOfPlace => sort_outofplace(arr),
    }
}

#[inline]
fn digit(data: &[u64], rec: usize, stride: usize, level: usize) -> usize {
    let word = level >> 3;
    let byte = level & 7;
    ((data[rec * stride + word] >> ((7 - byte) * 8)) & 0xFF) as usize
}

#[inline]
fn key_le(data: &[u64], stride: usize, key_words: usize, a: usize, b: usize) -> bool {
    let pa = &data[a * stride..a * stride + key_words];
    let pb = &data[b * stride..b * stride + key_words];
    pa <= pb
}

fn insertion_sort(data: &mut [u64], stride: usize, key_words: usize) {
    let n = data.len() / stride;
    let mut tmp = [0u64; MAX_STRIDE];
    for i in 1..n {
        if key_le(data, stride, key_words, i - 1, i) {
            continue;
        }
        tmp[..stride].copy_from_slice(&data[i * stride..(i + 1) * stride]);
        let mut j = i;
        while j > 0 && data[(j - 1) * stride..(j - 1) * stride + key_words] > tmp[..key_words] {
            data.copy_within((j - 1) * stride..j * stride, j * stride);
            j -= 1;
        }
        data[j * stride..(j + 1) * stride].copy_from_slice(&tmp[..stride]);
    }
}

#[inline]
fn swap_records(data: &mut [u64], stride: usize, a: usize, b: usize) {
    for t in 0..stride {
        data.swap(a * stride + t, b * stride + t);
    }
}

fn msd_sort(data: &mut [u64], stride: usize, key_words: usize, mut level: usize, parallel: bool) {
    let n = data.len() / stride;
    let max_level = key_words * 8;
    if n <= 1 {
        return;
    }
    let counts = loop {
        if level == max_level {
            return;
        }
        if n <= INSERTION_CUTOFF {
            insertion_sort(data, stride, key_words);
            return;
        }
        let mut counts = [0usize; 256];
        for rec in 0..n {
            counts[digit(data, rec, stride, level)] += 1;
        }
        // A level every record shares carries no information; move on.
        if counts.contains(&n) {
            level += 1;
            continue;
        }
        break counts;
    };

    let mut bounds = [0usize; 257];
    for (b, &count) in counts.iter().enumerate() {
        bounds[b + 1] = bounds[b] + count;
    }
    // Cycle the records into their buckets: each swap puts one record in its
    // final bucket, so the permutation is linear in n.
    let mut next = bounds;
    for b in 0..256 {
        while next[b] < bounds[b + 1] {
            let d = digit(data, next[b], stride, level);
            if d == b {
                next[b] += 1;
            } else {
                swap_records(data, stride, next[b], next[d]);
                next[d] += 1;
            }
        }
    }

    // Carve bucket slabs and recurse.
    let mut slabs: Vec<&mut [u64]> = Vec::new();
    let mut rest = data;
    for &count in &counts {
        let (slab, tail) = rest.split_at_mut(count * stride);
        rest = tail;
        if count > 1 {
            slabs.push(slab);
        }
    }
    if parallel {
        slabs.into_par_iter().for_each(|slab| {
            let keep_parallel = slab.len() / stride > PARALLEL_CUTOFF;
            msd_sort(slab, stride, key_words, level + 1, keep_parallel);
        });
    } else {
        for slab in slabs {
            msd_sort(slab, stride, key_words, level + 1, false);
        }
    }
}

fn lsd_sort(data: &mut [u64], stride: usize, key_words: usize) {
    let n = data.len() / stride;
    if n <= 1 {
        return;
    }
    let mut aux = vec![0u64; data.len()];
    let mut in_data = true;
    for level in (0..key_words * 8).rev() {
        let mut counts = [0usize; 256];
        {
            let src: &[u64] = if in_data { data } else { &aux };
            for rec in 0..n {
                counts[digit(src, rec, stride, level)] += 1;
            }
        }
        if counts.contains(&n) {
            continue;
        }
        let mut starts = [0usize; 256];
        for b in 1..256 {
            starts[b] = starts[b - 1] + counts[b - 1];
        }
        if in_data {
            scatter(data, &mut aux, stride, level, &mut starts);
        } else {
            scatter(&aux, data, stride, level, &mut starts);
        }
        in_data = !in_data;
    }
    if !in_data {
        data.copy_from_slice(&aux);
    }
}

fn scatter(src: &[u64], dst: &mut [u64], stride: usize, level: usize, starts: &mut [usize; 256]) {
    let n = src.len() / stride;
    for rec in 0..n {
        let d = digit(src, rec, stride, level);
        let to = starts[d];
        starts[d] += 1;
        dst[to * stride..(to + 1) * stride].copy_from_slice(&src[rec * stride..(rec + 1) * stride]);
    }
}

/// One distinct k-mer after counting.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Run {
    pub kmer: PackedKmer,
    pub count: u64,
    /// Per-instance provenance, present only in extension mode.
    pub extensions: Vec<Extension>,
}

/// Run-length encode a sorted array into one entry per distinct key.
pub fn scan_runs(arr: &KmerArray) -> Vec<Run> {
    debug_assert!(arr.is_sorted());
    let mut out: Vec<Run> = Vec::new();
    for i in 0..arr.len() {
        let key = arr.key(i);
        match out.last_mut() {
            Some(run) if run.kmer == key => {
                run.count += 1;
                if let Some(e) = arr.extension(i) {
                    run.extensions.push(e);
                }
            }
            _ => out.push(Run {
                kmer: key,
                count: 1,
                extensions: arr.extension(i).into_iter().collect(),
            }),
        }
    }
    out
}

/// Frequency histogram over all counts plus the frequency-filtered k-mers.
#[derive(Debug, Clone, Default)]
pub struct Histogram {
    /// count -> number of distinct k-mers seen exactly that often.
    pub by_frequency: BTreeMap<u64, u64>,
    /// Distinct k-mers with `lower <= count <= upper`, ascending by k-mer.
    pub filtered: Vec<Run>,
    pub total_instances: u64,
    pub distinct: u64,
}

impl Histogram {
    pub fn from_runs(runs: Vec<Run>, lower: u64, upper: u64) -> Histogram {
        let mut h = Histogram::default();
        for run in runs {
            *h.by_frequency.entry(run.count).or_insert(0) += 1;
            h.total_instances += run.count;
            h.distinct += 1;
            if run.count >= lower && run.count <= upper {
                h.filtered.push(run);
            }
        }
        h
    }
}

/// Linear-scan counting of a sorted array with frequency bounds.
pub fn scan_count(arr: &KmerArray, lower: u64, upper: u64) -> Histogram {
    Histogram::from_runs(scan_runs(arr), lower, upper)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn one_word(keys: &[u64]) -> KmerArray {
        let mut arr = KmerArray::new(1, false);
        for &k in keys {
            arr.push(PackedKmer::from_words([k, 0]), None);
        }
        arr
    }

    fn keys_of(arr: &KmerArray) -> Vec<u64> {
        (0..arr.len()).map(|i| arr.key(i).words[0]).collect()
    }

    #[test]
    fn tiny_arrays_sort() {
        for kind in [SorterKind::InPlace, SorterKind::OutOfPlace] {
            let mut arr = one_word(&[3, 1, 2]);
            sort_with(&mut arr, kind, 1);
            assert_eq!(keys_of(&arr), vec![1, 2, 3]);

            let mut sorted = one_word(&[1, 2, 3]);
            sort_with(&mut sorted, kind, 1);
            assert_eq!(keys_of(&sorted), vec![1, 2, 3]);

            let mut equal = one_word(&[7, 7, 7, 7]);
            sort_with(&mut equal, kind, 1);
            assert_eq!(keys_of(&equal), vec![7, 7, 7, 7]);

            let mut empty = one_word(&[]);
            sort_with(&mut empty, kind, 1);
            assert_eq!(empty.len(), 0);
        }
    }

    #[test]
    fn payload_travels_with_key() {
        for kind in [SorterKind::InPlace, SorterKind::OutOfPlace] {
            let mut arr = KmerArray::new(2, true);
            let keys = [9u64, 2, 9, 5, 2, 2];
            for (i, &k) in keys.iter().enumerate() {
                arr.push(
                    PackedKmer::from_words([k, k.wrapping_mul(3)]),
                    Some(Extension {
                        read_id: i as u32,
                        pos: (k * 10) as u32,
                    }),
                );
            }
            sort_with(&mut arr, kind, 1);
            assert!(arr.is_sorted());
            for i in 0..arr.len() {
                let key = arr.key(i);
                let ext = arr.extension(i).unwrap();
                // pos was derived from the key at push time.
                assert_eq!(ext.pos as u64, key.words[0] * 10);
            }
        }
    }

    #[test]
    fn select_honors_budget_and_override() {
        let live = 1000 * 16;
        assert_eq!(
            select_sorter(1000, 16, Some(10 * live as u64), SorterChoice::Auto),
            SorterKind::OutOfPlace
        );
        assert_eq!(
            select_sorter(1000, 16, Some(live as u64 + live as u64 / 20), SorterChoice::Auto),
            SorterKind::InPlace
        );
        assert_eq!(
            select_sorter(1000, 16, None, SorterChoice::Auto),
            SorterKind::OutOfPlace
        );
        assert_eq!(
            select_sorter(1000, 16, Some(10 * live as u64), SorterChoice::InPlace),
            SorterKind::InPlace
        );
        assert_eq!(
            select_sorter(1000, 16, Some(0), SorterChoice::OutOfPlace),
            SorterKind::OutOfPlace
        );
    }

    #[test]
    fn scan_count_example() {
        // [A, A, B, C, C, C] with bounds [2, 50].
        let mut arr = one_word(&[1, 1, 2, 3, 3, 3]);
        sort_inplace(&mut arr, 1);
        let h = scan_count(&arr, 2, 50);
        assert_eq!(
            h.by_frequency,
            [(1u64, 1u64), (2, 1), (3, 1)].into_iter().collect()
        );
        assert_eq!(h.total_instances, 6);
        assert_eq!(h.distinct, 3);
        let got: Vec<(u64, u64)> = h.filtered.iter().map(|r| (r.kmer.words[0], r.count)).collect();
        assert_eq!(got, vec![(1, 2), (3, 3)]);
    }

    #[test]
    fn scan_count_empty() {
        let arr = one_word(&[]);
        let h = scan_count(&arr, 2, 50);
        assert!(h.by_frequency.is_empty());
        assert!(h.filtered.is_empty());
        assert_eq!(h.total_instances, 0);
    }

    fn hash_map_counts(keys: &[[u64; 2]]) -> std::collections::HashMap<[u64; 2], u64> {
        let mut m = std::collections::HashMap::new();
        for &k in keys {
            *m.entry(k).or_insert(0) += 1;
        }
        m
    }

    proptest! {
        #[test]
        fn backends_match_comparison_sort(
            keys in proptest::collection::vec((any::<u64>(), 0u64..4), 0..600),
        ) {
            // Two-word keys, second word from a small set to force ties.
            let reference: Vec<[u64; 2]> = {
                let mut v: Vec<[u64; 2]> = keys.iter().map(|&(a, b)| [a, b]).collect();
                v.sort_unstable();
                v
            };
            for kind in [SorterKind::InPlace, SorterKind::OutOfPlace] {
                let mut arr = KmerArray::new(2, false);
                for &(a, b) in &keys {
                    arr.push(PackedKmer::from_words([a, b]), None);
                }
                sort_with(&mut arr, kind, 2);
                let got: Vec<[u64; 2]> = (0..arr.len()).map(|i| arr.key(i).words).collect();
                prop_assert_eq!(&got, &reference);
            }
        }

        #[test]
        fn scan_matches_hash_map(counts in proptest::collection::vec(0u64..50, 0..40)) {
            // Build a multiset with known multiplicities.
            let mut arr = KmerArray::new(1, false);
            let mut raw = Vec::new();
            for (i, &c) in counts.iter().enumerate() {
                for _ in 0..c {
                    arr.push(PackedKmer::from_words([i as u64, 0]), None);
                    raw.push([i as u64, 0]);
                }
            }
            sort_outofplace(&mut arr);
            let h = scan_count(&arr, 1, u64::MAX);
            let oracle = hash_map_counts(&raw);
            prop_assert_eq!(h.filtered.len(), oracle.len());
            for run in &h.filtered {
                prop_assert_eq!(oracle[&run.kmer.words], run.count);
            }
            prop_assert_eq!(h.total_instances, raw.len() as u64);
        }
    }
}
