//! M-mer scoring and the sliding-window minimizer over consecutive k-mers.
//!
//! The score of an m-mer is an avalanche hash of its packed value; the same
//! hash, reduced mod the task count, is the destination of every k-mer whose
//! minimizer it is. Scoring and destination share one hash so that k-mers
//! with equal value always land on the same task, even when several m-mers
//! of a window tie on score.

use std::collections::VecDeque;

use crate::seq::{encode_base, Read};

/// An m-mer packed as a base-4 numeral, leftmost base most significant.
/// For m <= 31 the value is below 4^m.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Mmer(pub u64);

/// An m-mer with its score and start offset in the read.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ScoredMmer {
    pub mmer: Mmer,
    pub score: u64,
    pub pos: u32,
}

impl ScoredMmer {
    /// Comparison key. Position is deliberately excluded: among equal
    /// (score, m-mer) entries the window keeps the leftmost.
    #[inline]
    fn key(&self) -> (u64, u64) {
        (self.score, self.mmer.0)
    }
}

/// 64-bit avalanche finalizer of the MurmurHash3 family.
#[inline]
pub fn fmix64(mut x: u64) -> u64 {
    x ^= x >> 33;
    x = x.wrapping_mul(0xff51afd7ed558ccd);
    x ^= x >> 33;
    x = x.wrapping_mul(0xc4ceb9fe1a85ec53);
    x ^= x >> 33;
    x
}

/// Score of an m-mer: the finalizer applied to `packed XOR seed`.
#[inline]
pub fn mmer_score(mm: Mmer, seed: u64) -> u64 {
    fmix64(mm.0 ^ seed)
}

/// Destination task of a minimizer score: the remainder mod the task count.
#[inline]
pub fn destination_task(score: u64, tasks: usize) -> usize {
    debug_assert!(tasks >= 1);
    (score % tasks as u64) as usize
}

/// Monotonic double-ended buffer of candidate minimizers.
///
/// Keys are non-decreasing front to back; inserting evicts strictly larger
/// keys from the back, so an entry enters and leaves at most once and the
/// front is always the current minimizer. Equal keys are kept, which makes
/// the front the leftmost occurrence.
#[derive(Debug, Default)]
pub struct MinimizerWindow {
    deque: VecDeque<ScoredMmer>,
    insertions: usize,
}

impl MinimizerWindow {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, entry: ScoredMmer) {
        while let Some(back) = self.deque.back() {
            if back.key() > entry.key() {
                self.deque.pop_back();
            } else {
                break;
            }
        }
        self.deque.push_back(entry);
        self.insertions += 1;
    }

    /// Drop front entries that start before `min_pos`. At most one entry can
    /// expire per single-step window advance.
    pub fn expire_before(&mut self, min_pos: u32) {
        while let Some(front) = self.deque.front() {
            if front.pos < min_pos {
                self.deque.pop_front();
            } else {
                break;
            }
        }
    }

    pub fn current(&self) -> Option<&ScoredMmer> {
        self.deque.front()
    }

    pub fn insertions(&self) -> usize {
        self.insertions
    }
}

/// Minimizer of every k-mer of a 2-bit code sequence, in k-mer order, under
/// an arbitrary score function. Entry `i` is the m-mer with minimal
/// (score, value) over start offsets `[i, i + k - m]`, leftmost on ties.
pub fn minimizers_of_codes_with<F: Fn(Mmer) -> u64>(
    codes: &[u8],
    k: usize,
    m: usize,
    score: F,
) -> Vec<ScoredMmer> {
    debug_assert!(m >= 1 && m < k && m <= crate::seq::MAX_M);
    if codes.len() < k {
        return Vec::new();
    }
    let num_kmers = codes.len() - k + 1;
    let mut out = Vec::with_capacity(num_kmers);
    let mut window = MinimizerWindow::new();
    let mask = (1u64 << (2 * m)) - 1;
    let mut value = 0u64;
    for (i, &c) in codes.iter().enumerate() {
        value = ((value << 2) | c as u64) & mask;
        if i + 1 < m {
            continue;
        }
        let pos = (i + 1 - m) as u32;
        let mm = Mmer(value);
        window.insert(ScoredMmer {
            mmer: mm,
            score: score(mm),
            pos,
        });
        // m-mer ending at i completes k-mer (i + 1 - k) last.
        if i + 1 >= k {
            let kmer_pos = (i + 1 - k) as u32;
            window.expire_before(kmer_pos);
            out.push(*window.current().expect("window holds >= 1 valid m-mer"));
        }
    }
    out
}

/// [`minimizers_of_codes_with`] under the production hash score.
pub fn minimizers_of_codes(codes: &[u8], k: usize, m: usize, seed: u64) -> Vec<ScoredMmer> {
    minimizers_of_codes_with(codes, k, m, |mm| mmer_score(mm, seed))
}

/// Per-k-mer minimizers of a sanitized read.
pub fn minimizers_of_read(read: &Read, k: usize, m: usize, seed: u64) -> Vec<ScoredMmer> {
    let codes: Vec<u8> = read
        .bases
        .iter()
        .map(|&b| encode_base(b).expect("read is sanitized"))
        .collect();
    minimizers_of_codes(&codes, k, m, seed)
}

/// Minimizer of a single k-long window of codes; a plain linear scan.
/// Receivers use it to recover the destination task of records from their
/// content alone.
pub fn window_minimizer(window: &[u8], m: usize, seed: u64) -> ScoredMmer {
    debug_assert!(window.len() >= m);
    let mask = (1u64 << (2 * m)) - 1;
    let mut value = 0u64;
    let mut best: Option<ScoredMmer> = None;
    for (i, &c) in window.iter().enumerate() {
        value = ((value << 2) | c as u64) & mask;
        if i + 1 < m {
            continue;
        }
        let mm = Mmer(value);
        let cand = ScoredMmer {
            mmer: mm,
            score: mmer_score(mm, seed),
            pos: (i + 1 - m) as u32,
        };
        if best.is_none_or(|b| cand.key() < b.key()) {
            best = Some(cand);
        }
    }
    best.expect("window holds >= 1 m-mer")
}

/// Destination task of the k-mer starting at offset 0 of `codes`.
pub fn task_of_first_kmer(codes: &[u8], k: usize, m: usize, seed: u64, tasks: usize) -> usize {
    destination_task(window_minimizer(&codes[..k], m, seed).score, tasks)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn finalizer_reference_values() {
        // Zero is a fixed point of the finalizer.
        assert_eq!(fmix64(0), 0);
        assert_eq!(mmer_score(Mmer(0), 0), 0);
        // Frozen from an independent big-integer implementation.
        assert_eq!(mmer_score(Mmer(1), 0), 0xb456bcfc34c2cb2c);
        assert_eq!(mmer_score(Mmer(27), 0), 0x7ed3adb081e15aec);
        assert_eq!(fmix64(12345), 0x17d2abfbf90baef9);
    }

    #[test]
    fn destination_is_remainder() {
        assert_eq!(destination_task(0, 8), 0);
        assert_eq!(destination_task(27, 4), 3);
    }

    #[test]
    fn destination_spread_is_near_uniform() {
        let tasks = 256;
        let n = 1_000_000u64;
        let mut buckets = vec![0u64; tasks];
        for i in 0..n {
            buckets[destination_task(fmix64(i), tasks)] += 1;
        }
        let expect = n as f64 / tasks as f64;
        for (t, &got) in buckets.iter().enumerate() {
            let rel = (got as f64 - expect).abs() / expect;
            assert!(rel < 0.05, "task {t}: {got} vs {expect}");
        }
    }

    #[test]
    fn single_distinct_mmer_window() {
        // "AAAAC", k=4, m=2: k-mer 0 sees only "AA" m-mers.
        let codes = [0u8, 0, 0, 0, 1];
        let mins = minimizers_of_codes(&codes, 4, 2, 0);
        assert_eq!(mins.len(), 2);
        assert_eq!(mins[0].mmer, Mmer(0));
        assert!(mins[0].pos <= 2);
        // Leftmost occurrence of the repeated m-mer wins.
        assert_eq!(mins[0].pos, 0);
    }

    #[test]
    fn synthetic_score_stream_window_minima() {
        // Five m-mers with distinct values scoring [5,3,4,1,2]; windows of
        // three m-mers (k=4, m=2) must yield minima [3,1,1].
        let codes = [0u8, 1, 2, 3, 0, 2];
        let mins = minimizers_of_codes_with(&codes, 4, 2, |mm| match mm.0 {
            0b0001 => 5, // pos 0
            0b0110 => 3, // pos 1
            0b1011 => 4, // pos 2
            0b1100 => 1, // pos 3
            0b0010 => 2, // pos 4
            _ => unreachable!(),
        });
        let got: Vec<u64> = mins.iter().map(|e| e.score).collect();
        assert_eq!(got, vec![3, 1, 1]);
    }

    /// Independent per-k-mer scan: min by (score, value), leftmost on ties.
    fn naive_minimizers<F: Fn(Mmer) -> u64>(
        codes: &[u8],
        k: usize,
        m: usize,
        score: &F,
    ) -> Vec<ScoredMmer> {
        let mut out = Vec::new();
        if codes.len() < k {
            return out;
        }
        for i in 0..=codes.len() - k {
            let mut best: Option<ScoredMmer> = None;
            for p in i..=i + k - m {
                let mut v = 0u64;
                for &c in &codes[p..p + m] {
                    v = (v << 2) | c as u64;
                }
                let mm = Mmer(v);
                let cand = ScoredMmer {
                    mmer: mm,
                    score: score(mm),
                    pos: p as u32,
                };
                if best.is_none_or(|b| cand.key() < b.key()) {
                    best = Some(cand);
                }
            }
            out.push(best.unwrap());
        }
        out
    }

    #[test]
    fn amortized_insertions_bounded_by_mmer_count() {
        let codes: Vec<u8> = (0..500u32).map(|i| (fmix64(i as u64) & 3) as u8).collect();
        let (k, m) = (31, 15);
        let mut window = MinimizerWindow::new();
        let mask = (1u64 << (2 * m)) - 1;
        let mut value = 0u64;
        for (i, &c) in codes.iter().enumerate() {
            value = ((value << 2) | c as u64) & mask;
            if i + 1 >= m {
                let mm = Mmer(value);
                window.insert(ScoredMmer {
                    mmer: mm,
                    score: mmer_score(mm, 0),
                    pos: (i + 1 - m) as u32,
                });
                if i + 1 >= k {
                    window.expire_before((i + 1 - k) as u32);
                }
            }
        }
        assert_eq!(window.insertions(), codes.len() - m + 1);
    }

    fn code_vec(len: std::ops::Range<usize>) -> impl Strategy<Value = Vec<u8>> {
        proptest::collection::vec(0u8..4, len)
    }

    proptest! {
        #[test]
        fn deque_matches_naive(codes in code_vec(31..200), seed in any::<u64>()) {
            let (k, m) = (31, 15);
            let score = |mm: Mmer| mmer_score(mm, seed);
            let fast = minimizers_of_codes(&codes, k, m, seed);
            let naive = naive_minimizers(&codes, k, m, &score);
            prop_assert_eq!(fast, naive);
        }

        #[test]
        fn deque_matches_naive_under_colliding_scores(codes in code_vec(20..120)) {
            // An 8-bit score forces frequent collisions between distinct
            // m-mers, exercising the lexicographic tie rule.
            let (k, m) = (11, 4);
            let score = |mm: Mmer| fmix64(mm.0) >> 56;
            let fast = minimizers_of_codes_with(&codes, k, m, score);
            let naive = naive_minimizers(&codes, k, m, &score);
            prop_assert_eq!(fast, naive);
        }

        #[test]
        fn window_minimizer_agrees(codes in code_vec(31..64), seed in any::<u64>()) {
            let (k, m) = (31, 15);
            let all = minimizers_of_codes(&codes, k, m, seed);
            for i in 0..all.len() {
                prop_assert_eq!(window_minimizer(&codes[i..i + k], m, seed), {
                    let mut shifted = all[i];
                    shifted.pos -= i as u32; // window-relative offset
                    shifted
                });
            }
        }
    }
}
