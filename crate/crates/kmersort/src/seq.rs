//! DNA sequence model: 2-bit base codes, packed k-mers and m-mers,
//! reverse complement / canonical form, and per-read k-mer extraction.
//!
//! Packing is most-significant-first: the leftmost base of a k-mer is the
//! most significant 2-bit group of word 0, and unused low bit positions of
//! the last word are zero. Comparing the word sequence as integers is then
//! the same as comparing the base strings lexicographically, which is what
//! lets a radix sort over the words double as a k-mer sort.

/// Longest supported k-mer; two 64-bit words hold up to 63 bases with k
/// fixed per run.
pub const MAX_K: usize = 63;

/// Longest supported m-mer (must fit one word as a base-4 numeral).
pub const MAX_M: usize = 31;

/// 2-bit code for one base: A=0, C=1, G=2, T=3 (case-insensitive).
#[inline]
pub fn encode_base(b: u8) -> Option<u8> {
    match b {
        b'A' | b'a' => Some(0),
        b'C' | b'c' => Some(1),
        b'G' | b'g' => Some(2),
        b'T' | b't' => Some(3),
        _ => None,
    }
}

/// Inverse of [`encode_base`], always upper case.
#[inline]
pub fn decode_base(code: u8) -> u8 {
    debug_assert!(code < 4);
    b"ACGT"[code as usize]
}

/// Per-instance provenance of a k-mer: which read it came from and the
/// 0-based offset of its first base in that read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Extension {
    pub read_id: u32,
    pub pos: u32,
}

/// One sanitized input fragment: only A/C/G/T bases, dense 0-based id.
#[derive(Debug, Clone)]
pub struct Read {
    pub id: u32,
    pub bases: Vec<u8>,
}

impl Read {
    pub fn len(&self) -> usize {
        self.bases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bases.is_empty()
    }
}

/// Fixed-width 2-bit-per-base k-mer key. Word 0 holds the leftmost bases;
/// derived `Ord` over the words equals lexicographic order of the bases.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct PackedKmer {
    pub words: [u64; 2],
}

impl PackedKmer {
    #[inline]
    pub fn from_words(words: [u64; 2]) -> Self {
        PackedKmer { words }
    }

    /// The k bases read as a base-4 numeral (leftmost base most
    /// significant). Used by tests and the text dump, not by the sort.
    pub fn value(&self, k: usize) -> u128 {
        debug_assert!((1..=MAX_K).contains(&k));
        let wide = ((self.words[0] as u128) << 64) | self.words[1] as u128;
        wide >> (128 - 2 * k)
    }
}

/// Packs, unpacks and transforms k-mers for one fixed k.
#[derive(Debug, Clone, Copy)]
pub struct KmerCodec {
    k: usize,
    width: usize,
}

impl KmerCodec {
    pub fn new(k: usize) -> Option<Self> {
        if (1..=MAX_K).contains(&k) {
            Some(KmerCodec {
                k,
                width: k.div_ceil(32),
            })
        } else {
            None
        }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.k
    }

    /// Number of 64-bit words per key.
    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    /// Pack exactly k 2-bit codes, leftmost first.
    pub fn pack_codes(&self, codes: &[u8]) -> PackedKmer {
        assert_eq!(codes.len(), self.k);
        let mut words = [0u64; 2];
        for (i, &c) in codes.iter().enumerate() {
            debug_assert!(c < 4);
            let word = i / 32;
            let shift = 2 * (31 - (i % 32));
            words[word] |= (c as u64) << shift;
        }
        PackedKmer { words }
    }

    /// Pack exactly k ASCII bases; `None` on any non-ACGT byte.
    pub fn pack_bases(&self, bases: &[u8]) -> Option<PackedKmer> {
        assert_eq!(bases.len(), self.k);
        let mut words = [0u64; 2];
        for (i, &b) in bases.iter().enumerate() {
            let c = encode_base(b)?;
            let word = i / 32;
            let shift = 2 * (31 - (i % 32));
            words[word] |= (c as u64) << shift;
        }
        Some(PackedKmer { words })
    }

    /// Decode back to ASCII bases.
    pub fn unpack(&self, km: PackedKmer) -> Vec<u8> {
        self.unpack_codes(km).iter().map(|&c| decode_base(c)).collect()
    }

    /// Decode back to 2-bit codes.
    pub fn unpack_codes(&self, km: PackedKmer) -> Vec<u8> {
        (0..self.k)
            .map(|i| {
                let word = i / 32;
                let shift = 2 * (31 - (i % 32));
                ((km.words[word] >> shift) & 3) as u8
            })
            .collect()
    }

    /// Reverse the base order and complement each base (A<->T, C<->G).
    /// An involution: `rc(rc(x)) == x`.
    #[inline]
    pub fn reverse_complement(&self, km: PackedKmer) -> PackedKmer {
        let wide = ((km.words[0] as u128) << 64) | km.words[1] as u128;
        // Complementing is XOR 3 per code; on the padding it leaves junk
        // that the final left shift pushes back out.
        let rev = reverse_codes_u128(!wide) << (128 - 2 * self.k);
        PackedKmer {
            words: [(rev >> 64) as u64, rev as u64],
        }
    }

    /// The smaller of a k-mer and its reverse complement under the
    /// word-order (= lexicographic) comparison.
    #[inline]
    pub fn canonical(&self, km: PackedKmer) -> PackedKmer {
        km.min(self.reverse_complement(km))
    }

    /// Shift one base out on the left and append `code` on the right.
    #[inline]
    pub fn roll(&self, km: PackedKmer, code: u8) -> PackedKmer {
        debug_assert!(code < 4);
        let [w0, w1] = km.words;
        if self.width == 1 {
            PackedKmer {
                words: [(w0 << 2) | ((code as u64) << (2 * (32 - self.k))), 0],
            }
        } else {
            PackedKmer {
                words: [
                    (w0 << 2) | (w1 >> 62),
                    (w1 << 2) | ((code as u64) << (2 * (64 - self.k))),
                ],
            }
        }
    }

    /// All k-mers of a read, left to right, with their provenance.
    /// Empty when the read is shorter than k.
    pub fn kmers_of_read<'a>(&self, read: &'a Read) -> KmerIter<'a> {
        KmerIter {
            codec: *self,
            read_id: read.id,
            bases: &read.bases,
            next_pos: 0,
            current: PackedKmer::default(),
        }
    }
}

/// Reverse the order of the 64 2-bit groups in a 128-bit value.
#[inline]
fn reverse_codes_u128(x: u128) -> u128 {
    let x = x.swap_bytes();
    let x = ((x & 0x0F0F0F0F0F0F0F0F0F0F0F0F0F0F0F0F) << 4)
        | ((x >> 4) & 0x0F0F0F0F0F0F0F0F0F0F0F0F0F0F0F0F);
    ((x & 0x33333333333333333333333333333333) << 2)
        | ((x >> 2) & 0x33333333333333333333333333333333)
}

/// Rolling iterator over `(PackedKmer, Extension)` pairs of one read.
pub struct KmerIter<'a> {
    codec: KmerCodec,
    read_id: u32,
    bases: &'a [u8],
    next_pos: usize,
    current: PackedKmer,
}

impl Iterator for KmerIter<'_> {
    type Item = (PackedKmer, Extension);

    fn next(&mut self) -> Option<Self::Item> {
        let k = self.codec.k;
        if self.next_pos + k > self.bases.len() {
            return None;
        }
        let pos = self.next_pos;
        if pos == 0 {
            let codes: Vec<u8> = self.bases[..k]
                .iter()
                .map(|&b| encode_base(b).expect("read is sanitized"))
                .collect();
            self.current = self.codec.pack_codes(&codes);
        } else {
            let incoming = encode_base(self.bases[pos + k - 1]).expect("read is sanitized");
            self.current = self.codec.roll(self.current, incoming);
        }
        self.next_pos += 1;
        Some((
            self.current,
            Extension {
                read_id: self.read_id,
                pos: pos as u32,
            },
        ))
    }
}

/// 2-bit packed base run, 4 bases per byte, leftmost base in the top two
/// bits of byte 0. The byte layout doubles as the wire layout.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PackedSeq {
    data: Vec<u8>,
    len: usize,
}

impl PackedSeq {
    /// Pack a sanitized ASCII base slice.
    pub fn pack(bases: &[u8]) -> PackedSeq {
        let mut data = vec![0u8; bases.len().div_ceil(4)];
        for (i, &b) in bases.iter().enumerate() {
            let c = encode_base(b).expect("bases are sanitized");
            data[i / 4] |= c << (2 * (3 - (i % 4)));
        }
        PackedSeq {
            data,
            len: bases.len(),
        }
    }

    pub fn from_codes(codes: &[u8]) -> PackedSeq {
        let mut data = vec![0u8; codes.len().div_ceil(4)];
        for (i, &c) in codes.iter().enumerate() {
            debug_assert!(c < 4);
            data[i / 4] |= c << (2 * (3 - (i % 4)));
        }
        PackedSeq {
            data,
            len: codes.len(),
        }
    }

    /// Reconstruct from raw wire bytes. Fails if trailing pad bits are
    /// nonzero or the buffer size does not match `len`.
    pub fn from_wire(data: Vec<u8>, len: usize) -> Option<PackedSeq> {
        if data.len() != len.div_ceil(4) {
            return None;
        }
        if !len.is_multiple_of(4) {
            let pad_bits = 2 * (4 - len % 4);
            if data[data.len() - 1] & ((1u8 << pad_bits) - 1) != 0 {
                return None;
            }
        }
        Some(PackedSeq { data, len })
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    #[inline]
    pub fn bytes(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn code_at(&self, i: usize) -> u8 {
        debug_assert!(i < self.len);
        (self.data[i / 4] >> (2 * (3 - (i % 4)))) & 3
    }

    pub fn codes(&self) -> impl Iterator<Item = u8> + '_ {
        (0..self.len).map(move |i| self.code_at(i))
    }

    pub fn to_ascii(&self) -> Vec<u8> {
        self.codes().map(decode_base).collect()
    }

    /// Repack a sub-range of bases.
    pub fn slice(&self, start: usize, len: usize) -> PackedSeq {
        assert!(start + len <= self.len);
        let codes: Vec<u8> = (start..start + len).map(|i| self.code_at(i)).collect();
        PackedSeq::from_codes(&codes)
    }
}
