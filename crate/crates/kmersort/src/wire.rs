//! Bit-exact wire formats for the exchange: supermer records with
//! delta-compressed extension blocks, fixed-size (k-mer, count) records for
//! heavy tasks, and fixed-size batch padding.
//!
//! Supermer record: `len` as u16 little-endian (0 is the end-of-payload
//! sentinel), `ceil(len/4)` bytes of bases (4 per byte, leftmost base in the
//! top two bits), then, when extensions are enabled, an extension block:
//! one tag byte (bit 0 = read_id sent as a signed one-byte delta, bit 1 =
//! position likewise), followed by each field as either the delta byte or a
//! full u32 little-endian value. Deltas are relative to the previous record
//! of the same stream; encoder and decoder state resets per batch, so every
//! batch is independently decodable and the first record of a batch always
//! carries tag 0 with full fields.
//!
//! Kmer-list record: the key's words as u64 little-endian, then the count as
//! u32 little-endian. A count of 0 never occurs in a record, so the zero
//! padding after the last record doubles as the terminator.

use crate::error::{Error, Result};
use crate::seq::{Extension, PackedKmer, PackedSeq};
use crate::supermer::Supermer;

/// Bytes of the end-of-payload sentinel (a zero length field).
pub const SENTINEL_BYTES: usize = 2;

/// Worst-case bytes of an extension block: tag + full read_id + full pos.
pub const EXT_BLOCK_FULL_BYTES: usize = 9;

const TAG_READ_ID_DELTA: u8 = 0b01;
const TAG_POS_DELTA: u8 = 0b10;

/// Upper bound on the encoded size of a supermer record, independent of
/// delta state.
pub fn supermer_record_max_bytes(len: usize, extensions: bool) -> usize {
    2 + len.div_ceil(4) + if extensions { EXT_BLOCK_FULL_BYTES } else { 0 }
}

/// Largest supermer base count whose record is guaranteed to fit a batch of
/// `batch_size` bytes together with the sentinel. `None` when not even a
/// k-base record fits.
pub fn max_supermer_bases(batch_size: usize, k: usize, extensions: bool) -> Option<usize> {
    let overhead = 2 + SENTINEL_BYTES + if extensions { EXT_BLOCK_FULL_BYTES } else { 0 };
    let max = 4usize.checked_mul(batch_size.checked_sub(overhead)?)?;
    let max = max.min(u16::MAX as usize);
    (max >= k).then_some(max)
}

pub fn kmerlist_record_bytes(width: usize) -> usize {
    8 * width + 4
}

/// Stateful supermer record encoder; one per (sender, destination) stream,
/// reset at every batch boundary.
#[derive(Debug, Clone)]
pub struct SupermerEncoder {
    extensions: bool,
    prev: Option<(u32, u32)>,
    /// Bytes the extension blocks would have used without delta compression.
    pub ext_bytes_full: u64,
    /// Bytes the extension blocks actually used.
    pub ext_bytes_encoded: u64,
}

impl SupermerEncoder {
    pub fn new(extensions: bool) -> Self {
        SupermerEncoder {
            extensions,
            prev: None,
            ext_bytes_full: 0,
            ext_bytes_encoded: 0,
        }
    }

    pub fn reset(&mut self) {
        self.prev = None;
    }

    pub fn encode(&mut self, sm: &Supermer, out: &mut Vec<u8>) {
        debug_assert!(!sm.is_empty() && sm.len() <= u16::MAX as usize);
        out.extend_from_slice(&(sm.len() as u16).to_le_bytes());
        out.extend_from_slice(sm.bases.bytes());
        if self.extensions {
            let (read_id, pos) = (sm.ext.read_id, sm.ext.pos);
            let start = out.len();
            match self.prev {
                None => {
                    out.push(0);
                    out.extend_from_slice(&read_id.to_le_bytes());
                    out.extend_from_slice(&pos.to_le_bytes());
                }
                Some((prev_read, prev_pos)) => {
                    let dr = read_id as i64 - prev_read as i64;
                    let dp = pos as i64 - prev_pos as i64;
                    let r_small = i8::try_from(dr).is_ok();
                    let p_small = i8::try_from(dp).is_ok();
                    let mut tag = 0u8;
                    if r_small {
                        tag |= TAG_READ_ID_DELTA;
                    }
                    if p_small {
                        tag |= TAG_POS_DELTA;
                    }
                    out.push(tag);
                    if r_small {
                        out.push(dr as i8 as u8);
                    } else {
                        out.extend_from_slice(&read_id.to_le_bytes());
                    }
                    if p_small {
                        out.push(dp as i8 as u8);
                    } else {
                        out.extend_from_slice(&pos.to_le_bytes());
                    }
                }
            }
            self.ext_bytes_encoded += (out.len() - start) as u64;
            self.ext_bytes_full += EXT_BLOCK_FULL_BYTES as u64;
            self.prev = Some((read_id, pos));
        }
    }
}

/// One decoded supermer record. The destination task is not on the wire;
/// receivers recover it from the record's first k-mer.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DecodedSupermer {
    pub bases: PackedSeq,
    pub ext: Option<Extension>,
}

/// Encode a whole stream with a fresh encoder; no sentinel appended.
pub fn encode_stream(records: &[Supermer], extensions: bool) -> Vec<u8> {
    let mut enc = SupermerEncoder::new(extensions);
    let mut out = Vec::new();
    for sm in records {
        enc.encode(sm, &mut out);
    }
    out
}

/// Decode records until the sentinel or the end of the buffer. `src`/`dst`
/// only label errors.
pub fn decode_stream(
    bytes: &[u8],
    k: usize,
    extensions: bool,
    src: usize,
    dst: usize,
) -> Result<Vec<DecodedSupermer>> {
    let err = |offset: usize, msg: String| Error::Wire {
        src,
        dst,
        offset,
        msg,
    };
    let mut out = Vec::new();
    let mut prev: Option<(u32, u32)> = None;
    let mut at = 0usize;
    loop {
        if at == bytes.len() {
            break;
        }
        if bytes.len() - at < 2 {
            return Err(err(at, "truncated length field".into()));
        }
        let len = u16::from_le_bytes([bytes[at], bytes[at + 1]]) as usize;
        let record_start = at;
        at += 2;
        if len == 0 {
            break;
        }
        if len < k {
            return Err(err(record_start, format!("record length {len} below k={k}")));
        }
        let nbytes = len.div_ceil(4);
        if bytes.len() - at < nbytes {
            return Err(err(record_start, "truncated base block".into()));
        }
        let bases = PackedSeq::from_wire(bytes[at..at + nbytes].to_vec(), len)
            .ok_or_else(|| err(record_start, "nonzero padding bits in base block".into()))?;
        at += nbytes;
        let ext = if extensions {
            if at == bytes.len() {
                return Err(err(record_start, "truncated extension block".into()));
            }
            let tag = bytes[at];
            at += 1;
            if tag & !(TAG_READ_ID_DELTA | TAG_POS_DELTA) != 0 {
                return Err(err(record_start, format!("invalid extension tag {tag:#04x}")));
            }
            let mut field = |small: bool, prev_val: Option<u32>| -> Result<u32> {
                if small {
                    let prev_val = prev_val
                        .ok_or_else(|| err(record_start, "delta without previous record".into()))?;
                    if at == bytes.len() {
                        return Err(err(record_start, "truncated extension delta".into()));
                    }
                    let d = bytes[at] as i8 as i64;
                    at += 1;
                    u32::try_from(prev_val as i64 + d)
                        .map_err(|_| err(record_start, "extension delta out of range".into()))
                } else {
                    if bytes.len() - at < 4 {
                        return Err(err(record_start, "truncated extension field".into()));
                    }
                    let v = u32::from_le_bytes(bytes[at..at + 4].try_into().unwrap());
                    at += 4;
                    Ok(v)
                }
            };
            let read_id = field(tag & TAG_READ_ID_DELTA != 0, prev.map(|p| p.0))?;
            let pos = field(tag & TAG_POS_DELTA != 0, prev.map(|p| p.1))?;
            prev = Some((read_id, pos));
            Some(Extension { read_id, pos })
        } else {
            None
        };
        out.push(DecodedSupermer { bases, ext });
    }
    Ok(out)
}

/// Fixed-size (k-mer, count) tuple for pre-aggregated heavy tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct KmerListRecord {
    pub kmer: PackedKmer,
    pub count: u32,
}

pub fn encode_kmerlist_record(rec: &KmerListRecord, width: usize, out: &mut Vec<u8>) {
    debug_assert!(rec.count >= 1);
    for w in 0..width {
        out.extend_from_slice(&rec.kmer.words[w].to_le_bytes());
    }
    out.extend_from_slice(&rec.count.to_le_bytes());
}

pub fn encode_kmerlist_stream(records: &[KmerListRecord], width: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(records.len() * kmerlist_record_bytes(width));
    for rec in records {
        encode_kmerlist_record(rec, width, &mut out);
    }
    out
}

/// Decode fixed-size records until a zero count (padding) or the buffer
/// runs short of a whole record.
pub fn decode_kmerlist_stream(
    bytes: &[u8],
    width: usize,
    src: usize,
    dst: usize,
) -> Result<Vec<KmerListRecord>> {
    let size = kmerlist_record_bytes(width);
    let mut out = Vec::new();
    let mut at = 0usize;
    while bytes.len() - at >= size {
        let count = u32::from_le_bytes(bytes[at + 8 * width..at + size].try_into().unwrap());
        if count == 0 {
            return Ok(out);
        }
        let mut words = [0u64; 2];
        for (w, word) in words.iter_mut().enumerate().take(width) {
            *word = u64::from_le_bytes(bytes[at + 8 * w..at + 8 * (w + 1)].try_into().unwrap());
        }
        out.push(KmerListRecord {
            kmer: PackedKmer::from_words(words),
            count,
        });
        at += size;
    }
    // Leftover bytes must be pure padding (sentinel + zeros).
    if bytes[at..].iter().any(|&b| b != 0) {
        return Err(Error::Wire {
            src,
            dst,
            offset: at,
            msg: "trailing non-padding bytes after kmer-list records".into(),
        });
    }
    Ok(out)
}

/// Write `payload`, the sentinel, and zero fill into `out` (one whole
/// batch). Returns the padding byte count, sentinel included.
pub fn pad_into(payload: &[u8], out: &mut [u8]) -> Result<usize> {
    if payload.len() + SENTINEL_BYTES > out.len() {
        return Err(Error::Internal(format!(
            "batch overflow: payload {} + sentinel > batch {}",
            payload.len(),
            out.len()
        )));
    }
    out[..payload.len()].copy_from_slice(payload);
    out[payload.len()..].fill(0);
    Ok(out.len() - payload.len())
}

/// [`pad_into`] returning a freshly allocated batch of `batch_size` bytes.
pub fn pad_batch(payload: &[u8], batch_size: usize) -> Result<Vec<u8>> {
    let mut out = vec![0u8; batch_size];
    pad_into(payload, &mut out)?;
    Ok(out)
}
