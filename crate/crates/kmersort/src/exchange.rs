//! Simulated multi-rank all-to-all exchange in fixed-size rounds.
//!
//! Every round moves exactly `ranks * ranks * batch_size` bytes: one padded
//! batch per (source, destination) pair, mirroring a regular collective
//! rather than a variable-sized one. Batches are planned by packing records
//! greedily in queue order; a record never spans two rounds. The runner
//! executes prepare/communicate/parse either sequentially or as a
//! three-stage pipeline over two swapped buffer pairs; both produce
//! byte-identical deliveries.

use crate::error::{Error, Result};
use crate::wire::{pad_into, SENTINEL_BYTES};

#[derive(Debug, Clone, Copy)]
pub struct Topology {
    pub ranks: usize,
    pub batch_size: usize,
}

impl Topology {
    pub fn new(ranks: usize, batch_size: usize) -> Self {
        assert!(ranks >= 1);
        assert!(batch_size > SENTINEL_BYTES);
        Topology { ranks, batch_size }
    }

    #[inline]
    fn stream_count(&self) -> usize {
        self.ranks * self.ranks
    }
}

/// Byte accounting for one exchange. Padding includes the per-batch
/// sentinel, so `payload_bytes + padding_bytes` is exactly the moved volume.
#[derive(Debug, Clone, Default, serde::Serialize)]
pub struct ExchangeStats {
    pub rounds: usize,
    pub payload_bytes: u64,
    pub padding_bytes: u64,
    /// Payload bytes received per destination rank.
    pub per_dest_bytes: Vec<u64>,
}

impl ExchangeStats {
    pub fn merge(&mut self, other: &ExchangeStats) {
        self.rounds += other.rounds;
        self.payload_bytes += other.payload_bytes;
        self.padding_bytes += other.padding_bytes;
        if self.per_dest_bytes.len() < other.per_dest_bytes.len() {
            self.per_dest_bytes.resize(other.per_dest_bytes.len(), 0);
        }
        for (d, b) in other.per_dest_bytes.iter().enumerate() {
            self.per_dest_bytes[d] += b;
        }
    }
}

/// Stateful record serializer used by the planner. Cloning must snapshot the
/// state so a tentative encode can be discarded when the record does not fit
/// the open batch; `reset` clears inter-record state at batch boundaries.
pub trait RecordEncoder<R>: Clone {
    fn reset(&mut self);
    fn encode(&mut self, rec: &R, out: &mut Vec<u8>);
}

impl RecordEncoder<crate::supermer::Supermer> for crate::wire::SupermerEncoder {
    fn reset(&mut self) {
        crate::wire::SupermerEncoder::reset(self)
    }

    fn encode(&mut self, rec: &crate::supermer::Supermer, out: &mut Vec<u8>) {
        crate::wire::SupermerEncoder::encode(self, rec, out)
    }
}

/// Encoder for fixed-size (k-mer, count) records.
#[derive(Debug, Clone)]
pub struct KmerListEncoder {
    pub width: usize,
}

impl RecordEncoder<crate::wire::KmerListRecord> for KmerListEncoder {
    fn reset(&mut self) {}

    fn encode(&mut self, rec: &crate::wire::KmerListRecord, out: &mut Vec<u8>) {
        crate::wire::encode_kmerlist_record(rec, self.width, out)
    }
}

/// Per-round unpadded payloads for every (source, destination) stream, plus
/// the per-stream encoders in their final state (their counters feed the run
/// report).
pub struct RoundPlan<E> {
    pub rounds: usize,
    /// Indexed `src * ranks + dst`, then round.
    pub payloads: Vec<Vec<Vec<u8>>>,
    pub encoders: Vec<E>,
}

/// Pack each stream's records into rounds in order. All ranks run the global
/// maximum round count; streams with less to say send padding.
pub fn plan_rounds<R, E: RecordEncoder<R>>(
    queues: &[Vec<R>],
    topo: &Topology,
    make_encoder: impl Fn() -> E,
) -> Result<RoundPlan<E>> {
    assert_eq!(queues.len(), topo.stream_count());
    let usable = topo.batch_size - SENTINEL_BYTES;
    let mut payloads = Vec::with_capacity(queues.len());
    let mut encoders = Vec::with_capacity(queues.len());
    let mut scratch = Vec::new();
    for queue in queues {
        let mut stream_rounds: Vec<Vec<u8>> = Vec::new();
        let mut current = Vec::new();
        let mut enc = make_encoder();
        for rec in queue {
            scratch.clear();
            let mut trial = enc.clone();
            trial.encode(rec, &mut scratch);
            if current.len() + scratch.len() <= usable {
                current.extend_from_slice(&scratch);
                enc = trial;
                continue;
            }
            if current.is_empty() {
                return Err(Error::Internal(format!(
                    "record of {} bytes exceeds batch capacity {}",
                    scratch.len(),
                    usable
                )));
            }
            stream_rounds.push(std::mem::take(&mut current));
            enc.reset();
            scratch.clear();
            let mut retry = enc.clone();
            retry.encode(rec, &mut scratch);
            if scratch.len() > usable {
                return Err(Error::Internal(format!(
                    "record of {} bytes exceeds batch capacity {}",
                    scratch.len(),
                    usable
                )));
            }
            current.extend_from_slice(&scratch);
            enc = retry;
        }
        if !current.is_empty() {
            stream_rounds.push(current);
        }
        payloads.push(stream_rounds);
        encoders.push(enc);
    }
    // At least one (possibly all-padding) round: ranks always handshake.
    let rounds = payloads.iter().map(Vec::len).max().unwrap_or(0).max(1);
    Ok(RoundPlan {
        rounds,
        payloads,
        encoders,
    })
}

/// Stats are fully determined by the plan.
pub fn stats_of_plan<E>(plan: &RoundPlan<E>, topo: &Topology) -> ExchangeStats {
    let mut per_dest_bytes = vec![0u64; topo.ranks];
    let mut payload_bytes = 0u64;
    for src in 0..topo.ranks {
        for (dst, dest_bytes) in per_dest_bytes.iter_mut().enumerate() {
            let sent: u64 = plan.payloads[src * topo.ranks + dst]
                .iter()
                .map(|p| p.len() as u64)
                .sum();
            *dest_bytes += sent;
            payload_bytes += sent;
        }
    }
    let moved = plan.rounds as u64 * topo.stream_count() as u64 * topo.batch_size as u64;
    ExchangeStats {
        rounds: plan.rounds,
        payload_bytes,
        padding_bytes: moved - payload_bytes,
        per_dest_bytes,
    }
}

static EMPTY_PAYLOAD: &[u8] = &[];

fn prepare_round<E>(plan: &RoundPlan<E>, topo: &Topology, round: usize, out: &mut [u8]) {
    let b = topo.batch_size;
    for stream in 0..topo.stream_count() {
        let payload = plan.payloads[stream]
            .get(round)
            .map_or(EMPTY_PAYLOAD, Vec::as_slice);
        pad_into(payload, &mut out[stream * b..(stream + 1) * b])
            .expect("planner never overfills a batch");
    }
}

/// Deliver send batches, laid out [src][dst], into the receive buffer laid
/// out [dst][src].
fn communicate(topo: &Topology, send: &[u8], recv: &mut [u8]) {
    let (r, b) = (topo.ranks, topo.batch_size);
    for src in 0..r {
        for dst in 0..r {
            let from = (src * r + dst) * b;
            let to = (dst * r + src) * b;
            recv[to..to + b].copy_from_slice(&send[from..from + b]);
        }
    }
}

fn parse_round<F>(topo: &Topology, recv: &[u8], round: usize, sink: &mut F) -> Result<()>
where
    F: FnMut(usize, usize, usize, &[u8]) -> Result<()>,
{
    let (r, b) = (topo.ranks, topo.batch_size);
    for dst in 0..r {
        for src in 0..r {
            let at = (dst * r + src) * b;
            sink(round, dst, src, &recv[at..at + b])?;
        }
    }
    Ok(())
}

/// Run the exchange. The sink sees, per round, every destination's batches
/// in source order; enabling `overlap` runs prepare/communicate/parse of
/// adjacent rounds concurrently over double buffers without changing any
/// delivered byte.
pub fn run_exchange<E, F>(
    topo: &Topology,
    plan: &RoundPlan<E>,
    overlap: bool,
    mut sink: F,
) -> Result<ExchangeStats>
where
    E: Sync,
    F: FnMut(usize, usize, usize, &[u8]) -> Result<()>,
{
    let buf_len = topo.stream_count() * topo.batch_size;
    let rounds = plan.rounds;
    if !overlap {
        let mut send = vec![0u8; buf_len];
        let mut recv = vec![0u8; buf_len];
        for round in 0..rounds {
            prepare_round(plan, topo, round, &mut send);
            communicate(topo, &send, &mut recv);
            parse_round(topo, &recv, round, &mut sink)?;
        }
        return Ok(stats_of_plan(plan, topo));
    }

    let mut send_cur = vec![0u8; buf_len];
    let mut send_prev = vec![0u8; buf_len];
    let mut recv_cur = vec![0u8; buf_len];
    let mut recv_prev = vec![0u8; buf_len];
    // Step t prepares round t, communicates round t-1, parses round t-2;
    // each stage touches a different buffer of the two pairs.
    for t in 0..rounds + 2 {
        let parse_result = std::thread::scope(|scope| {
            if t < rounds {
                scope.spawn(|| prepare_round(plan, topo, t, &mut send_cur));
            }
            if t >= 1 && t - 1 < rounds {
                scope.spawn(|| communicate(topo, &send_prev, &mut recv_prev));
            }
            if t >= 2 && t - 2 < rounds {
                parse_round(topo, &recv_cur, t - 2, &mut sink)
            } else {
                Ok(())
            }
        });
        parse_result?;
        std::mem::swap(&mut send_cur, &mut send_prev);
        std::mem::swap(&mut recv_cur, &mut recv_prev);
    }
    Ok(stats_of_plan(plan, topo))
}
