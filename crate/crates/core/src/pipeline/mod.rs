//! The parallel engine.
//!
//! A *lane* is one extractor instance: a single channel for raw and CMAC
//! extraction, a channel pair for two-source extraction. Workers each own a
//! fixed subset of lanes and push one chunk per lane per round into that
//! lane's bounded queue. The interleaver drains the queues in fixed lane
//! order and writes unit `u` of every lane before unit `u + 1`, so the
//! output depends only on the configuration, never on the worker count
//! or scheduling.

mod rates;

pub use rates::{bits_per_sample, ratio_to_f64, table_rate_models, theoretical_rate, RateModel};

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::ops::ControlFlow;
use std::str::FromStr;
use std::sync::mpsc::{sync_channel, Receiver, SyncSender};
use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::adc::AdcConfig;
use crate::error::{config, Error, Result};
use crate::extractors::{
    derive_cmac_key, extract_cmac_codes, extract_raw_codes, BitBuf, CmacState, TwoSourceExtractor,
    CMAC_INPUT_BYTES, CODES_PER_INPUT, DEFAULT_OUT_BITS, DEFAULT_RAW_BYTE_ENTROPY,
};
use crate::source::{sample_range, ChannelModel};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExtractorKind {
    Raw,
    Cmac,
    TwoSource,
}

impl ExtractorKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            Self::Raw => "raw",
            Self::Cmac => "cmac",
            Self::TwoSource => "two-source",
        }
    }
}

impl fmt::Display for ExtractorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ExtractorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "raw" => Ok(Self::Raw),
            "cmac" => Ok(Self::Cmac),
            "two-source" | "two_source" => Ok(Self::TwoSource),
            other => config(format!(
                "unknown extractor {other:?}; expected raw, cmac or two-source"
            )),
        }
    }
}

pub const DEFAULT_BLOCK_SAMPLES: usize = 4800;
pub const DEFAULT_QUEUE_DEPTH: usize = 4;

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub channels: Vec<ChannelModel>,
    pub adc: AdcConfig,
    pub extractor: ExtractorKind,
    /// Samples per channel per round.
    pub block_samples: usize,
    /// Channel-id pairs for two-source extraction. Empty pairs consecutive
    /// channels in id order, leaving an odd one out unused.
    pub pairing: Vec<(u16, u16)>,
    pub workers: usize,
    /// Chunks buffered per lane before a worker blocks.
    pub queue_depth: usize,
    /// Initial CMAC keys by channel id; missing channels derive one from
    /// their seed.
    pub cmac_keys: BTreeMap<u16, u128>,
    pub cmac_out_bits: u32,
    /// Min-entropy of one 128-bit CMAC input block.
    pub cmac_input_entropy: f64,
}

impl PipelineConfig {
    pub fn new(channels: Vec<ChannelModel>, adc: AdcConfig, extractor: ExtractorKind) -> Self {
        let workers = channels.len().max(1);
        Self {
            channels,
            adc,
            extractor,
            block_samples: DEFAULT_BLOCK_SAMPLES,
            pairing: Vec::new(),
            workers,
            queue_depth: DEFAULT_QUEUE_DEPTH,
            cmac_keys: BTreeMap::new(),
            cmac_out_bits: DEFAULT_OUT_BITS,
            cmac_input_entropy: 16.0 * DEFAULT_RAW_BYTE_ENTROPY,
        }
    }

    /// Pairs actually used by two-source extraction, sorted by first id.
    pub fn effective_pairing(&self) -> Vec<(u16, u16)> {
        let mut pairs = if self.pairing.is_empty() {
            let mut ids: Vec<u16> = self.channels.iter().map(|c| c.channel_id()).collect();
            ids.sort_unstable();
            ids.chunks_exact(2).map(|p| (p[0], p[1])).collect()
        } else {
            self.pairing.clone()
        };
        pairs.sort_unstable();
        pairs
    }

    pub fn cmac_key_for(&self, channel: &ChannelModel) -> u128 {
        self.cmac_keys
            .get(&channel.channel_id())
            .copied()
            .unwrap_or_else(|| derive_cmac_key(channel.seed()))
    }

    /// Output units per lane per round.
    pub fn units_per_round(&self) -> usize {
        match self.extractor {
            ExtractorKind::Raw => self.block_samples,
            ExtractorKind::Cmac => self.block_samples / CMAC_INPUT_BYTES,
            ExtractorKind::TwoSource => self.block_samples / CODES_PER_INPUT,
        }
    }

    /// Bits in one output unit.
    pub fn unit_bits(&self) -> u32 {
        match self.extractor {
            ExtractorKind::Raw => 8,
            ExtractorKind::Cmac => self.cmac_out_bits,
            ExtractorKind::TwoSource => 1,
        }
    }

    pub fn rate_model(&self) -> Result<RateModel> {
        let lanes = self.lanes()?.len() as u64;
        Ok(RateModel::new(
            self.adc.sample_rate().round() as u64,
            lanes,
            bits_per_sample(self.extractor, self.cmac_out_bits),
        ))
    }

    pub fn validate(&self) -> Result<()> {
        self.lanes().map(|_| ())
    }

    fn channel(&self, id: u16) -> Result<&ChannelModel> {
        self.channels
            .iter()
            .find(|c| c.channel_id() == id)
            .ok_or_else(|| Error::Config(format!("pairing names unknown channel {id}")))
    }

    fn lanes(&self) -> Result<Vec<Lane>> {
        if self.channels.is_empty() {
            return config("pipeline needs at least one channel");
        }
        if self.block_samples == 0 {
            return config("block_samples must be positive");
        }
        if self.workers == 0 {
            return config("worker count must be positive");
        }
        if self.queue_depth == 0 {
            return config("queue depth must be positive");
        }
        let mut ids: Vec<u16> = self.channels.iter().map(|c| c.channel_id()).collect();
        ids.sort_unstable();
        if ids.windows(2).any(|w| w[0] == w[1]) {
            return config("channel ids must be unique");
        }
        let mut channels = self.channels.clone();
        channels.sort_by_key(|c| c.channel_id());

        match self.extractor {
            ExtractorKind::Raw => Ok(channels.into_iter().map(Lane::Raw).collect()),
            ExtractorKind::Cmac => {
                if !self.block_samples.is_multiple_of(CMAC_INPUT_BYTES) {
                    return config(format!(
                        "cmac needs block_samples to be a multiple of {CMAC_INPUT_BYTES}, got {}",
                        self.block_samples
                    ));
                }
                channels
                    .into_iter()
                    .map(|c| {
                        let state = CmacState::new(
                            self.cmac_key_for(&c),
                            self.cmac_out_bits,
                            self.cmac_input_entropy,
                        )?;
                        Ok(Lane::Cmac(c, state))
                    })
                    .collect()
            }
            ExtractorKind::TwoSource => {
                if !self.block_samples.is_multiple_of(CODES_PER_INPUT) {
                    return config(format!(
                        "two-source needs block_samples to be a multiple of {CODES_PER_INPUT}, got {}",
                        self.block_samples
                    ));
                }
                let pairs = self.effective_pairing();
                if pairs.is_empty() {
                    return config("two-source extraction needs at least two channels");
                }
                let mut used = Vec::new();
                pairs
                    .into_iter()
                    .map(|(a, b)| {
                        TwoSourceExtractor::new(a, b)?;
                        for id in [a, b] {
                            if used.contains(&id) {
                                return config(format!(
                                    "channel {id} appears in more than one pair"
                                ));
                            }
                            used.push(id);
                        }
                        Ok(Lane::TwoSource(*self.channel(a)?, *self.channel(b)?))
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone)]
enum Lane {
    Raw(ChannelModel),
    Cmac(ChannelModel, CmacState),
    TwoSource(ChannelModel, ChannelModel),
}

#[derive(Debug)]
enum Chunk {
    Bytes(Vec<u8>),
    Words(Vec<u64>),
    Bits(Vec<u8>),
}

impl Lane {
    fn codes(model: &ChannelModel, adc: &AdcConfig, round: u64, n: usize) -> Result<Vec<u16>> {
        let block = sample_range(model, round * n as u64, n);
        Ok(adc.digitize(&block)?.codes)
    }

    fn produce(&mut self, round: u64, n: usize, adc: &AdcConfig) -> Result<Chunk> {
        match self {
            Lane::Raw(m) => Ok(Chunk::Bytes(extract_raw_codes(&Self::codes(
                m, adc, round, n,
            )?)?)),
            Lane::Cmac(m, state) => {
                let codes = Self::codes(m, adc, round, n)?;
                Ok(Chunk::Words(extract_cmac_codes(&codes, state)?))
            }
            Lane::TwoSource(a, b) => {
                let ex = TwoSourceExtractor::new(a.channel_id(), b.channel_id())?;
                let ca = Self::codes(a, adc, round, n)?;
                let cb = Self::codes(b, adc, round, n)?;
                Ok(Chunk::Bits(ex.extract_block(&ca, &cb)?))
            }
        }
    }

    fn channel_count(&self) -> u64 {
        match self {
            Lane::TwoSource(..) => 2,
            _ => 1,
        }
    }
}

fn interleave(chunks: &[Chunk], units: usize, unit_bits: u32, out: &mut BitBuf) {
    for u in 0..units {
        for chunk in chunks {
            match chunk {
                Chunk::Bytes(b) => out.push_byte(b[u]),
                Chunk::Words(w) => out.push_bits(w[u], unit_bits),
                Chunk::Bits(b) => out.push_bit(b[u] != 0),
            }
        }
    }
}

/// Accounting for one pipeline run.
#[derive(Debug, Clone, PartialEq)]
pub struct ThroughputReport {
    pub extractor: ExtractorKind,
    pub lanes: usize,
    pub workers: usize,
    pub rounds: u64,
    pub wall_time: Duration,
    pub total_bits: u64,
    pub bits_per_lane: Vec<u64>,
    /// ADC samples consumed, summed over channels.
    pub samples_consumed: u64,
    pub measured_bps: f64,
    pub theoretical_bps: f64,
}

/// Runs the lanes on `cfg.workers` threads, handing each completed round
/// to `consume` in lane order; stops after `max_rounds` or when `consume`
/// breaks.
fn drive<F>(cfg: &PipelineConfig, max_rounds: Option<u64>, mut consume: F) -> Result<(u64, usize)>
where
    F: FnMut(u64, &[Chunk]) -> Result<ControlFlow<()>>,
{
    let lanes = cfg.lanes()?;
    let n_lanes = lanes.len();
    let workers = cfg.workers.min(n_lanes);
    let n = cfg.block_samples;
    let adc = cfg.adc;

    let mut txs: Vec<Option<SyncSender<Result<Chunk>>>> = Vec::with_capacity(n_lanes);
    let mut rxs: Vec<Receiver<Result<Chunk>>> = Vec::with_capacity(n_lanes);
    for _ in 0..n_lanes {
        let (tx, rx) = sync_channel(cfg.queue_depth);
        txs.push(Some(tx));
        rxs.push(rx);
    }
    let mut assignments: Vec<Vec<(Lane, SyncSender<Result<Chunk>>)>> =
        (0..workers).map(|_| Vec::new()).collect();
    for (i, lane) in lanes.into_iter().enumerate() {
        let tx = txs[i].take().expect("one sender per lane");
        assignments[i % workers].push((lane, tx));
    }

    std::thread::scope(|scope| {
        for mut owned in assignments {
            scope.spawn(move || {
                let mut round = 0u64;
                while max_rounds.is_none_or(|m| round < m) {
                    for (lane, tx) in owned.iter_mut() {
                        let chunk = lane.produce(round, n, &adc);
                        let failed = chunk.is_err();
                        if tx.send(chunk).is_err() || failed {
                            return;
                        }
                    }
                    round += 1;
                }
            });
        }

        let mut round = 0u64;
        let mut chunks = Vec::with_capacity(n_lanes);
        let result = loop {
            if max_rounds.is_some_and(|m| round >= m) {
                break Ok(round);
            }
            chunks.clear();
            for rx in &rxs {
                match rx.recv() {
                    Ok(Ok(c)) => chunks.push(c),
                    Ok(Err(e)) => return Err(e),
                    Err(_) => return Err(Error::Config("pipeline worker exited early".into())),
                }
            }
            match consume(round, &chunks) {
                Ok(ControlFlow::Continue(())) => round += 1,
                Ok(ControlFlow::Break(())) => break Ok(round + 1),
                Err(e) => break Err(e),
            }
        };
        // Dropping the receivers releases any worker blocked on a full queue.
        drop(rxs);
        result.map(|r| (r, n_lanes))
    })
}

fn report(
    cfg: &PipelineConfig,
    rounds: u64,
    n_lanes: usize,
    total_bits: u64,
    wall: Duration,
) -> Result<ThroughputReport> {
    let lanes = cfg.lanes()?;
    let per_lane = rounds * cfg.units_per_round() as u64 * u64::from(cfg.unit_bits());
    let channels_used: u64 = lanes.iter().map(Lane::channel_count).sum();
    let secs = wall.as_secs_f64();
    Ok(ThroughputReport {
        extractor: cfg.extractor,
        lanes: n_lanes,
        workers: cfg.workers.min(n_lanes),
        rounds,
        wall_time: wall,
        total_bits,
        bits_per_lane: vec![per_lane; n_lanes],
        samples_consumed: rounds * cfg.block_samples as u64 * channels_used,
        measured_bps: if secs > 0.0 {
            total_bits as f64 / secs
        } else {
            0.0
        },
        theoretical_bps: ratio_to_f64(theoretical_rate(&cfg.rate_model()?)),
    })
}

/// Runs `rounds` rounds and returns the interleaved stream.
pub fn run_pipeline(cfg: &PipelineConfig, rounds: u64) -> Result<(BitBuf, ThroughputReport)> {
    let (units, unit_bits) = (cfg.units_per_round(), cfg.unit_bits());
    let mut out = BitBuf::new();
    let start = Instant::now();
    let (done, n_lanes) = drive(cfg, Some(rounds), |_, chunks| {
        interleave(chunks, units, unit_bits, &mut out);
        Ok(ControlFlow::Continue(()))
    })?;
    let wall = start.elapsed();
    let rep = report(cfg, done, n_lanes, out.bit_len(), wall)?;
    Ok((out, rep))
}

/// Streams the interleaved output into `sink` as packed bytes; the final
/// partial byte is zero-padded. `rounds == None` runs until `sink` fails.
pub fn run_pipeline_to<W: Write>(
    cfg: &PipelineConfig,
    rounds: Option<u64>,
    sink: &mut W,
) -> Result<ThroughputReport> {
    let (units, unit_bits) = (cfg.units_per_round(), cfg.unit_bits());
    let mut pending = BitBuf::new();
    let mut total = 0u64;
    let start = Instant::now();
    let (done, n_lanes) = drive(cfg, rounds, |_, chunks| {
        let before = pending.bit_len();
        interleave(chunks, units, unit_bits, &mut pending);
        total += pending.bit_len() - before;
        sink.write_all(&pending.take_full_bytes())?;
        Ok(ControlFlow::Continue(()))
    })?;
    if !pending.is_empty() {
        sink.write_all(pending.as_bytes())?;
    }
    sink.flush()?;
    report(cfg, done, n_lanes, total, start.elapsed())
}

/// Hands each round's interleaved output to `on_round` as it completes.
pub fn run_pipeline_each<F>(
    cfg: &PipelineConfig,
    rounds: Option<u64>,
    mut on_round: F,
) -> Result<ThroughputReport>
where
    F: FnMut(&BitBuf) -> Result<()>,
{
    let (units, unit_bits) = (cfg.units_per_round(), cfg.unit_bits());
    let mut total = 0u64;
    let start = Instant::now();
    let (done, n_lanes) = drive(cfg, rounds, |_, chunks| {
        let mut buf = BitBuf::new();
        interleave(chunks, units, unit_bits, &mut buf);
        total += buf.bit_len();
        on_round(&buf)?;
        Ok(ControlFlow::Continue(()))
    })?;
    report(cfg, done, n_lanes, total, start.elapsed())
}

/// Runs at full speed for at least `duration` and reports measured against
/// theoretical throughput. Output is counted, not kept.
pub fn benchmark_throughput(cfg: &PipelineConfig, duration: Duration) -> Result<ThroughputReport> {
    let (units, unit_bits) = (cfg.units_per_round(), cfg.unit_bits());
    let per_round = (units as u64) * u64::from(unit_bits);
    let mut total = 0u64;
    let start = Instant::now();
    let (done, n_lanes) = drive(cfg, None, |_, chunks| {
        total += per_round * chunks.len() as u64;
        Ok(if start.elapsed() >= duration {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        })
    })?;
    report(cfg, done, n_lanes, total, start.elapsed())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::adc::lsb8;

    fn channels(n: u16) -> Vec<ChannelModel> {
        (1..=n)
            .map(|i| ChannelModel::default_for(i, u64::from(i)))
            .collect()
    }

    fn adc() -> AdcConfig {
        AdcConfig::new(14.8, 55e6).unwrap()
    }

    #[test]
    fn single_raw_channel_is_the_channel_stream() {
        let mut cfg = PipelineConfig::new(channels(1), adc(), ExtractorKind::Raw);
        cfg.block_samples = 100;
        let (out, rep) = run_pipeline(&cfg, 3).unwrap();
        let m = &cfg.channels[0];
        let expect: Vec<u8> = adc()
            .digitize(&sample_range(m, 0, 300))
            .unwrap()
            .codes
            .iter()
            .map(|&c| lsb8(c).unwrap())
            .collect();
        assert_eq!(out.as_bytes(), &expect[..]);
        assert_eq!(rep.total_bits, 2400);
    }

    #[test]
    fn raw_round_robin_order() {
        let mut cfg = PipelineConfig::new(channels(7), adc(), ExtractorKind::Raw);
        cfg.block_samples = 1;
        let (out, _) = run_pipeline(&cfg, 2).unwrap();
        let bytes = out.as_bytes();
        assert_eq!(bytes.len(), 14);
        for (k, m) in cfg.channels.iter().enumerate() {
            let codes = adc().digitize(&sample_range(m, 0, 2)).unwrap().codes;
            assert_eq!(bytes[k], lsb8(codes[0]).unwrap());
            assert_eq!(bytes[7 + k], lsb8(codes[1]).unwrap());
        }
    }

    #[test]
    fn worker_count_does_not_change_output() {
        for kind in [
            ExtractorKind::Raw,
            ExtractorKind::Cmac,
            ExtractorKind::TwoSource,
        ] {
            let mut cfg = PipelineConfig::new(channels(7), adc(), kind);
            cfg.block_samples = 96;
            let outputs: Vec<BitBuf> = [1, 2, 3, 7, 16]
                .iter()
                .map(|&w| {
                    cfg.workers = w;
                    run_pipeline(&cfg, 5).unwrap().0
                })
                .collect();
            assert!(outputs.windows(2).all(|w| w[0] == w[1]), "{kind}");
        }
    }

    #[test]
    fn accounting_is_exact() {
        let mut cfg = PipelineConfig::new(channels(7), adc(), ExtractorKind::Cmac);
        cfg.block_samples = 160;
        let (out, rep) = run_pipeline(&cfg, 4).unwrap();
        assert_eq!(out.bit_len(), 7 * 4 * 63 * 10);
        assert_eq!(rep.samples_consumed, 7 * 4 * 160);
        assert_eq!(
            out.bit_len() as u128 * 16,
            63 * u128::from(rep.samples_consumed)
        );

        cfg.extractor = ExtractorKind::TwoSource;
        cfg.block_samples = 30;
        let (out, rep) = run_pipeline(&cfg, 4).unwrap();
        assert_eq!(rep.lanes, 3);
        assert_eq!(out.bit_len(), 4 * 10 * 3);
        assert_eq!(rep.samples_consumed, 4 * 30 * 6);
        assert_eq!(out.bit_len() * 6, rep.samples_consumed);
        assert!(rep.bits_per_lane.iter().all(|&b| b == 40));
    }

    #[test]
    fn config_invariants() {
        let mut cfg = PipelineConfig::new(channels(4), adc(), ExtractorKind::Cmac);
        cfg.block_samples = 20;
        assert!(cfg.validate().is_err());
        cfg.extractor = ExtractorKind::TwoSource;
        cfg.block_samples = 20;
        assert!(cfg.validate().is_err());
        cfg.block_samples = 21;
        assert!(cfg.validate().is_ok());
        cfg.pairing = vec![(1, 1)];
        assert!(cfg.validate().is_err());
        cfg.pairing = vec![(1, 2), (2, 3)];
        assert!(cfg.validate().is_err());
        cfg.pairing = vec![(1, 9)];
        assert!(cfg.validate().is_err());
        cfg.pairing = vec![(3, 4), (1, 2)];
        assert!(cfg.validate().is_ok());
        assert_eq!(cfg.effective_pairing(), vec![(1, 2), (3, 4)]);

        let one = PipelineConfig::new(channels(1), adc(), ExtractorKind::TwoSource);
        assert!(one.validate().is_err());
        let mut dup = PipelineConfig::new(channels(2), adc(), ExtractorKind::Raw);
        dup.channels[1] = ChannelModel::default_for(1, 9);
        assert!(dup.validate().is_err());
    }

    #[test]
    fn default_pairing_leaves_the_seventh_channel_out() {
        let cfg = PipelineConfig::new(channels(7), adc(), ExtractorKind::TwoSource);
        assert_eq!(cfg.effective_pairing(), vec![(1, 2), (3, 4), (5, 6)]);
    }

    #[test]
    fn streaming_sink_matches_in_memory_run() {
        let mut cfg = PipelineConfig::new(channels(3), adc(), ExtractorKind::Cmac);
        cfg.block_samples = 48;
        let (mem, _) = run_pipeline(&cfg, 3).unwrap();
        let mut sink = Vec::new();
        let rep = run_pipeline_to(&cfg, Some(3), &mut sink).unwrap();
        assert_eq!(sink, mem.as_bytes());
        assert_eq!(rep.total_bits, mem.bit_len());

        let mut joined = BitBuf::new();
        let rep = run_pipeline_each(&cfg, Some(3), |round| {
            joined.extend(round);
            Ok(())
        })
        .unwrap();
        assert_eq!(joined, mem);
        assert_eq!(rep.rounds, 3);
    }

    #[test]
    fn benchmark_counts_whole_rounds() {
        let mut cfg = PipelineConfig::new(channels(2), adc(), ExtractorKind::Raw);
        cfg.block_samples = 64;
        let rep = benchmark_throughput(&cfg, Duration::from_millis(50)).unwrap();
        assert!(rep.rounds >= 1);
        assert_eq!(rep.total_bits, rep.rounds * 2 * 64 * 8);
        assert_eq!(rep.total_bits % 8, 0);
        assert_eq!(rep.theoretical_bps, 55e6 * 2.0 * 8.0);
    }
}
