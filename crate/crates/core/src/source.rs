//! Homodyne vacuum-noise source model.
//!
//! Each channel's analog output is `q + e`: `q ~ N(0, sigma_q2)` is the
//! vacuum quadrature and `e ~ N(0, sigma_e2)` the detector's electronic
//! noise. Samples are addressed by a global index, so any block of a
//! channel's stream can be generated independently of the others.

use std::f64::consts::TAU;
use std::io::{self, Read, Write};

use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{domain, format, Result};

/// u32 words of ChaCha keystream consumed per analog sample (two u64 draws).
const WORDS_PER_SAMPLE: u128 = 4;

/// Keystream id for the sample stream; other ids are free for derived keys.
pub(crate) const SAMPLE_STREAM: u64 = 0;

/// Quantum-to-classical noise ratio in decibels.
pub fn qcnr_db(sigma_q2: f64, sigma_e2: f64) -> Result<f64> {
    if !(sigma_q2 > 0.0 && sigma_q2.is_finite()) || !(sigma_e2 > 0.0 && sigma_e2.is_finite()) {
        return domain(format!(
            "QCNR needs positive finite variances, got sigma_q2={sigma_q2}, sigma_e2={sigma_e2}"
        ));
    }
    Ok(10.0 * (sigma_q2 / sigma_e2).log10())
}

/// Quantum variance from the LO-on (`sigma_m2`) and LO-off (`sigma_e2`)
/// measured variances.
pub fn quantum_variance(sigma_m2: f64, sigma_e2: f64) -> Result<f64> {
    if !(sigma_e2 >= 0.0) || !(sigma_m2 > sigma_e2) || !sigma_m2.is_finite() {
        return domain(format!(
            "no measurable quantum signal: sigma_m2={sigma_m2} must exceed sigma_e2={sigma_e2} >= 0"
        ));
    }
    Ok(sigma_m2 - sigma_e2)
}

/// Noise parameters of one homodyne channel.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChannelModel {
    channel_id: u16,
    sigma_q2: f64,
    sigma_e2: f64,
    lo_power_ref: f64,
    seed: u64,
}

impl ChannelModel {
    pub fn new(
        channel_id: u16,
        sigma_q2: f64,
        sigma_e2: f64,
        lo_power_ref: f64,
        seed: u64,
    ) -> Result<Self> {
        if !(sigma_q2 > 0.0 && sigma_q2.is_finite()) {
            return domain(format!(
                "channel {channel_id}: sigma_q2 must be > 0, got {sigma_q2}"
            ));
        }
        if !(sigma_e2 > 0.0 && sigma_e2.is_finite()) {
            return domain(format!(
                "channel {channel_id}: sigma_e2 must be > 0, got {sigma_e2}"
            ));
        }
        if !(lo_power_ref > 0.0 && lo_power_ref.is_finite()) {
            return domain(format!(
                "channel {channel_id}: lo_power_ref must be > 0, got {lo_power_ref}"
            ));
        }
        Ok(Self {
            channel_id,
            sigma_q2,
            sigma_e2,
            lo_power_ref,
            seed,
        })
    }

    /// The 10 dB operating point (sigma_q2 = 10, sigma_e2 = 1, 1 mW LO).
    pub fn default_for(channel_id: u16, seed: u64) -> Self {
        Self {
            channel_id,
            sigma_q2: 10.0,
            sigma_e2: 1.0,
            lo_power_ref: 1.0,
            seed,
        }
    }

    pub fn channel_id(&self) -> u16 {
        self.channel_id
    }

    pub fn sigma_q2(&self) -> f64 {
        self.sigma_q2
    }

    pub fn sigma_e2(&self) -> f64 {
        self.sigma_e2
    }

    /// Total measured variance `sigma_q2 + sigma_e2`.
    pub fn sigma_m2(&self) -> f64 {
        self.sigma_q2 + self.sigma_e2
    }

    pub fn lo_power_ref(&self) -> f64 {
        self.lo_power_ref
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Configured QCNR. Fails for an LO-off model (`sigma_q2 == 0`).
    pub fn qcnr_db(&self) -> Result<f64> {
        qcnr_db(self.sigma_q2, self.sigma_e2)
    }

    /// Rescales the vacuum variance linearly with LO power; the electronic
    /// floor is untouched. `power == 0` gives the LO-off model.
    pub fn scale_with_power(&self, power_mw: f64) -> Result<Self> {
        if !(power_mw >= 0.0) || !power_mw.is_finite() {
            return domain(format!("LO power must be finite and >= 0, got {power_mw}"));
        }
        Ok(Self {
            sigma_q2: self.sigma_q2 * (power_mw / self.lo_power_ref),
            ..*self
        })
    }

    pub(crate) fn rng(&self, stream: u64) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(stream);
        rng
    }
}

/// A run of consecutive analog samples from one channel.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalogBlock {
    pub channel_id: u16,
    /// Global index of `samples[0]` in the channel stream.
    pub start_index: u64,
    pub samples: Vec<f64>,
}

impl AnalogBlock {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn mean(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().sum::<f64>() / self.samples.len() as f64
    }

    /// Unbiased sample variance.
    pub fn variance(&self) -> f64 {
        let n = self.samples.len();
        if n < 2 {
            return 0.0;
        }
        let m = self.mean();
        self.samples.iter().map(|v| (v - m) * (v - m)).sum::<f64>() / (n - 1) as f64
    }

    /// Little-endian f64 dump.
    pub fn write_le<W: Write>(&self, mut w: W) -> io::Result<()> {
        for v in &self.samples {
            w.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }
}

/// Decodes a little-endian f64 dump produced by [`AnalogBlock::write_le`].
pub fn decode_analog_le(bytes: &[u8]) -> Result<Vec<f64>> {
    if !bytes.len().is_multiple_of(8) {
        return format(format!(
            "analog dump length {} is not a multiple of 8 bytes",
            bytes.len()
        ));
    }
    Ok(bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("chunk of 8")))
        .collect())
}

/// Reads an analog dump from a reader.
pub fn read_analog_le<R: Read>(mut r: R) -> Result<Vec<f64>> {
    let mut buf = Vec::new();
    r.read_to_end(&mut buf)?;
    decode_analog_le(&buf)
}

#[inline]
fn unit_open(x: u64) -> f64 {
    // (0, 1): the top 53 bits plus a half-ulp offset, never 0.
    ((x >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64)
}

/// Samples `[start, start + n)` of a channel's stream.
///
/// Each sample consumes two 64-bit draws which a Box-Muller step turns
/// into the independent pair `(q, e)`; the keystream position is a pure
/// function of the sample index.
pub fn sample_range(model: &ChannelModel, start: u64, n: usize) -> AnalogBlock {
    let mut rng = model.rng(SAMPLE_STREAM);
    rng.set_word_pos(u128::from(start) * WORDS_PER_SAMPLE);
    let sq = model.sigma_q2.sqrt();
    let se = model.sigma_e2.sqrt();
    let samples = (0..n)
        .map(|_| {
            let u1 = unit_open(rng.next_u64());
            let u2 = unit_open(rng.next_u64());
            let r = (-2.0 * u1.ln()).sqrt();
            let (s, c) = (TAU * u2).sin_cos();
            sq * r * c + se * r * s
        })
        .collect();
    AnalogBlock {
        channel_id: model.channel_id,
        start_index: start,
        samples,
    }
}

/// Block index `block_index` of size `n`: samples `[block_index * n, (block_index + 1) * n)`.
pub fn sample_block_at(model: &ChannelModel, block_index: u64, n: usize) -> AnalogBlock {
    sample_range(model, block_index * n as u64, n)
}

/// Sequential reader over a channel stream; repeated calls continue where
/// the previous block ended.
#[derive(Debug, Clone)]
pub struct ChannelStream {
    model: ChannelModel,
    position: u64,
}

impl ChannelStream {
    pub fn new(model: ChannelModel) -> Self {
        Self { model, position: 0 }
    }

    pub fn starting_at(model: ChannelModel, position: u64) -> Self {
        Self { model, position }
    }

    pub fn model(&self) -> &ChannelModel {
        &self.model
    }

    pub fn position(&self) -> u64 {
        self.position
    }

    pub fn sample_block(&mut self, n: usize) -> AnalogBlock {
        let block = sample_range(&self.model, self.position, n);
        self.position += n as u64;
        block
    }
}
