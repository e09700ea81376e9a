//! Run configuration files.
//!
//! TOML with one `[adc]` table, one `[pipeline]` table and a `[[channel]]`
//! entry per homodyne channel:
//!
//! ```toml
//! [adc]
//! bits = 12
//! full_scale = 14.8      # omit to use the entropy-optimal range
//! sample_rate = 55e6
//!
//! [pipeline]
//! extractor = "cmac"     # raw | cmac | two-source
//! block_samples = 4800
//! pairing = [[1, 2], [3, 4], [5, 6]]
//!
//! [[channel]]
//! id = 1
//! sigma_q2 = 10.0
//! sigma_e2 = 1.0
//! seed = 1
//! cmac_key = "2b7e151628aed2a6abf7158809cf4f3c"   # optional
//! ```
//!
//! Every key except `channel.id` and `channel.seed` has a default.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::adc::{optimize_range, AdcConfig, ADC_BITS};
use crate::error::{config, Error, Result};
use crate::extractors::{DEFAULT_OUT_BITS, DEFAULT_RAW_BYTE_ENTROPY};
use crate::pipeline::{ExtractorKind, PipelineConfig, DEFAULT_BLOCK_SAMPLES, DEFAULT_QUEUE_DEPTH};
use crate::source::ChannelModel;

pub const DEFAULT_CHANNELS: u16 = 7;
pub const DEFAULT_SAMPLE_RATE: f64 = 55e6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AdcSection {
    #[serde(default = "default_bits")]
    pub bits: u8,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub full_scale: Option<f64>,
    #[serde(default = "default_sample_rate")]
    pub sample_rate: f64,
}

impl Default for AdcSection {
    fn default() -> Self {
        Self {
            bits: ADC_BITS,
            full_scale: None,
            sample_rate: DEFAULT_SAMPLE_RATE,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineSection {
    #[serde(default = "default_extractor")]
    pub extractor: ExtractorKind,
    #[serde(default = "default_block_samples")]
    pub block_samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    #[serde(default = "default_queue_depth")]
    pub queue_depth: usize,
    #[serde(default = "default_out_bits")]
    pub cmac_out_bits: u32,
    /// Min-entropy of one 16-byte CMAC input block, in bits.
    #[serde(default = "default_input_entropy")]
    pub cmac_input_entropy: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub pairing: Vec<[u16; 2]>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        Self {
            extractor: ExtractorKind::Raw,
            block_samples: DEFAULT_BLOCK_SAMPLES,
            workers: None,
            queue_depth: DEFAULT_QUEUE_DEPTH,
            cmac_out_bits: DEFAULT_OUT_BITS,
            cmac_input_entropy: default_input_entropy(),
            pairing: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSection {
    pub id: u16,
    #[serde(default = "default_sigma_q2")]
    pub sigma_q2: f64,
    #[serde(default = "default_sigma_e2")]
    pub sigma_e2: f64,
    #[serde(default = "default_lo_power")]
    pub lo_power_ref: f64,
    pub seed: u64,
    /// 128-bit initial CMAC key as 32 hex digits.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cmac_key: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub adc: AdcSection,
    #[serde(default)]
    pub pipeline: PipelineSection,
    #[serde(rename = "channel", default)]
    pub channels: Vec<ChannelSection>,
}

fn default_bits() -> u8 {
    ADC_BITS
}
fn default_sample_rate() -> f64 {
    DEFAULT_SAMPLE_RATE
}
fn default_extractor() -> ExtractorKind {
    ExtractorKind::Raw
}
fn default_block_samples() -> usize {
    DEFAULT_BLOCK_SAMPLES
}
fn default_queue_depth() -> usize {
    DEFAULT_QUEUE_DEPTH
}
fn default_out_bits() -> u32 {
    DEFAULT_OUT_BITS
}
fn default_input_entropy() -> f64 {
    16.0 * DEFAULT_RAW_BYTE_ENTROPY
}
fn default_sigma_q2() -> f64 {
    10.0
}
fn default_sigma_e2() -> f64 {
    1.0
}
fn default_lo_power() -> f64 {
    1.0
}

/// Seed of channel `id` (1-based) in a default configuration.
pub fn channel_seed(base: u64, id: u16) -> u64 {
    base.wrapping_add(u64::from(id) - 1)
}

pub fn parse_cmac_key(text: &str) -> Result<u128> {
    let bytes = hex::decode(text.trim())
        .map_err(|e| Error::Config(format!("cmac_key {text:?} is not hex: {e}")))?;
    let arr: [u8; 16] = bytes
        .try_into()
        .map_err(|_| Error::Config(format!("cmac_key {text:?} must be 32 hex digits")))?;
    Ok(u128::from_be_bytes(arr))
}

pub fn format_cmac_key(key: u128) -> String {
    hex::encode(key.to_be_bytes())
}

impl RunConfig {
    /// `n` channels at the 10 dB operating point with seeds `base, base+1, …`.
    pub fn default_channels(n: u16, base_seed: u64) -> Self {
        let channels = (1..=n)
            .map(|id| ChannelSection {
                id,
                sigma_q2: default_sigma_q2(),
                sigma_e2: default_sigma_e2(),
                lo_power_ref: default_lo_power(),
                seed: channel_seed(base_seed, id),
                cmac_key: None,
            })
            .collect();
        Self {
            adc: AdcSection::default(),
            pipeline: PipelineSection::default(),
            channels,
        }
    }

    pub fn parse(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.channels.is_empty() {
            return config("configuration defines no [[channel]] entries");
        }
        let mut seen = BTreeMap::new();
        for ch in &self.channels {
            if seen.insert(ch.id, ()).is_some() {
                return config(format!("channel id {} is defined twice", ch.id));
            }
            if i64::try_from(ch.seed).is_err() {
                return config(format!("channel {}: seed must be below 2^63", ch.id));
            }
            if let Some(k) = &ch.cmac_key {
                parse_cmac_key(k)?;
            }
        }
        self.channel_models()?;
        if let Some(fs) = self.adc.full_scale {
            AdcConfig::with_bits(self.adc.bits, fs, self.adc.sample_rate)?;
        } else {
            AdcConfig::with_bits(self.adc.bits, 1.0, self.adc.sample_rate)?;
        }
        Ok(())
    }

    pub fn channel_models(&self) -> Result<Vec<ChannelModel>> {
        self.channels
            .iter()
            .map(|c| ChannelModel::new(c.id, c.sigma_q2, c.sigma_e2, c.lo_power_ref, c.seed))
            .collect()
    }

    pub fn seeds(&self) -> Vec<u64> {
        self.channels.iter().map(|c| c.seed).collect()
    }

    /// Fills defaults that depend on the channels: the full-scale range
    /// (entropy-optimal for the lowest-numbered channel) and the worker
    /// count (one per channel). The result reproduces the same run without
    /// any recomputation.
    pub fn resolved(&self) -> Result<Self> {
        self.validate()?;
        let mut out = self.clone();
        if out.adc.full_scale.is_none() {
            let models = self.channel_models()?;
            let first = models
                .iter()
                .min_by_key(|m| m.channel_id())
                .expect("validated non-empty");
            out.adc.full_scale = Some(optimize_range(first, self.adc.bits)?.full_scale);
        }
        if out.pipeline.workers.is_none() {
            out.pipeline.workers = Some(self.channels.len());
        }
        Ok(out)
    }

    pub fn adc_config(&self) -> Result<AdcConfig> {
        match self.adc.full_scale {
            Some(fs) => AdcConfig::with_bits(self.adc.bits, fs, self.adc.sample_rate),
            None => self.resolved()?.adc_config(),
        }
    }

    pub fn pipeline_config(&self) -> Result<PipelineConfig> {
        let models = self.channel_models()?;
        let mut cfg = PipelineConfig::new(models, self.adc_config()?, self.pipeline.extractor);
        let p = &self.pipeline;
        cfg.block_samples = p.block_samples;
        cfg.workers = p.workers.unwrap_or(self.channels.len());
        cfg.queue_depth = p.queue_depth;
        cfg.cmac_out_bits = p.cmac_out_bits;
        cfg.cmac_input_entropy = p.cmac_input_entropy;
        cfg.pairing = p.pairing.iter().map(|&[a, b]| (a, b)).collect();
        for ch in &self.channels {
            if let Some(k) = &ch.cmac_key {
                cfg.cmac_keys.insert(ch.id, parse_cmac_key(k)?);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn documented_example_parses() {
        let text = r#"
[adc]
bits = 12
full_scale = 14.8
sample_rate = 55e6

[pipeline]
extractor = "cmac"
block_samples = 4800
pairing = [[1, 2], [3, 4], [5, 6]]

[[channel]]
id = 1
sigma_q2 = 10.0
sigma_e2 = 1.0
seed = 1
cmac_key = "2b7e151628aed2a6abf7158809cf4f3c"

[[channel]]
id = 2
seed = 2
"#;
        let cfg = RunConfig::parse(text).unwrap();
        assert_eq!(cfg.channels.len(), 2);
        assert_eq!(cfg.pipeline.extractor, ExtractorKind::Cmac);
        assert_eq!(cfg.channels[1].sigma_q2, 10.0);
        let p = cfg.pipeline_config().unwrap();
        assert_eq!(p.cmac_keys[&1], 0x2b7e151628aed2a6abf7158809cf4f3c);
        assert_eq!(p.workers, 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let text = "[adc]\nbits = 12\n\n[[channel]]\nid = 1\nseed = \"x\"\n";
        let msg = RunConfig::parse(text).unwrap_err().to_string();
        assert!(msg.contains("line 6"), "{msg}");
        let msg = RunConfig::parse("[adc]\nbitz = 3\n")
            .unwrap_err()
            .to_string();
        assert!(msg.contains("line 2"), "{msg}");
    }

    #[test]
    fn semantic_validation() {
        let base = RunConfig::default_channels(2, 1);
        let mut dup = base.clone();
        dup.channels[1].id = 1;
        assert!(dup.validate().is_err());
        let mut neg = base.clone();
        neg.channels[0].sigma_e2 = -1.0;
        assert!(neg.validate().is_err());
        let mut key = base.clone();
        key.channels[0].cmac_key = Some("abcd".into());
        assert!(key.validate().is_err());
        let mut big = base;
        big.channels[0].seed = u64::MAX;
        assert!(big.validate().is_err());
        assert!(RunConfig::parse("").is_err());
    }

    #[test]
    fn round_trips_through_toml() {
        let mut cfg = RunConfig::default_channels(7, 11);
        cfg.adc.full_scale = Some(14.75);
        cfg.pipeline.pairing = vec![[1, 2]];
        cfg.channels[3].cmac_key = Some(format_cmac_key(42));
        let text = cfg.to_toml().unwrap();
        assert_eq!(RunConfig::parse(&text).unwrap(), cfg);
    }

    #[test]
    fn default_seeds_are_consecutive() {
        let cfg = RunConfig::default_channels(7, 1);
        assert_eq!(cfg.seeds(), (1..=7).collect::<Vec<u64>>());
    }
}
