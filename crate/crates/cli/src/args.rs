use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use mqrng_core::entropy::{DEFAULT_SHUFFLES, DEFAULT_SHUFFLE_SEED};
use mqrng_core::extractors::{DEFAULT_OUT_BITS, DEFAULT_RAW_BYTE_ENTROPY};
use mqrng_core::io::{BitFormat, InputFormat, DEFAULT_CHANNELS};
use mqrng_core::pipeline::ExtractorKind;
use mqrng_core::stats::DEFAULT_MAX_LAG;

#[derive(Debug, Parser)]
#[command(
    name = "mqrng",
    version,
    about = "Multiplexed vacuum-noise QRNG toolkit"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Simulate channels and write per-channel code (and analog) files.
    Simulate(SimulateArgs),
    /// Apply an extractor to code files.
    Extract(ExtractArgs),
    /// Run the full multi-channel pipeline into one bitstream.
    Generate(GenerateArgs),
    /// Min-entropy estimate and IID permutation battery.
    Assess(AssessArgs),
    /// Statistical test subset on a bitstream.
    Test(TestArgs),
    /// Pairwise channel cross-correlation.
    Correlate(CorrelateArgs),
    /// Two-source extractor bias and input/output correlation.
    Strength(StrengthArgs),
    /// Measure pipeline throughput.
    Bench(BenchArgs),
    /// Theoretical generation rates.
    Rates(RatesArgs),
    /// Re-run a command from its manifest and compare output digests.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Simulate(_) => "simulate",
            Self::Extract(_) => "extract",
            Self::Generate(_) => "generate",
            Self::Assess(_) => "assess",
            Self::Test(_) => "test",
            Self::Correlate(_) => "correlate",
            Self::Strength(_) => "strength",
            Self::Bench(_) => "bench",
            Self::Rates(_) => "rates",
            Self::Replay(_) => "replay",
        }
    }
}

/// Where channel models come from: a config file, or `--channels` default
/// channels seeded `seed, seed+1, …`.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SourceArgs {
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub config: Option<PathBuf>,
    /// Channel count when no config is given.
    #[arg(long, default_value_t = DEFAULT_CHANNELS)]
    pub channels: u16,
    /// Base seed when no config is given.
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    /// Overrides the configured extractor.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<ExtractorKind>,
    /// Overrides the configured worker count.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Samples per channel.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
    /// Also write the analog samples.
    #[arg(long)]
    #[serde(default)]
    pub analog: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ExtractArgs {
    /// Code files: one for raw and cmac, two (different channels) for
    /// two-source.
    #[arg(required = true)]
    pub inputs: Vec<PathBuf>,
    #[arg(long, default_value = "raw")]
    pub extractor: ExtractorKind,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "bin")]
    pub format: BitFormat,
    /// Initial CMAC key, 32 hex digits; derived from `--seed` when absent.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub key: Option<String>,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long, default_value_t = DEFAULT_OUT_BITS)]
    pub out_bits: u32,
    /// Min-entropy of one 16-byte CMAC input, in bits.
    #[arg(long, default_value_t = 16.0 * DEFAULT_RAW_BYTE_ENTROPY)]
    pub input_entropy: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Samples per channel, rounded up to whole pipeline blocks.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value = "bin")]
    pub format: BitFormat,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AssessArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "auto")]
    pub input_format: InputFormat,
    /// 8 to assess bytes, 1 to assess single bits.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u32).range(1..=8))]
    pub symbol_bits: u32,
    #[arg(long, default_value_t = DEFAULT_SHUFFLES)]
    pub shuffles: usize,
    /// Shuffle seed.
    #[arg(long, default_value_t = DEFAULT_SHUFFLE_SEED)]
    pub seed: u64,
    /// Minimum MCV entropy per symbol; defaults to 7.8 bits per 8.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threshold: Option<f64>,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TestArgs {
    pub input: PathBuf,
    #[arg(long, default_value = "auto")]
    pub input_format: InputFormat,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CorrelateArgs {
    /// Code files to correlate; simulated from the source options when
    /// none are given.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Samples per channel when simulating.
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long, default_value_t = DEFAULT_MAX_LAG)]
    pub max_lag: usize,
    /// Largest acceptable |r|; defaults to 5 / sqrt(n).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// TSV of (pair, lag, r).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct StrengthArgs {
    /// Two code files; simulated from the first configured pair when absent.
    pub inputs: Vec<PathBuf>,
    #[command(flatten)]
    pub source: SourceArgs,
    /// Extractor invocations when simulating.
    #[arg(long, default_value_t = 4_300_000)]
    pub invocations: u64,
    /// Largest acceptable |r|; defaults to 5 / sqrt(n).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub limit: Option<f64>,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// TSV of (position, r).
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub series: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BenchArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Seconds to run.
    #[arg(long, default_value_t = 10.0)]
    pub duration: f64,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct RatesArgs {
    /// Samples per second per channel for a custom row.
    #[arg(long, requires_all = ["extractors", "extractor"])]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sampling_rate: Option<u64>,
    /// Extractor instances for a custom row.
    #[arg(long, requires = "sampling_rate")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractors: Option<u64>,
    #[arg(long, requires = "sampling_rate")]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub extractor: Option<ExtractorKind>,
    #[arg(long, default_value_t = DEFAULT_OUT_BITS)]
    pub out_bits: u32,
    #[arg(long)]
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
    /// Directory for the regenerated outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
}
