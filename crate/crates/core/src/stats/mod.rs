//! Statistical quality checks on produced bitstreams.

mod correlation;
mod strength;
mod sts;

pub use correlation::{
    channel_pair_correlation, cross_correlation, extractor_strength, lagged_correlation, BitMatrix,
    CorrelationReport, DEFAULT_MAX_LAG, MIN_CORRELATION_LEN,
};
pub use strength::{two_source_strength, StrengthReport};
pub use sts::{
    approximate_entropy, block_frequency, cumulative_sums, longest_run_of_ones, monobit,
    run_sts_subset, runs, serial, TestOutcome, TestReport, ALPHA, APEN_M, BLOCK_FREQUENCY_M,
    MIN_STS_BITS, SERIAL_M,
};
