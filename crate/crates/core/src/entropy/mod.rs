//! Entropy assessment: the analytic worst-case bound over the source/ADC
//! model, and empirical estimates on produced symbol streams.

mod conditional;
mod iid;
mod mcv;

pub use conditional::{
    conditional_bin_prob, worst_case_min_entropy, ConditionalModel, DEFAULT_E_GRID_POINTS,
    E_MAX_SIGMAS, REFINE_TOL_BITS,
};
pub use iid::{
    iid_permutation_test, IidReport, StatisticOutcome, DEFAULT_SHUFFLES, DEFAULT_SHUFFLE_SEED,
    MIN_IID_SAMPLES, MIN_SHUFFLES,
};
pub use mcv::{mcv_min_entropy, McvEstimate};

use crate::error::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct EntropyReport {
    /// Analytic worst-case bound in bits per ADC sample, when a source
    /// model is available.
    pub h_min_conditional: Option<f64>,
    pub mcv: McvEstimate,
    /// Width of one symbol in bits (8 for bytes, 1 for single-bit output).
    pub symbol_bits: u32,
    pub iid: IidReport,
    /// Minimum acceptable MCV entropy (bits per symbol).
    pub min_entropy_threshold: f64,
}

impl EntropyReport {
    pub fn sample_count(&self) -> usize {
        self.mcv.sample_count
    }

    /// MCV entropy per bit of output.
    pub fn h_mcv_per_bit(&self) -> f64 {
        self.mcv.min_entropy / f64::from(self.symbol_bits)
    }

    /// MCV entropy per eight bits of output.
    pub fn h_mcv_per_byte(&self) -> f64 {
        8.0 * self.h_mcv_per_bit()
    }

    pub fn passed(&self) -> bool {
        self.iid.passed && self.mcv.min_entropy >= self.min_entropy_threshold
    }
}

/// Default acceptance floor: 7.8 bits per 8 bits of output, scaled to the
/// symbol width.
pub fn default_min_entropy(symbol_bits: u32) -> f64 {
    7.8 / 8.0 * f64::from(symbol_bits)
}

/// MCV estimate plus IID battery on one stream.
///
/// `symbol_bits` is 8 for byte symbols and 1 for bit symbols (values 0/1).
pub fn assess(
    symbols: &[u8],
    symbol_bits: u32,
    num_shuffles: usize,
    seed: u64,
    h_min_conditional: Option<f64>,
) -> Result<EntropyReport> {
    let alphabet = 1usize << symbol_bits.clamp(1, 8);
    let mcv = mcv_min_entropy(symbols, alphabet)?;
    let iid = iid_permutation_test(symbols, num_shuffles, seed)?;
    Ok(EntropyReport {
        h_min_conditional,
        mcv,
        symbol_bits,
        iid,
        min_entropy_threshold: default_min_entropy(symbol_bits),
    })
}
