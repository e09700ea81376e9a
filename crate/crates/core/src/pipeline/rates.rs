use num_rational::Ratio;

use super::ExtractorKind;
use crate::extractors::DEFAULT_OUT_BITS;

/// Bit-rate arithmetic: sampling rate x extractors x extracted bits per
/// sample, carried exactly as a rational.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateModel {
    /// Samples per second per channel.
    pub sampling_rate: u64,
    pub n_extractors: u64,
    pub bits_per_sample: Ratio<u64>,
}

impl RateModel {
    pub fn new(sampling_rate: u64, n_extractors: u64, bits_per_sample: Ratio<u64>) -> Self {
        Self {
            sampling_rate,
            n_extractors,
            bits_per_sample,
        }
    }

    pub fn is_valid(&self) -> bool {
        self.sampling_rate > 0 && self.n_extractors > 0 && *self.bits_per_sample.numer() > 0
    }
}

/// Output bits per consumed ADC sample for an extractor.
///
/// Raw keeps 8 of 12 bits; CMAC keeps `out_bits` of every 128 LSB bits;
/// two-source turns 72 input bits (3 + 3 twelve-bit codes) into one bit,
/// i.e. 12 x 1/72 per sample of a pair.
pub fn bits_per_sample(kind: ExtractorKind, cmac_out_bits: u32) -> Ratio<u64> {
    match kind {
        ExtractorKind::Raw => Ratio::from_integer(8),
        ExtractorKind::Cmac => Ratio::from_integer(8) * Ratio::new(u64::from(cmac_out_bits), 128),
        ExtractorKind::TwoSource => Ratio::from_integer(12) * Ratio::new(1, 72),
    }
}

/// Exact theoretical rate in bits per second.
pub fn theoretical_rate(model: &RateModel) -> Ratio<u64> {
    Ratio::from_integer(model.sampling_rate)
        * Ratio::from_integer(model.n_extractors)
        * model.bits_per_sample
}

pub fn ratio_to_f64(r: Ratio<u64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The three constructions at their experimental operating points:
/// raw at 55 MSPS x 7, CMAC at 50 MSPS x 7, two-source at 52 MSPS x 3.
pub fn table_rate_models() -> [(ExtractorKind, RateModel); 3] {
    [
        (
            ExtractorKind::Raw,
            RateModel::new(
                55_000_000,
                7,
                bits_per_sample(ExtractorKind::Raw, DEFAULT_OUT_BITS),
            ),
        ),
        (
            ExtractorKind::Cmac,
            RateModel::new(
                50_000_000,
                7,
                bits_per_sample(ExtractorKind::Cmac, DEFAULT_OUT_BITS),
            ),
        ),
        (
            ExtractorKind::TwoSource,
            RateModel::new(
                52_000_000,
                3,
                bits_per_sample(ExtractorKind::TwoSource, DEFAULT_OUT_BITS),
            ),
        ),
    ]
}
