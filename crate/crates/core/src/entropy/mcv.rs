use crate::error::{input, Result};

/// z-score of the 99% upper confidence bound.
const Z_UPPER: f64 = 2.576;

/// Most-common-value estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McvEstimate {
    pub sample_count: usize,
    pub alphabet_size: usize,
    /// Frequency of the modal symbol.
    pub p_hat: f64,
    /// Upper confidence bound on the modal probability.
    pub p_upper: f64,
    /// `-log2(p_upper)`, bits per symbol.
    pub min_entropy: f64,
}

/// Most-common-value min-entropy of a symbol sequence.
pub fn mcv_min_entropy(symbols: &[u8], alphabet_size: usize) -> Result<McvEstimate> {
    if symbols.is_empty() {
        return input("MCV estimate of an empty sequence");
    }
    if !(2..=256).contains(&alphabet_size) {
        return input(format!(
            "alphabet size must be 2..=256, got {alphabet_size}"
        ));
    }
    let mut counts = [0u64; 256];
    for &s in symbols {
        counts[usize::from(s)] += 1;
    }
    if let Some(bad) = counts[alphabet_size..].iter().position(|&c| c > 0) {
        return input(format!(
            "symbol {} outside an alphabet of size {alphabet_size}",
            bad + alphabet_size
        ));
    }
    let n = symbols.len();
    let p_hat = *counts.iter().max().expect("256 counters") as f64 / n as f64;
    let p_upper = if n > 1 {
        (p_hat + Z_UPPER * (p_hat * (1.0 - p_hat) / (n - 1) as f64).sqrt()).min(1.0)
    } else {
        1.0
    };
    Ok(McvEstimate {
        sample_count: n,
        alphabet_size,
        p_hat,
        p_upper,
        min_entropy: (-p_upper.log2()).max(0.0),
    })
}
