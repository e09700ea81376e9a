use crate::error::{input, Result};
use crate::extractors::{inner_product, pack_codes36, CODES_PER_INPUT, TWO_SOURCE_INPUT_BITS};

use super::correlation::{extractor_strength, BitMatrix, CorrelationReport};

/// Output bias and per-input-bit correlation of the two-source extractor.
#[derive(Debug, Clone, PartialEq)]
pub struct StrengthReport {
    pub invocations: usize,
    pub ones: u64,
    /// Positions `0..36` are the first input's bits (MSB first), `36..72`
    /// the second's.
    pub correlation: CorrelationReport,
}

impl StrengthReport {
    pub fn p_one(&self) -> f64 {
        self.ones as f64 / self.invocations as f64
    }

    pub fn bias(&self) -> f64 {
        self.p_one() - 0.5
    }
}

/// Runs the extractor over aligned code blocks of two channels and
/// correlates each of the 72 input bits with the output.
pub fn two_source_strength(a: &[u16], b: &[u16]) -> Result<StrengthReport> {
    if a.len() != b.len() {
        return input(format!(
            "code blocks differ in length: {} vs {}",
            a.len(),
            b.len()
        ));
    }
    let n = a.len() / CODES_PER_INPUT;
    if n == 0 {
        return input("two-source strength needs at least one invocation");
    }
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    let mut out = Vec::with_capacity(n);
    for (ca, cb) in a
        .chunks_exact(CODES_PER_INPUT)
        .zip(b.chunks_exact(CODES_PER_INPUT))
    {
        let (x, y) = (pack_codes36(ca)?, pack_codes36(cb)?);
        xs.push(x);
        ys.push(y);
        out.push(inner_product(x, y));
    }
    let ones = out.iter().map(|&b| u64::from(b)).sum();
    let width = TWO_SOURCE_INPUT_BITS;
    let rx = extractor_strength(&BitMatrix { width, rows: xs }, &out)?;
    let ry = extractor_strength(&BitMatrix { width, rows: ys }, &out)?;
    let offset = i64::from(width);
    let series = rx
        .series
        .into_iter()
        .chain(ry.series.into_iter().map(|(p, r)| (p + offset, r)))
        .collect();
    Ok(StrengthReport {
        invocations: n,
        ones,
        correlation: CorrelationReport::from_series(String::from("extractor_strength"), series, n),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn biased_input_bit_shows_up_at_its_position() {
        // Second input is fixed at a single set bit, so the output copies
        // the matching bit of the first input.
        let mut state = 0x2545_f491_4f6c_dd1du64;
        let mut a = Vec::new();
        let mut b = Vec::new();
        for _ in 0..20_000 {
            for _ in 0..3 {
                state ^= state << 13;
                state ^= state >> 7;
                state ^= state << 17;
                a.push((state & 0xfff) as u16);
            }
            b.extend_from_slice(&[0, 0, 1]);
        }
        let rep = two_source_strength(&a, &b).unwrap();
        assert_eq!(rep.invocations, 20_000);
        assert_eq!(rep.correlation.series.len(), 72);
        let (pos, r) = rep.correlation.max_positive.unwrap();
        assert_eq!(pos, 35);
        assert!((r - 1.0).abs() < 1e-12);
        assert!(rep.bias().abs() < 0.02);
    }

    #[test]
    fn rejects_mismatched_blocks() {
        assert!(two_source_strength(&[1, 2, 3], &[1, 2]).is_err());
        assert!(two_source_strength(&[1, 2], &[1, 2]).is_err());
    }
}
