//! Pairwise channel cross-correlation and extractor input/output
//! correlation.

use crate::error::{input, Result};

pub const MIN_CORRELATION_LEN: usize = 10_000;
pub const DEFAULT_MAX_LAG: usize = 100;

/// Extremal correlations of one analysis, plus the plot-ready series.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationReport {
    pub label: String,
    /// Largest positive correlation and the lag/position where it occurs.
    pub max_positive: Option<(i64, f64)>,
    /// Most negative correlation and its lag/position.
    pub max_negative: Option<(i64, f64)>,
    /// `(lag, r)` for channel pairs, `(position, r)` for extractor strength.
    pub series: Vec<(i64, f64)>,
    pub n: usize,
}

impl CorrelationReport {
    /// Ideal magnitude for independent data of this size, `n^(-1/2)`.
    pub fn reference(&self) -> f64 {
        1.0 / (self.n as f64).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.series.iter().map(|(_, r)| r.abs()).fold(0.0, f64::max)
    }

    pub(crate) fn from_series(label: String, series: Vec<(i64, f64)>, n: usize) -> Self {
        let max_positive = series
            .iter()
            .copied()
            .filter(|(_, r)| *r > 0.0)
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let max_negative = series
            .iter()
            .copied()
            .filter(|(_, r)| *r < 0.0)
            .min_by(|a, b| a.1.total_cmp(&b.1));
        Self {
            label,
            max_positive,
            max_negative,
            series,
            n,
        }
    }
}

/// Pearson correlation from exact integer moments.
fn pearson(n: u64, sx: u64, sy: u64, sxx: u64, syy: u64, sxy: u64) -> f64 {
    let n = i128::from(n);
    let (sx, sy) = (i128::from(sx), i128::from(sy));
    let cov = n * i128::from(sxy) - sx * sy;
    let vx = n * i128::from(sxx) - sx * sx;
    let vy = n * i128::from(syy) - sy * sy;
    if vx == 0 || vy == 0 {
        return 0.0;
    }
    (cov as f64 / ((vx as f64).sqrt() * (vy as f64).sqrt())).clamp(-1.0, 1.0)
}

/// `r(a, b, lag)` = correlation of `a[i]` with `b[i + lag]` over the
/// overlap.
pub fn lagged_correlation(a: &[u8], b: &[u8], lag: i64) -> f64 {
    let (xa, yb) = if lag >= 0 {
        let l = (lag as usize).min(b.len());
        (&a[..a.len().min(b.len() - l)], &b[l..])
    } else {
        let l = (lag.unsigned_abs() as usize).min(a.len());
        (&a[l..], &b[..b.len().min(a.len() - l)])
    };
    let len = xa.len().min(yb.len());
    let (xa, yb) = (&xa[..len], &yb[..len]);
    let (mut sx, mut sy, mut sxx, mut syy, mut sxy) = (0u64, 0u64, 0u64, 0u64, 0u64);
    for (&x, &y) in xa.iter().zip(yb) {
        let (x, y) = (u64::from(x), u64::from(y));
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
    }
    pearson(len as u64, sx, sy, sxx, syy, sxy)
}

fn correlation_series(
    a: &[u8],
    b: &[u8],
    max_lag: usize,
    skip_zero: bool,
) -> Result<CorrelationReport> {
    if a.len() != b.len() {
        return input(format!(
            "sequence lengths differ: {} vs {}",
            a.len(),
            b.len()
        ));
    }
    if a.len() < MIN_CORRELATION_LEN {
        return input(format!(
            "correlation needs at least {MIN_CORRELATION_LEN} symbols, got {}",
            a.len()
        ));
    }
    if max_lag >= a.len() / 2 {
        return input(format!(
            "max lag {max_lag} too large for {} symbols",
            a.len()
        ));
    }
    let max_lag = max_lag as i64;
    let series = (-max_lag..=max_lag)
        .filter(|&l| !(skip_zero && l == 0))
        .map(|l| (l, lagged_correlation(a, b, l)))
        .collect();
    Ok(CorrelationReport::from_series(
        String::from("cross_correlation"),
        series,
        a.len(),
    ))
}

/// Correlation over lags `-max_lag..=max_lag`. When `a` and `b` are the
/// same sequence this is an autocorrelation and lag 0 is skipped.
pub fn cross_correlation(a: &[u8], b: &[u8], max_lag: usize) -> Result<CorrelationReport> {
    correlation_series(a, b, max_lag, a == b)
}

/// Correlation between two channels over `-max_lag..=max_lag`, lag 0
/// always included, so a duplicated channel shows up as `r = 1`.
pub fn channel_pair_correlation(a: &[u8], b: &[u8], max_lag: usize) -> Result<CorrelationReport> {
    correlation_series(a, b, max_lag, false)
}

/// Rows of up to 64 bits, most significant of `width` bits = position 0.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    pub width: u32,
    pub rows: Vec<u64>,
}

/// Per input-bit-position correlation between that bit and the output bit.
pub fn extractor_strength(inputs: &BitMatrix, outputs: &[u8]) -> Result<CorrelationReport> {
    if inputs.rows.len() != outputs.len() {
        return input(format!(
            "{} input rows but {} output bits",
            inputs.rows.len(),
            outputs.len()
        ));
    }
    if !(1..=64).contains(&inputs.width) {
        return input(format!("input width must be 1..=64, got {}", inputs.width));
    }
    if outputs.iter().any(|&b| b > 1) {
        return input("outputs must be single bits");
    }
    let w = inputs.width as usize;
    let n = outputs.len() as u64;
    let mut ones_in = vec![0u64; w];
    let mut both = vec![0u64; w];
    let mut ones_out = 0u64;
    for (&row, &out) in inputs.rows.iter().zip(outputs) {
        let out = u64::from(out);
        ones_out += out;
        for (pos, (oi, bo)) in ones_in.iter_mut().zip(both.iter_mut()).enumerate() {
            let bit = (row >> (w - 1 - pos)) & 1;
            *oi += bit;
            *bo += bit & out;
        }
    }
    // For 0/1 data the sums of squares equal the sums.
    let series = (0..w)
        .map(|p| {
            (
                p as i64,
                pearson(n, ones_in[p], ones_out, ones_in[p], ones_out, both[p]),
            )
        })
        .collect();
    Ok(CorrelationReport::from_series(
        String::from("extractor_strength"),
        series,
        outputs.len(),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand_chacha::ChaCha8Rng;
    use rand_core::{RngCore, SeedableRng};

    fn bytes(n: usize, seed: u64) -> Vec<u8> {
        let mut v = vec![0u8; n];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut v);
        v
    }

    #[test]
    fn self_and_complement() {
        let a = bytes(MIN_CORRELATION_LEN, 1);
        assert!((lagged_correlation(&a, &a, 0) - 1.0).abs() < 1e-12);
        let c: Vec<u8> = a.iter().map(|x| 255 - x).collect();
        assert!((lagged_correlation(&a, &c, 0) + 1.0).abs() < 1e-12);
        let rep = cross_correlation(&a, &a, 3).unwrap();
        assert_eq!(rep.series.len(), 6);
        assert!(rep.series.iter().all(|(l, _)| *l != 0));
        let pair = channel_pair_correlation(&a, &a, 3).unwrap();
        assert_eq!(pair.series.len(), 7);
        assert_eq!(pair.max_positive.unwrap().0, 0);
    }

    #[test]
    fn lag_recovers_a_shift() {
        let a = bytes(20_000, 2);
        let mut b = vec![0u8; 5];
        b.extend_from_slice(&a[..a.len() - 5]);
        let rep = cross_correlation(&a, &b, 10).unwrap();
        let (lag, r) = rep.max_positive.unwrap();
        assert_eq!(lag, 5);
        assert!(r > 0.999);
    }

    #[test]
    fn symmetric_under_swap_and_negated_lag() {
        let a = bytes(MIN_CORRELATION_LEN, 3);
        let b = bytes(MIN_CORRELATION_LEN, 4);
        for lag in -7..=7 {
            let d = lagged_correlation(&a, &b, lag) - lagged_correlation(&b, &a, -lag);
            assert!(d.abs() < 1e-12);
        }
    }

    #[test]
    fn input_validation() {
        let a = bytes(MIN_CORRELATION_LEN, 5);
        assert!(cross_correlation(&a, &a[1..], 1).is_err());
        assert!(cross_correlation(&a[..100], &a[..100], 1).is_err());
        let m = BitMatrix {
            width: 4,
            rows: vec![1, 2],
        };
        assert!(extractor_strength(&m, &[1]).is_err());
        assert!(extractor_strength(&m, &[1, 2]).is_err());
    }

    #[test]
    fn copied_input_bit_is_fully_correlated() {
        let rows: Vec<u64> = bytes(50_000, 6).iter().map(|&b| u64::from(b)).collect();
        let out: Vec<u8> = rows.iter().map(|r| ((r >> 5) & 1) as u8).collect();
        let rep = extractor_strength(&BitMatrix { width: 8, rows }, &out).unwrap();
        let (pos, r) = rep.max_positive.unwrap();
        assert_eq!(pos, 2);
        assert!((r - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reference_line_at_4_3_million() {
        let rep = CorrelationReport::from_series(String::new(), vec![], 4_300_000);
        assert!((rep.reference() - 4.8e-4).abs() < 5e-6);
    }
}
