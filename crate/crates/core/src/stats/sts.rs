//! A subset of the NIST SP 800-22 statistical tests.
//!
//! Bits are passed unpacked, one `0`/`1` byte per bit. Each test's
//! parameters follow the suite defaults; the individual functions take them
//! explicitly so the small worked examples from the suite documentation can
//! be checked directly.

use std::f64::consts::{LN_2, SQRT_2};

use crate::error::{input, Result};
use crate::special::{erfc, igamc, norm_cdf};

pub const MIN_STS_BITS: usize = 1_000_000;
pub const ALPHA: f64 = 0.01;
pub const BLOCK_FREQUENCY_M: usize = 128;
pub const SERIAL_M: u32 = 16;
pub const APEN_M: u32 = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct TestOutcome {
    pub name: String,
    pub statistic: f64,
    pub p_value: f64,
    pub passed: bool,
}

impl TestOutcome {
    fn new(name: &str, statistic: f64, p_value: f64) -> Self {
        let p_value = if p_value.is_nan() {
            0.0
        } else {
            p_value.clamp(0.0, 1.0)
        };
        Self {
            name: name.to_owned(),
            statistic,
            p_value,
            passed: p_value >= ALPHA,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TestReport {
    pub bit_count: usize,
    pub tests: Vec<TestOutcome>,
    pub passed: bool,
}

fn ones(bits: &[u8]) -> usize {
    bits.iter().filter(|&&b| b != 0).count()
}

/// Returns `(s_obs, p)`.
pub fn monobit(bits: &[u8]) -> (f64, f64) {
    let n = bits.len() as f64;
    let s = 2.0 * ones(bits) as f64 - n;
    let s_obs = s.abs() / n.sqrt();
    (s_obs, erfc(s_obs / SQRT_2))
}

/// Returns `(chi2, p)`.
pub fn block_frequency(bits: &[u8], m: usize) -> (f64, f64) {
    let blocks = bits.len() / m;
    let chi2 = 4.0
        * m as f64
        * bits
            .chunks_exact(m)
            .map(|b| {
                let pi = ones(b) as f64 / m as f64;
                (pi - 0.5) * (pi - 0.5)
            })
            .sum::<f64>();
    (chi2, igamc(blocks as f64 / 2.0, chi2 / 2.0))
}

/// Returns `(v_obs, p)`; fails the frequency prerequisite with `p = 0`.
pub fn runs(bits: &[u8]) -> (f64, f64) {
    let n = bits.len() as f64;
    let pi = ones(bits) as f64 / n;
    if (pi - 0.5).abs() >= 2.0 / n.sqrt() {
        return (0.0, 0.0);
    }
    let v = 1 + bits
        .windows(2)
        .filter(|w| (w[0] != 0) != (w[1] != 0))
        .count();
    let v = v as f64;
    let p =
        erfc((v - 2.0 * n * pi * (1.0 - pi)).abs() / (2.0 * (2.0 * n).sqrt() * pi * (1.0 - pi)));
    (v, p)
}

/// Returns `(chi2, p)`. Block size and class boundaries depend on `n`.
pub fn longest_run_of_ones(bits: &[u8]) -> (f64, f64) {
    let n = bits.len();
    let (m, lo, probs): (usize, usize, &[f64]) = if n >= 750_000 {
        (
            10_000,
            10,
            &[0.0882, 0.2092, 0.2483, 0.1933, 0.1208, 0.0675, 0.0727],
        )
    } else if n >= 6272 {
        (128, 4, &[0.1174, 0.2430, 0.2493, 0.1752, 0.1027, 0.1124])
    } else {
        (8, 1, &[0.2148, 0.3672, 0.2305, 0.1875])
    };
    let k = probs.len() - 1;
    let blocks = n / m;
    let mut nu = vec![0usize; probs.len()];
    for block in bits.chunks_exact(m) {
        let mut longest = 0;
        let mut run = 0;
        for &b in block {
            if b != 0 {
                run += 1;
                longest = longest.max(run);
            } else {
                run = 0;
            }
        }
        nu[longest.clamp(lo, lo + k) - lo] += 1;
    }
    let chi2: f64 = nu
        .iter()
        .zip(probs)
        .map(|(&v, &p)| {
            let e = blocks as f64 * p;
            (v as f64 - e).powi(2) / e
        })
        .sum();
    (chi2, igamc(k as f64 / 2.0, chi2 / 2.0))
}

/// Returns `(z, p)`; `forward == false` accumulates from the end.
pub fn cumulative_sums(bits: &[u8], forward: bool) -> (f64, f64) {
    let n = bits.len() as i64;
    let step = |b: &u8| if *b != 0 { 1i64 } else { -1 };
    let mut s = 0i64;
    let mut z = 0i64;
    let mut visit = |b: &u8| {
        s += step(b);
        z = z.max(s.abs());
    };
    if forward {
        bits.iter().for_each(&mut visit);
    } else {
        bits.iter().rev().for_each(&mut visit);
    }
    if z == 0 {
        return (0.0, 0.0);
    }
    let sqrt_n = (n as f64).sqrt();
    let zf = z as f64;
    let phi = |k: i64, c: i64| norm_cdf(((4 * k + c) as f64) * zf / sqrt_n);
    // Integer division truncates toward zero, as in the reference code.
    let mut sum1 = 0.0;
    for k in ((-n / z + 1) / 4)..=((n / z - 1) / 4) {
        sum1 += phi(k, 1) - phi(k, -1);
    }
    let mut sum2 = 0.0;
    for k in ((-n / z - 3) / 4)..=((n / z - 1) / 4) {
        sum2 += phi(k, 3) - phi(k, 1);
    }
    (zf, 1.0 - sum1 + sum2)
}

/// Overlapping `m`-bit pattern counts with wrap-around.
fn pattern_counts(bits: &[u8], m: u32) -> Vec<u64> {
    if m == 0 {
        return vec![bits.len() as u64];
    }
    let n = bits.len();
    let mask = (1usize << m) - 1;
    let mut counts = vec![0u64; 1 << m];
    let mut window = 0usize;
    let bit = |i: usize| usize::from(bits[i % n] != 0);
    for i in 0..(m as usize - 1) {
        window = (window << 1) | bit(i);
    }
    for i in (m as usize - 1)..(n + m as usize - 1) {
        window = ((window << 1) | bit(i)) & mask;
        counts[window] += 1;
    }
    counts
}

fn psi2(bits: &[u8], m: i32) -> f64 {
    if m <= 0 {
        return 0.0;
    }
    let n = bits.len() as f64;
    let sum: f64 = pattern_counts(bits, m as u32)
        .iter()
        .map(|&c| (c as f64) * (c as f64))
        .sum();
    sum * (1u64 << m) as f64 / n - n
}

/// Returns `((del1, p1), (del2, p2))`.
pub fn serial(bits: &[u8], m: u32) -> ((f64, f64), (f64, f64)) {
    let m = m as i32;
    let (a, b, c) = (psi2(bits, m), psi2(bits, m - 1), psi2(bits, m - 2));
    let d1 = a - b;
    let d2 = a - 2.0 * b + c;
    let p1 = igamc(2f64.powi(m - 2), d1 / 2.0);
    let p2 = igamc(2f64.powi(m - 3), d2 / 2.0);
    ((d1, p1), (d2, p2))
}

fn phi_m(bits: &[u8], m: u32) -> f64 {
    let n = bits.len() as f64;
    pattern_counts(bits, m)
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum()
}

/// Returns `(chi2, p)`.
pub fn approximate_entropy(bits: &[u8], m: u32) -> (f64, f64) {
    let n = bits.len() as f64;
    let apen = phi_m(bits, m) - phi_m(bits, m + 1);
    let chi2 = 2.0 * n * (LN_2 - apen);
    (chi2, igamc(2f64.powi(m as i32 - 1), chi2 / 2.0))
}

/// Monobit, block frequency (M = 128), runs, longest run of ones,
/// cumulative sums in both directions, serial (m = 16) and approximate
/// entropy (m = 10). Each p-value passes at `p >= 0.01`.
pub fn run_sts_subset(bits: &[u8]) -> Result<TestReport> {
    if bits.len() < MIN_STS_BITS {
        return input(format!(
            "statistical tests need at least {MIN_STS_BITS} bits, got {}",
            bits.len()
        ));
    }
    if bits.iter().any(|&b| b > 1) {
        return input("bit sequence may only contain 0 and 1");
    }
    let mut tests = Vec::with_capacity(9);
    let (s, p) = monobit(bits);
    tests.push(TestOutcome::new("monobit", s, p));
    let (s, p) = block_frequency(bits, BLOCK_FREQUENCY_M);
    tests.push(TestOutcome::new("block_frequency", s, p));
    let (s, p) = runs(bits);
    tests.push(TestOutcome::new("runs", s, p));
    let (s, p) = longest_run_of_ones(bits);
    tests.push(TestOutcome::new("longest_run_of_ones", s, p));
    let (s, p) = cumulative_sums(bits, true);
    tests.push(TestOutcome::new("cumulative_sums_forward", s, p));
    let (s, p) = cumulative_sums(bits, false);
    tests.push(TestOutcome::new("cumulative_sums_backward", s, p));
    let ((s1, p1), (s2, p2)) = serial(bits, SERIAL_M);
    tests.push(TestOutcome::new("serial_1", s1, p1));
    tests.push(TestOutcome::new("serial_2", s2, p2));
    let (s, p) = approximate_entropy(bits, APEN_M);
    tests.push(TestOutcome::new("approximate_entropy", s, p));
    let passed = tests.iter().all(|t| t.passed);
    Ok(TestReport {
        bit_count: bits.len(),
        tests,
        passed,
    })
}
