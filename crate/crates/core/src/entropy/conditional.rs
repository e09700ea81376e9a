//! Worst-case min-entropy of the digitized measurement conditioned on the
//! classical noise.
//!
//! Given classical noise `e`, the measurement is `N(e, sigma_q2)` binned by
//! the ADC. The adversary's best guess succeeds with probability
//! `max_e max_i P(m_i | e)` over `|e| <= e_max = 5 sigma_e`, and the bound is
//! `-log2` of that.

use crate::adc::AdcConfig;
use crate::error::{domain, Result};
use crate::special::norm_interval;

/// Classical noise spread, in units of `sigma_e`.
pub const E_MAX_SIGMAS: f64 = 5.0;

pub const DEFAULT_E_GRID_POINTS: usize = 1001;

/// Sub-grid size used when zooming in on a candidate maximum.
const REFINE_POINTS: usize = 65;
/// Grid-scale local maxima refined independently.
const REFINE_CANDIDATES: usize = 4;
const REFINE_MAX_ROUNDS: usize = 64;
/// Stop refining once a round moves the bound by less than this many bits.
pub const REFINE_TOL_BITS: f64 = 1e-11;

/// At or below this many codes every bin is scanned for each `e`.
const EXHAUSTIVE_CODES: u32 = 64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionalModel {
    sigma_q2: f64,
    sigma_e2: f64,
    adc: AdcConfig,
    e_max: f64,
    e_grid_points: usize,
}

impl ConditionalModel {
    pub fn new(sigma_q2: f64, sigma_e2: f64, adc: AdcConfig) -> Result<Self> {
        Self::with_grid(sigma_q2, sigma_e2, adc, DEFAULT_E_GRID_POINTS)
    }

    /// `sigma_e2 == 0` is allowed and collapses the grid to `e = 0`.
    pub fn with_grid(
        sigma_q2: f64,
        sigma_e2: f64,
        adc: AdcConfig,
        e_grid_points: usize,
    ) -> Result<Self> {
        if !(sigma_q2 > 0.0 && sigma_q2.is_finite()) {
            return domain(format!(
                "conditional entropy needs sigma_q2 > 0, got {sigma_q2}"
            ));
        }
        if !(sigma_e2 >= 0.0 && sigma_e2.is_finite()) {
            return domain(format!("sigma_e2 must be finite and >= 0, got {sigma_e2}"));
        }
        if e_grid_points < DEFAULT_E_GRID_POINTS || e_grid_points.is_multiple_of(2) {
            return domain(format!(
                "e grid needs an odd number of points >= {DEFAULT_E_GRID_POINTS}, got {e_grid_points}"
            ));
        }
        Ok(Self {
            sigma_q2,
            sigma_e2,
            adc,
            e_max: E_MAX_SIGMAS * sigma_e2.sqrt(),
            e_grid_points,
        })
    }

    pub fn sigma_q2(&self) -> f64 {
        self.sigma_q2
    }

    pub fn sigma_e2(&self) -> f64 {
        self.sigma_e2
    }

    pub fn adc(&self) -> &AdcConfig {
        &self.adc
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn e_grid_points(&self) -> usize {
        self.e_grid_points
    }
}

/// `P(code | e)`: probability that `N(e, sigma_q2)` lands in `code`'s bin.
/// The first and last codes absorb the tails below `-R` and at/above `+R`.
pub fn conditional_bin_prob(code: u16, e: f64, model: &ConditionalModel) -> f64 {
    let adc = &model.adc;
    if code > adc.max_code() {
        return 0.0;
    }
    let sq = model.sigma_q2.sqrt();
    let (lo, hi) = adc.bin_edges(code);
    let lo = if code == 0 {
        f64::NEG_INFINITY
    } else {
        (lo - e) / sq
    };
    let hi = if code == adc.max_code() {
        f64::INFINITY
    } else {
        (hi - e) / sq
    };
    norm_interval(lo, hi)
}

/// Largest bin probability given `e`.
fn max_bin_prob(e: f64, model: &ConditionalModel) -> f64 {
    let adc = &model.adc;
    let top = adc.max_code();
    if adc.num_codes() <= EXHAUSTIVE_CODES {
        return (0..=top)
            .map(|c| conditional_bin_prob(c, e, model))
            .fold(0.0, f64::max);
    }
    // Interior bin probabilities are log-concave in the bin index and peak
    // at the bin holding e; only the neighbourhood and the two saturation
    // bins can be maximal.
    let k = ((e + adc.full_scale()) / adc.bin_width()).floor();
    let k = k.clamp(0.0, f64::from(top)) as i32;
    let mut best = conditional_bin_prob(0, e, model).max(conditional_bin_prob(top, e, model));
    for c in (k - 2).max(0)..=(k + 2).min(i32::from(top)) {
        best = best.max(conditional_bin_prob(c as u16, e, model));
    }
    best
}

fn argmax_on_grid(lo: f64, hi: f64, points: usize, model: &ConditionalModel) -> Vec<(f64, f64)> {
    let step = if points > 1 {
        (hi - lo) / (points - 1) as f64
    } else {
        0.0
    };
    (0..points)
        .map(|j| {
            let e = if j + 1 == points {
                hi
            } else {
                lo + step * j as f64
            };
            (e, max_bin_prob(e, model))
        })
        .collect()
}

/// Worst-case conditional min-entropy in bits per sample.
///
/// The symmetric e-grid always contains `0` and `+-e_max`. The best few
/// local maxima on the grid are then zoomed into until a round changes the
/// bound by less than [`REFINE_TOL_BITS`].
pub fn worst_case_min_entropy(model: &ConditionalModel) -> Result<f64> {
    if !(model.sigma_q2 > 0.0) {
        return domain("conditional entropy needs sigma_q2 > 0");
    }
    let e_max = model.e_max;
    if e_max == 0.0 {
        return Ok(-max_bin_prob(0.0, model).log2());
    }
    let grid = argmax_on_grid(-e_max, e_max, model.e_grid_points, model);
    let step = 2.0 * e_max / (model.e_grid_points - 1) as f64;

    let mut locals: Vec<(f64, f64)> = (0..grid.len())
        .filter(|&j| {
            let p = grid[j].1;
            (j == 0 || grid[j - 1].1 <= p) && (j + 1 == grid.len() || grid[j + 1].1 <= p)
        })
        .map(|j| grid[j])
        .collect();
    locals.sort_by(|a, b| b.1.total_cmp(&a.1));
    locals.truncate(REFINE_CANDIDATES);

    let mut p_best = locals.first().map_or(0.0, |c| c.1);
    for &(e0, p0) in &locals {
        let (mut centre, mut p, mut half) = (e0, p0, step);
        for _ in 0..REFINE_MAX_ROUNDS {
            let lo = (centre - half).max(-e_max);
            let hi = (centre + half).min(e_max);
            let (e_new, p_new) = argmax_on_grid(lo, hi, REFINE_POINTS, model)
                .into_iter()
                .fold((centre, p), |acc, c| if c.1 > acc.1 { c } else { acc });
            let moved = (p_new.log2() - p.log2()).abs();
            centre = e_new;
            p = p_new;
            half = 2.0 * half / (REFINE_POINTS - 1) as f64;
            if moved < REFINE_TOL_BITS && half < step / 1e3 {
                break;
            }
        }
        p_best = p_best.max(p);
    }
    Ok(-p_best.log2())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(q: f64, e: f64, bits: u8, r: f64) -> ConditionalModel {
        ConditionalModel::new(q, e, AdcConfig::with_bits(bits, r, 1.0).unwrap()).unwrap()
    }

    /// Composite Simpson over the bin; saturation bins are integrated out to
    /// 40 sigma. Shares nothing with the erfc route.
    fn quad_bin(code: u16, e: f64, m: &ConditionalModel) -> f64 {
        let sq = m.sigma_q2().sqrt();
        let pdf = |x: f64| {
            (-(x - e) * (x - e) / (2.0 * m.sigma_q2())).exp() / (sq * std::f64::consts::TAU.sqrt())
        };
        let (mut lo, mut hi) = m.adc().bin_edges(code);
        if code == 0 {
            lo = e - 40.0 * sq;
        }
        if code == m.adc().max_code() {
            hi = e + 40.0 * sq;
        }
        if hi <= lo {
            return 0.0;
        }
        let n = 20_000;
        let h = (hi - lo) / n as f64;
        let mut s = pdf(lo) + pdf(hi);
        for i in 1..n {
            s += pdf(lo + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
        }
        s * h / 3.0
    }

    #[test]
    fn bin_prob_matches_quadrature() {
        let m = model(10.0, 1.0, 12, 14.8);
        for &(code, e) in &[
            (2048u16, 0.0),
            (2050, 0.013),
            (1000, -3.0),
            (3000, 4.9),
            (0, -5.0),
            (4095, 5.0),
        ] {
            let p = conditional_bin_prob(code, e, &m);
            let q = quad_bin(code, e, &m);
            assert!((p - q).abs() < 1e-9, "code {code} e {e}: {p} vs {q}");
        }
    }

    #[test]
    fn wide_gaussian_center_bin_is_density_times_width() {
        let m = model(100.0, 1.0, 12, 1.0);
        let d = m.adc().bin_width();
        let p = conditional_bin_prob(2048, d / 2.0, &m);
        let approx = d / (10.0 * std::f64::consts::TAU.sqrt());
        assert!(((p - approx) / approx).abs() < 1e-8);
    }

    #[test]
    fn probabilities_sum_to_one() {
        let m = model(10.0, 1.0, 12, 14.8);
        for &e in &[0.0, -5.0, 2.345, 5.0] {
            let total: f64 = (0..=4095u16).map(|c| conditional_bin_prob(c, e, &m)).sum();
            assert!((total - 1.0).abs() < 1e-12, "e={e}: {total}");
        }
    }

    #[test]
    fn saturation_dominates_far_outside_range() {
        let m = model(10.0, 1.0, 12, 14.8);
        let e = 14.8 + 10.0 * 10f64.sqrt();
        assert!(conditional_bin_prob(4095, e, &m) > 1.0 - 1e-9);
    }

    #[test]
    fn no_classical_noise_reduces_to_centered_gaussian() {
        let adc = AdcConfig::with_bits(12, 9.0, 1.0).unwrap();
        let m = ConditionalModel::new(4.0, 0.0, adc).unwrap();
        let h = worst_case_min_entropy(&m).unwrap();
        let pmax = (0..=4095u16)
            .map(|c| conditional_bin_prob(c, 0.0, &m))
            .fold(0.0, f64::max);
        assert!((h + pmax.log2()).abs() < 1e-12);
    }

    #[test]
    fn rejects_degenerate_models() {
        let adc = AdcConfig::new(1.0, 1.0).unwrap();
        assert!(ConditionalModel::new(0.0, 1.0, adc).is_err());
        assert!(ConditionalModel::with_grid(1.0, 1.0, adc, 1000).is_err());
        assert!(ConditionalModel::with_grid(1.0, 1.0, adc, 999).is_err());
        assert!(ConditionalModel::with_grid(1.0, 1.0, adc, 2001).is_ok());
    }

    #[test]
    fn non_increasing_in_classical_noise() {
        let mut prev = f64::INFINITY;
        for i in 0..12 {
            let se2 = 0.05 * (i as f64 + 1.0).powi(2);
            let h = worst_case_min_entropy(&model(10.0, se2, 12, 14.8)).unwrap();
            assert!(h <= prev + 1e-9, "sigma_e2={se2}: {h} > {prev}");
            prev = h;
        }
    }

    #[test]
    fn bounded_by_resolution() {
        for &(q, e, r) in &[(10.0, 1.0, 14.8), (1e-4, 1e-6, 50.0), (1e4, 1.0, 0.1)] {
            let h = worst_case_min_entropy(&model(q, e, 12, r)).unwrap();
            assert!((0.0..=12.0).contains(&h), "{h}");
        }
    }
}
