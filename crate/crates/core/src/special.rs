//! Special functions shared by the entropy and hypothesis-test code.

use statrs::function::erf::erfc as statrs_erfc;
use statrs::function::gamma::gamma_ur;

use std::f64::consts::FRAC_1_SQRT_2;

/// Complementary error function.
pub fn erfc(x: f64) -> f64 {
    if x == f64::INFINITY {
        0.0
    } else if x == f64::NEG_INFINITY {
        2.0
    } else {
        statrs_erfc(x)
    }
}

/// Standard normal CDF, `P(Z < x)`.
pub fn norm_cdf(x: f64) -> f64 {
    0.5 * erfc(-x * FRAC_1_SQRT_2)
}

/// Standard normal upper tail, `P(Z >= x)`.
pub fn norm_sf(x: f64) -> f64 {
    0.5 * erfc(x * FRAC_1_SQRT_2)
}

/// `P(lo <= Z < hi)` for a standard normal.
///
/// Each side is evaluated on the tail that keeps the subtraction away from
/// 1 - 1 cancellation, so saturation bins several sigma out stay accurate.
pub fn norm_interval(lo: f64, hi: f64) -> f64 {
    if hi <= lo {
        return 0.0;
    }
    let p = if lo >= 0.0 {
        norm_sf(lo) - norm_sf(hi)
    } else if hi <= 0.0 {
        norm_cdf(hi) - norm_cdf(lo)
    } else {
        1.0 - norm_cdf(lo) - norm_sf(hi)
    };
    p.max(0.0)
}

/// Upper regularized incomplete gamma `Q(a, x)` (the `igamc` of the
/// statistical test suite).
pub fn igamc(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x.is_infinite() {
        return 0.0;
    }
    gamma_ur(a, x).clamp(0.0, 1.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normal_tails_are_symmetric() {
        for &x in &[0.0, 0.3, 1.0, 2.5, 7.0, 12.0] {
            assert!((norm_cdf(-x) - norm_sf(x)).abs() <= 1e-300_f64.max(1e-15 * norm_sf(x)));
        }
        assert_eq!(norm_cdf(f64::NEG_INFINITY), 0.0);
        assert_eq!(norm_sf(f64::INFINITY), 0.0);
    }

    #[test]
    fn deep_tail_relative_accuracy() {
        // Q(7) = 1.279812543885835e-12; statrs erfc is good to ~1e-11 relative here.
        let q7 = norm_sf(7.0);
        assert!(((q7 - 1.279_812_543_885_835e-12) / q7).abs() < 1e-10);
    }

    #[test]
    fn interval_covers_whole_line() {
        assert!((norm_interval(f64::NEG_INFINITY, f64::INFINITY) - 1.0).abs() < 1e-15);
        assert_eq!(norm_interval(1.0, 1.0), 0.0);
    }

    #[test]
    fn igamc_matches_chi_square_tail() {
        // chi^2 with 2 dof: survival = exp(-x/2) = igamc(1, x/2).
        for &x in &[0.1, 1.0, 5.0, 20.0] {
            assert!((igamc(1.0, x / 2.0) - (-x / 2.0f64).exp()).abs() < 1e-14);
        }
    }
}
