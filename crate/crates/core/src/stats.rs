//! Special functions and test statistics.

use std::f64::consts::{PI, TAU};

use serde::Serialize;
use thiserror::Error;

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x)Γ(1−x) = π / sin(πx).
        return (PI / (PI * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * TAU.ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

const EPS: f64 = 1e-16;
const TINY: f64 = 1e-300;
const MAX_ITER: usize = 10_000;

fn prefactor(a: f64, x: f64) -> f64 {
    (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn lower_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut term = 1.0 / a;
    let mut sum = term;
    for _ in 0..MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * EPS {
            break;
        }
    }
    sum * prefactor(a, x)
}

/// Continued fraction for `Q(a, x)` by the modified Lentz method.
fn upper_continued_fraction(a: f64, x: f64) -> f64 {
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < EPS {
            break;
        }
    }
    h * prefactor(a, x)
}

/// Regularized lower incomplete gamma `P(a, x)`.
pub fn gamma_p(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_p requires a > 0");
    if x <= 0.0 {
        0.0
    } else if x < a + 1.0 {
        lower_series(a, x)
    } else {
        1.0 - upper_continued_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma `Q(a, x) = 1 − P(a, x)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    assert!(a > 0.0, "gamma_q requires a > 0");
    if x <= 0.0 {
        1.0
    } else if x < a + 1.0 {
        1.0 - lower_series(a, x)
    } else {
        upper_continued_fraction(a, x)
    }
}

/// Upper tail of the χ² distribution with `df` degrees of freedom.
pub fn chi_square_sf(statistic: f64, df: usize) -> f64 {
    gamma_q(df as f64 / 2.0, statistic / 2.0)
}

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// Wilson score interval for `hits` successes in `n` trials, clamped so it
/// always contains the point estimate.
pub fn wilson_interval(hits: u64, n: u64, z: f64) -> (f64, f64) {
    if n == 0 {
        return (0.0, 1.0);
    }
    let nf = n as f64;
    let p = hits as f64 / nf;
    let z2 = z * z;
    let denom = 1.0 + z2 / nf;
    let center = (p + z2 / (2.0 * nf)) / denom;
    let half = z / denom * (p * (1.0 - p) / nf + z2 / (4.0 * nf * nf)).sqrt();
    let lo = (center - half).max(0.0).min(p);
    let hi = (center + half).min(1.0).max(p);
    (lo, hi)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TestError {
    #[error("at least {min} bins are required, got {got}")]
    TooFewBins { min: usize, got: usize },
    #[error("sample of size {got} is below the minimum {min} (5 per bin)")]
    Undersized { min: usize, got: usize },
    #[error("angle {0} is not finite")]
    NonFiniteAngle(f64),
}

pub const MIN_BINS: usize = 8;

fn check_sizes(n: usize, bins: usize) -> Result<(), TestError> {
    if bins < MIN_BINS {
        return Err(TestError::TooFewBins {
            min: MIN_BINS,
            got: bins,
        });
    }
    if n < 5 * bins {
        return Err(TestError::Undersized {
            min: 5 * bins,
            got: n,
        });
    }
    Ok(())
}

/// Counts of angles (taken mod 2π) in `bins` equal arcs starting at 0.
pub fn angle_histogram(angles: &[f64], bins: usize) -> Result<Vec<u64>, TestError> {
    let mut counts = vec![0u64; bins];
    for &a in angles {
        if !a.is_finite() {
            return Err(TestError::NonFiniteAngle(a));
        }
        let x = a.rem_euclid(TAU) * bins as f64 / TAU;
        // Angles within rounding of an edge `j·2π/bins` belong to bin j.
        let nearest = x.round();
        let x = if (x - nearest).abs() <= 4.0 * f64::EPSILON * x.max(1.0) {
            nearest
        } else {
            x
        };
        let idx = (x.floor() as usize).min(bins - 1);
        counts[idx] += 1;
    }
    Ok(counts)
}

/// Pearson χ² test of angles against the uniform law on the circle.
pub fn chi_square_uniformity(angles: &[f64], bins: usize) -> Result<ChiSquare, TestError> {
    check_sizes(angles.len(), bins)?;
    let counts = angle_histogram(angles, bins)?;
    let expected = angles.len() as f64 / bins as f64;
    let statistic = counts
        .iter()
        .map(|&c| {
            let d = c as f64 - expected;
            d * d / expected
        })
        .sum::<f64>();
    let df = bins - 1;
    Ok(ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    })
}

/// Two-sample χ² homogeneity test over equal angular bins. Bins empty in
/// both samples are dropped from the statistic and the degrees of freedom.
pub fn two_sample_angle_test(a: &[f64], b: &[f64], bins: usize) -> Result<ChiSquare, TestError> {
    check_sizes(a.len(), bins)?;
    check_sizes(b.len(), bins)?;
    let ca = angle_histogram(a, bins)?;
    let cb = angle_histogram(b, bins)?;
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let total = na + nb;
    let mut statistic = 0.0;
    let mut used = 0usize;
    for (&x, &y) in ca.iter().zip(&cb) {
        let pooled = (x + y) as f64;
        if pooled == 0.0 {
            continue;
        }
        used += 1;
        let ea = na * pooled / total;
        let eb = nb * pooled / total;
        statistic += (x as f64 - ea).powi(2) / ea + (y as f64 - eb).powi(2) / eb;
    }
    let df = used.saturating_sub(1).max(1);
    Ok(ChiSquare {
        statistic,
        df,
        p_value: chi_square_sf(statistic, df),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ln_gamma_known_values() {
        assert!(ln_gamma(1.0).abs() < 1e-14);
        assert!(ln_gamma(2.0).abs() < 1e-14);
        assert!((ln_gamma(0.5) - PI.sqrt().ln()).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn chi_square_two_df_is_exponential() {
        for x in [0.01, 0.5, 2.0, 7.3, 30.0, 120.0] {
            let exact = (-x / 2.0f64).exp();
            let p = chi_square_sf(x, 2);
            assert!((p - exact).abs() <= 1e-12 * exact.max(1e-300) + 1e-300, "x={x}");
        }
    }

    #[test]
    fn q_half_is_erfc() {
        // Q(1/2, x) = erfc(√x); erfc(1) = 0.157299207050285130658...
        assert!((gamma_q(0.5, 1.0) - 0.157_299_207_050_285_13).abs() < 1e-14);
    }

    #[test]
    fn p_plus_q_is_one() {
        for a in [0.5, 1.0, 3.5, 17.0, 50.0] {
            for x in [0.1, 1.0, 4.0, 20.0, 60.0] {
                assert!((gamma_p(a, x) + gamma_q(a, x) - 1.0).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn wilson_contains_estimate() {
        for (h, n) in [(0, 10), (10, 10), (3, 10), (50_000, 100_000), (1, 100_000)] {
            let (lo, hi) = wilson_interval(h, n, Z_95);
            let p = h as f64 / n as f64;
            assert!(lo <= p && p <= hi && lo >= 0.0 && hi <= 1.0);
        }
        let (lo, hi) = wilson_interval(0, 100, Z_95);
        assert_eq!(lo, 0.0);
        assert!(hi > 0.0);
    }

    #[test]
    fn wilson_matches_closed_form() {
        // n = 100, p = 0.5: center 0.5, half = z/(1+z²/n)·√(0.0025 + z²/40000)
        let (lo, hi) = wilson_interval(50, 100, Z_95);
        let z2 = Z_95 * Z_95;
        let half = Z_95 / (1.0 + z2 / 100.0) * (0.0025 + z2 / 40_000.0f64).sqrt();
        assert!((lo - (0.5 - half)).abs() < 1e-15);
        assert!((hi - (0.5 + half)).abs() < 1e-15);
    }

    #[test]
    fn stratified_angles_are_perfectly_uniform() {
        let n = 3600;
        let angles: Vec<f64> = (0..n).map(|k| k as f64 * TAU / n as f64).collect();
        let r = chi_square_uniformity(&angles, 36).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn point_mass_statistic() {
        let angles = vec![1.234; 1000];
        let r = chi_square_uniformity(&angles, 10).unwrap();
        assert!((r.statistic - 9000.0).abs() < 1e-9);
        assert!(r.p_value < 1e-12);
    }

    #[test]
    fn undersized_and_too_few_bins() {
        assert!(matches!(
            chi_square_uniformity(&[0.0; 39], 8),
            Err(TestError::Undersized { min: 40, got: 39 })
        ));
        assert!(matches!(
            chi_square_uniformity(&[0.0; 100], 4),
            Err(TestError::TooFewBins { .. })
        ));
        assert!(two_sample_angle_test(&[0.0; 100], &[0.0; 10], 8).is_err());
    }

    #[test]
    fn two_sample_identical_is_zero() {
        let a: Vec<f64> = (0..500).map(|k| (k as f64 * 0.731).rem_euclid(TAU)).collect();
        let r = two_sample_angle_test(&a, &a, 24).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn two_sample_uniform_vs_point_mass() {
        let n = 2400;
        let a: Vec<f64> = (0..n).map(|k| k as f64 * TAU / n as f64).collect();
        let b = vec![0.1; n];
        let r = two_sample_angle_test(&a, &b, 24).unwrap();
        assert!(r.p_value < 1e-12);
    }
}
