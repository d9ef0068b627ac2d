//! Hitting-probability estimators with confidence intervals.
//!
//! [`estimate_arc_first_hit`] checks the harmonic-measure identity for a disk
//! exited from its center: the first passage through `|z − a| = r′` lands in
//! an open arc of angular width `θ₂ − θ₁` with probability `(θ₂ − θ₁)/2π`.
//! [`estimate_open_set_hit`] estimates the chance of visiting an open set
//! before leaving the disk; on sampled points this is biased low.

use std::f64::consts::TAU;

use serde::Serialize;
use thiserror::Error;

use crate::analytic::CircleSpec;
use crate::bm::{exit_angle, normalize_angle, sample_path_into, BmPath, SampleError, SamplerConfig};
use crate::par::{fold_batches, map_range, Exec, DEFAULT_BATCH};
use crate::rng::RngStream;
use crate::stats::{wilson_interval, Z_95};
use crate::Complex;

/// The open arc `{a + r′e^{iθ} : θ₁ < θ < θ₂}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArcSpec {
    pub center: Complex,
    pub arc_radius: f64,
    pub theta1: f64,
    pub theta2: f64,
    // Fixed at construction so rotation leaves it bit-identical.
    width: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EstimateError {
    #[error("arc radius must be positive, got {0}")]
    ArcRadius(f64),
    #[error("arc width θ₂ − θ₁ must lie in (0, 2π], got {0}")]
    ArcWidth(f64),
    #[error("arc center differs from the circle center")]
    CenterMismatch,
    #[error("arc radius {arc} must be smaller than the circle radius {circle}")]
    Geometry { arc: f64, circle: f64 },
    #[error("start point must be strictly inside the circle")]
    StartOutside,
    #[error("path {index}: {source}")]
    Sample { index: u64, source: SampleError },
}

impl ArcSpec {
    pub fn new(center: Complex, arc_radius: f64, theta1: f64, theta2: f64) -> Result<Self, EstimateError> {
        if !(arc_radius > 0.0 && arc_radius.is_finite()) {
            return Err(EstimateError::ArcRadius(arc_radius));
        }
        let width = theta2 - theta1;
        if !(width > 0.0 && width <= TAU) {
            return Err(EstimateError::ArcWidth(width));
        }
        Ok(Self {
            center,
            arc_radius,
            theta1,
            theta2,
            width,
        })
    }

    pub fn width(&self) -> f64 {
        self.width
    }

    /// Whether angle `phi` falls strictly inside the window. Landings on a
    /// boundary angle are misses.
    pub fn contains_angle(&self, phi: f64) -> bool {
        let delta = normalize_angle(phi - self.theta1);
        delta > 0.0 && delta < self.width()
    }

    pub fn rotated(&self, phi: f64) -> Self {
        Self {
            theta1: self.theta1 + phi,
            theta2: self.theta2 + phi,
            ..*self
        }
    }

    /// Harmonic measure of the arc seen from the center.
    pub fn reference_probability(&self) -> f64 {
        self.width() / TAU
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimateReport {
    pub n: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
    pub reference: Option<f64>,
    pub passed: Option<bool>,
}

impl EstimateReport {
    pub fn from_counts(hits: u64, n: u64, reference: Option<f64>) -> Self {
        let p_hat = if n == 0 { 0.0 } else { hits as f64 / n as f64 };
        let (ci_low, ci_high) = wilson_interval(hits, n, Z_95);
        let passed = match reference {
            Some(p) => {
                // Wilson interval widened to three standard errors at the
                // reference probability.
                let se = (p * (1.0 - p) / n.max(1) as f64).sqrt();
                let lo = ci_low.min(p_hat - 3.0 * se);
                let hi = ci_high.max(p_hat + 3.0 * se);
                Some(lo <= p && p <= hi)
            }
            None => Some(hits > 0),
        };
        Self {
            n,
            hits,
            p_hat,
            ci_low,
            ci_high,
            reference,
            passed,
        }
    }

    pub fn standard_error(&self) -> f64 {
        (self.p_hat * (1.0 - self.p_hat) / self.n.max(1) as f64).sqrt()
    }
}

/// Exit angles of `n` paths started at the circle's center. Path `i` uses
/// stream `(seed, i)`.
pub fn center_exit_angles(
    circle: CircleSpec,
    n: u64,
    cfg: &SamplerConfig,
    seed: u64,
    exec: Exec,
) -> Result<Vec<f64>, EstimateError> {
    let batches = map_range(n.div_ceil(DEFAULT_BATCH), exec, |b| {
        let mut path = BmPath::default();
        let mut out = Vec::with_capacity(DEFAULT_BATCH as usize);
        for i in b * DEFAULT_BATCH..((b + 1) * DEFAULT_BATCH).min(n) {
            sample_path_into(&mut path, circle.center, circle, cfg, RngStream::new(seed, i))
                .map_err(|source| EstimateError::Sample { index: i, source })?;
            out.push(exit_angle(&path, &circle).expect("sampler stops on the circle"));
        }
        Ok(out)
    });
    let mut angles = Vec::with_capacity(n as usize);
    for batch in batches {
        angles.extend(batch?);
    }
    Ok(angles)
}

/// Exit times of `n` paths started at the circle's center.
pub fn center_exit_times(
    circle: CircleSpec,
    n: u64,
    cfg: &SamplerConfig,
    seed: u64,
    exec: Exec,
) -> Result<Vec<f64>, EstimateError> {
    let batches = map_range(n.div_ceil(DEFAULT_BATCH), exec, |b| {
        let mut path = BmPath::default();
        let mut out = Vec::with_capacity(DEFAULT_BATCH as usize);
        for i in b * DEFAULT_BATCH..((b + 1) * DEFAULT_BATCH).min(n) {
            sample_path_into(&mut path, circle.center, circle, cfg, RngStream::new(seed, i))
                .map_err(|source| EstimateError::Sample { index: i, source })?;
            out.push(path.exit_time());
        }
        Ok(out)
    });
    let mut times = Vec::with_capacity(n as usize);
    for batch in batches {
        times.extend(batch?);
    }
    Ok(times)
}

pub fn count_arc_hits(angles: &[f64], arc: &ArcSpec) -> u64 {
    angles.iter().filter(|&&phi| arc.contains_angle(phi)).count() as u64
}

/// Fraction of first passages through `|z − a| = r′` that land in the arc.
/// Paths start at the center and stop on the inner circle; `cfg` is used as
/// given.
pub fn estimate_arc_first_hit(
    circle: CircleSpec,
    arc: ArcSpec,
    n: u64,
    cfg: &SamplerConfig,
    seed: u64,
    exec: Exec,
) -> Result<EstimateReport, EstimateError> {
    if arc.center != circle.center {
        return Err(EstimateError::CenterMismatch);
    }
    if arc.arc_radius >= circle.radius {
        return Err(EstimateError::Geometry {
            arc: arc.arc_radius,
            circle: circle.radius,
        });
    }
    let inner = CircleSpec::new(arc.center, arc.arc_radius).expect("validated arc radius");
    let angles = center_exit_angles(inner, n, cfg, seed, exec)?;
    let hits = count_arc_hits(&angles, &arc);
    Ok(EstimateReport::from_counts(hits, n, Some(arc.reference_probability())))
}

/// Fraction of paths from `start` with a sampled point in the set before
/// leaving the circle.
pub fn estimate_open_set_hit<P>(
    circle: CircleSpec,
    start: Complex,
    predicate: P,
    n: u64,
    cfg: &SamplerConfig,
    seed: u64,
    exec: Exec,
) -> Result<EstimateReport, EstimateError>
where
    P: Fn(Complex) -> bool + Sync + Send,
{
    if !circle.contains_strictly(start) {
        return Err(EstimateError::StartOutside);
    }
    let (hits, err, _) = fold_batches(
        n,
        DEFAULT_BATCH,
        exec,
        || (0u64, None::<EstimateError>, BmPath::default()),
        |(hits, err, path), i| {
            if err.is_some() {
                return;
            }
            match sample_path_into(path, start, circle, cfg, RngStream::new(seed, i)) {
                Ok(()) => {
                    if path.points.iter().any(|&z| predicate(z)) {
                        *hits += 1;
                    }
                }
                Err(source) => *err = Some(EstimateError::Sample { index: i, source }),
            }
        },
        |acc, (h, e, _)| {
            acc.0 += h;
            if acc.1.is_none() {
                acc.1 = e;
            }
        },
    );
    if let Some(e) = err {
        return Err(e);
    }
    Ok(EstimateReport::from_counts(hits, n, None))
}

/// Largest open arc of the circle `|z − a| = r′` inside the disk `D(c, ρ)`,
/// as angular window `(θ₁, θ₂)`; `None` if they do not overlap in an arc.
pub fn inscribed_arc(a: Complex, arc_radius: f64, disk_center: Complex, disk_radius: f64) -> Option<ArcSpec> {
    let w = disk_center - a;
    let d = w.norm();
    if d == 0.0 {
        return if arc_radius < disk_radius {
            ArcSpec::new(a, arc_radius, 0.0, TAU).ok()
        } else {
            None
        };
    }
    // Points a + r′e^{iθ} with |·| < ρ: cos(θ − φ) > (r′² + d² − ρ²)/(2r′d).
    let cos_half = (arc_radius * arc_radius + d * d - disk_radius * disk_radius) / (2.0 * arc_radius * d);
    if cos_half >= 1.0 {
        return None;
    }
    let phi = w.im.atan2(w.re);
    let half = if cos_half <= -1.0 { std::f64::consts::PI } else { cos_half.acos() };
    ArcSpec::new(a, arc_radius, phi - half, phi + half).ok()
}
