//! Lévy time change of a sampled path under an analytic map.
//!
//! The clock `σ(t) = ∫₀ᵗ |f′(B_s)|² ds` is integrated with the trapezoid rule
//! on the path samples. Its generalized inverse
//! `C_s = inf{t ≥ 0 : σ(t) ≥ s}` reparameterizes the image `f(B)` so that it
//! runs on Brownian time, and the image path is `f(B_{C_s})` on a uniform grid
//! in `s` with `B` interpolated linearly between samples.

use thiserror::Error;

use crate::analytic::{AnalyticFn, EvalError};
use crate::bm::BmPath;
use crate::geometry::{line_circle_params, project_to_circle};
use crate::Complex;

/// Default number of image-time intervals per path.
pub const DEFAULT_IMAGE_SUBDIVISIONS: u32 = 4096;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TimeChangeError {
    #[error("clock value {s} outside [0, {end}]")]
    OutOfRange { s: f64, end: f64 },
    #[error("degenerate clock: f′ vanishes along the whole sampled path")]
    DegenerateClock,
    #[error("image step must be positive and finite, got {0}")]
    BadImageStep(f64),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Table of `σ` at the path's time stamps.
#[derive(Debug, Clone, PartialEq)]
pub struct ClockTable {
    pub times: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl ClockTable {
    pub fn end(&self) -> f64 {
        *self.sigma.last().expect("clock tables are never empty")
    }

    /// Segment and fraction for clock value `s`: the inverse sits at
    /// `times[k−1] + λ·(times[k] − times[k−1])`. `k == 0` means `s` is the
    /// first knot.
    fn locate(&self, s: f64, from: usize) -> (usize, f64) {
        let k = from + self.sigma[from..].partition_point(|&x| x < s);
        if k == 0 {
            return (0, 1.0);
        }
        let (lo, hi) = (self.sigma[k - 1], self.sigma[k]);
        if hi == s {
            (k, 1.0)
        } else {
            (k, (s - lo) / (hi - lo))
        }
    }
}

pub fn compute_clock(path: &BmPath, f: &AnalyticFn) -> Result<ClockTable, EvalError> {
    let n = path.len();
    let mut sigma = Vec::with_capacity(n);
    let mut prev = f.eval_deriv(path.points[0])?.norm_sqr();
    let mut acc = 0.0;
    sigma.push(acc);
    for k in 1..n {
        let g = f.eval_deriv(path.points[k])?.norm_sqr();
        acc += (path.times[k] - path.times[k - 1]) * (prev + g) / 2.0;
        sigma.push(acc);
        prev = g;
    }
    Ok(ClockTable {
        times: path.times.clone(),
        sigma,
    })
}

/// `C_s`, the smallest path time at which the clock reaches `s`.
pub fn clock_inverse(clock: &ClockTable, s: f64) -> Result<f64, TimeChangeError> {
    let end = clock.end();
    if !(0.0..=end).contains(&s) {
        return Err(TimeChangeError::OutOfRange { s, end });
    }
    let (k, lambda) = clock.locate(s, 0);
    if k == 0 || lambda == 1.0 {
        return Ok(clock.times[k]);
    }
    let (t0, t1) = (clock.times[k - 1], clock.times[k]);
    Ok(t0 + lambda * (t1 - t0))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageStep {
    /// Fixed image-time step.
    Fixed(f64),
    /// `σ_end / n` for each path.
    Subdivisions(u32),
}

impl Default for ImageStep {
    fn default() -> Self {
        ImageStep::Subdivisions(DEFAULT_IMAGE_SUBDIVISIONS)
    }
}

impl ImageStep {
    fn resolve(self, sigma_end: f64) -> Result<f64, TimeChangeError> {
        let step = match self {
            ImageStep::Fixed(h) => h,
            ImageStep::Subdivisions(n) => sigma_end / n.max(1) as f64,
        };
        if step > 0.0 && step.is_finite() {
            Ok(step)
        } else {
            Err(TimeChangeError::BadImageStep(step))
        }
    }
}

/// `f(B_{C_s})` on the grid `s_k = k·image_step`, plus the terminal point.
#[derive(Debug, Clone, PartialEq)]
pub struct ImagePath {
    pub image_step: f64,
    pub image_times: Vec<f64>,
    pub points: Vec<Complex>,
    /// `f` at the path's exit point.
    pub terminal_point: Complex,
    /// `σ_end`, the discrete stand-in for `C⁻¹_τ`.
    pub terminal_image_time: f64,
}

impl ImagePath {
    /// Grid vertices followed by the terminal vertex when the grid stops
    /// short of `σ_end`.
    pub fn polyline(&self) -> (Vec<f64>, Vec<Complex>) {
        let mut times = self.image_times.clone();
        let mut points = self.points.clone();
        if times.last().is_some_and(|&t| t < self.terminal_image_time) {
            times.push(self.terminal_image_time);
            points.push(self.terminal_point);
        }
        (times, points)
    }
}

pub fn map_path(path: &BmPath, f: &AnalyticFn, image_step: ImageStep) -> Result<ImagePath, TimeChangeError> {
    let clock = compute_clock(path, f)?;
    map_path_with_clock(path, &clock, f, image_step)
}

pub fn map_path_with_clock(
    path: &BmPath,
    clock: &ClockTable,
    f: &AnalyticFn,
    image_step: ImageStep,
) -> Result<ImagePath, TimeChangeError> {
    let end = clock.end();
    if end <= 0.0 {
        return Err(TimeChangeError::DegenerateClock);
    }
    let step = image_step.resolve(end)?;
    let count = (end / step).floor() as usize;
    let mut image_times = Vec::with_capacity(count + 1);
    let mut points = Vec::with_capacity(count + 1);
    let mut cursor = 0;
    for k in 0..=count {
        let s = k as f64 * step;
        if s > end {
            break;
        }
        let (j, lambda) = clock.locate(s, cursor);
        cursor = j.saturating_sub(1);
        let b = if j == 0 {
            path.points[0]
        } else if lambda == 1.0 {
            path.points[j]
        } else {
            let (p0, p1) = (path.points[j - 1], path.points[j]);
            p0 + (p1 - p0) * lambda
        };
        image_times.push(s);
        points.push(f.eval(b)?);
    }
    Ok(ImagePath {
        image_step: step,
        image_times,
        points,
        terminal_point: f.eval(path.exit_point())?,
        terminal_image_time: end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Crossing {
    pub image_time: f64,
    pub point: Complex,
    /// Index of the polyline vertex that starts the crossing segment.
    pub segment: usize,
}

/// Relative slack for treating a starting point as already on the circle.
const ON_CIRCLE_REL: f64 = 1e-12;

/// First crossing of `|w − center| = radius` along the image polyline.
pub fn first_crossing(image: &ImagePath, center: Complex, radius: f64) -> Option<Crossing> {
    let (times, points) = image.polyline();
    first_crossing_polyline(&times, &points, center, radius)
}

/// First segment whose endpoints straddle the circle; the crossing point is
/// placed on the circle and its time interpolated along the segment.
pub fn first_crossing_polyline(
    times: &[f64],
    points: &[Complex],
    center: Complex,
    radius: f64,
) -> Option<Crossing> {
    let first = *points.first()?;
    let d0 = (first - center).norm();
    if (d0 - radius).abs() <= ON_CIRCLE_REL * radius {
        return Some(Crossing {
            image_time: times[0],
            point: project_to_circle(first, center, radius),
            segment: 0,
        });
    }
    let mut outside = d0 > radius;
    for k in 0..points.len() - 1 {
        let d1 = (points[k + 1] - center).norm();
        let next_outside = d1 > radius;
        if next_outside != outside || d1 == radius {
            let s = line_circle_params(points[k], points[k + 1], center, radius)
                .into_iter()
                .find(|s| (0.0..=1.0).contains(s))
                .unwrap_or(1.0);
            let p = points[k] + (points[k + 1] - points[k]) * s;
            return Some(Crossing {
                image_time: times[k] + s * (times[k + 1] - times[k]),
                point: project_to_circle(p, center, radius),
                segment: k,
            });
        }
        outside = next_outside;
    }
    None
}
