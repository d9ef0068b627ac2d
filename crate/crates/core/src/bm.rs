//! Planar Brownian paths stopped on a circle.
//!
//! Increments are exact bivariate Gaussians with variance `step_dt` per
//! coordinate. The step that leaves the disk is cut at its intersection with
//! the circle, and the exit time is interpolated linearly along that step, so
//! exit positions carry no overshoot.

use std::f64::consts::TAU;
use std::io::{self, Write};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::analytic::CircleSpec;
use crate::geometry::{project_to_circle, segment_exit_param};
use crate::rng::RngStream;
use crate::Complex;

/// Default time step relative to `r²`.
pub const DEFAULT_STEP_FACTOR: f64 = 1e-4;
pub const DEFAULT_BOUNDARY_TOL: f64 = 1e-9;
/// Default step budget, in units of `r²/step_dt`. The mean exit time from
/// the center is `r²/2`, so this is 200 mean exit times.
pub const DEFAULT_BUDGET_FACTOR: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerConfig {
    pub step_dt: f64,
    pub boundary_tol: f64,
    pub max_steps: u64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConfigError {
    #[error("step_dt must be positive and finite, got {0}")]
    StepDt(f64),
    #[error("boundary_tol must be positive and finite, got {0}")]
    BoundaryTol(f64),
    #[error("max_steps must be at least 1")]
    MaxSteps,
}

impl SamplerConfig {
    pub fn new(step_dt: f64, boundary_tol: f64, max_steps: u64) -> Result<Self, ConfigError> {
        if !(step_dt > 0.0 && step_dt.is_finite()) {
            return Err(ConfigError::StepDt(step_dt));
        }
        if !(boundary_tol > 0.0 && boundary_tol.is_finite()) {
            return Err(ConfigError::BoundaryTol(boundary_tol));
        }
        if max_steps == 0 {
            return Err(ConfigError::MaxSteps);
        }
        Ok(Self {
            step_dt,
            boundary_tol,
            max_steps,
        })
    }

    /// Scale-aware defaults for paths stopped on a circle of radius `r`.
    pub fn for_radius(r: f64) -> Self {
        Self::with_step(DEFAULT_STEP_FACTOR * r * r, r)
    }

    /// Given step with the default tolerance and a budget scaled to `r`.
    pub fn with_step(step_dt: f64, r: f64) -> Self {
        let max_steps = (DEFAULT_BUDGET_FACTOR * r * r / step_dt).ceil().max(1000.0) as u64;
        Self {
            step_dt,
            boundary_tol: DEFAULT_BOUNDARY_TOL,
            max_steps,
        }
    }
}

/// A sampled path. The final sample is the exit point on the stopping circle.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BmPath {
    pub times: Vec<f64>,
    pub points: Vec<Complex>,
}

impl BmPath {
    pub fn exit_index(&self) -> usize {
        self.points.len() - 1
    }

    pub fn exit_point(&self) -> Complex {
        self.points[self.exit_index()]
    }

    pub fn exit_time(&self) -> f64 {
        self.times[self.exit_index()]
    }

    pub fn start(&self) -> Complex {
        self.points[0]
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn clear(&mut self) {
        self.times.clear();
        self.points.clear();
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SampleError {
    #[error("start point is not strictly inside the stopping circle")]
    StartOutside,
    #[error("step budget of {max_steps} exceeded before exit")]
    BudgetExceeded { max_steps: u64, partial: Box<BmPath> },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("path does not end on the circle: |exit − a| = {distance}, radius {radius}")]
pub struct NotStoppedOnCircle {
    pub distance: f64,
    pub radius: f64,
}

pub fn sample_path_until_exit(
    start: Complex,
    circle: CircleSpec,
    cfg: &SamplerConfig,
    rng: RngStream,
) -> Result<BmPath, SampleError> {
    let mut path = BmPath::default();
    sample_path_into(&mut path, start, circle, cfg, rng)?;
    Ok(path)
}

/// Fills `path` in place, reusing its buffers.
pub fn sample_path_into(
    path: &mut BmPath,
    start: Complex,
    circle: CircleSpec,
    cfg: &SamplerConfig,
    stream: RngStream,
) -> Result<(), SampleError> {
    path.clear();
    let a = circle.center;
    let r = circle.radius;
    let r2 = r * r;
    if (start - a).norm_sqr() >= r2 {
        return Err(SampleError::StartOutside);
    }
    let mut rng = stream.generator();
    let sd = cfg.step_dt.sqrt();
    let mut x = start;
    let mut t = 0.0;
    path.times.push(t);
    path.points.push(x);
    for _ in 0..cfg.max_steps {
        let dx: f64 = rng.sample(StandardNormal);
        let dy: f64 = rng.sample(StandardNormal);
        let y = x + Complex::new(sd * dx, sd * dy);
        if (y - a).norm_sqr() >= r2 {
            let s = segment_exit_param(x, y, a, r);
            let hit = x + (y - x) * s;
            debug_assert!(((hit - a).norm() - r).abs() <= cfg.boundary_tol.max(1e-12 * r));
            path.points.push(project_to_circle(hit, a, r));
            path.times.push(t + s * cfg.step_dt);
            return Ok(());
        }
        x = y;
        t += cfg.step_dt;
        path.times.push(t);
        path.points.push(x);
    }
    Err(SampleError::BudgetExceeded {
        max_steps: cfg.max_steps,
        partial: Box::new(std::mem::take(path)),
    })
}

/// Tolerance used to decide whether a path ends on a given circle.
fn stop_tolerance(circle: &CircleSpec) -> f64 {
    1e-9 * circle.radius.max(1.0)
}

/// `arg(exit − a)` in `[0, 2π)`.
pub fn exit_angle(path: &BmPath, circle: &CircleSpec) -> Result<f64, NotStoppedOnCircle> {
    let w = path.exit_point() - circle.center;
    let distance = w.norm();
    if (distance - circle.radius).abs() > stop_tolerance(circle) {
        return Err(NotStoppedOnCircle {
            distance,
            radius: circle.radius,
        });
    }
    Ok(normalize_angle(w.im.atan2(w.re)))
}

/// Maps an angle into `[0, 2π)`.
pub fn normalize_angle(theta: f64) -> f64 {
    let a = theta.rem_euclid(TAU);
    // rem_euclid can round up to exactly 2π for tiny negative inputs.
    if a >= TAU {
        0.0
    } else {
        a
    }
}

/// Index of the first sample (up to and including the exit) in the set.
pub fn first_hit_of_set<P>(path: &BmPath, predicate: P) -> Option<usize>
where
    P: Fn(Complex) -> bool,
{
    path.points.iter().position(|&z| predicate(z))
}

/// Writes paths as CSV with header `t,re,im`. Each path starts again at
/// `t = 0`. Intended for debug-sized dumps.
pub fn write_paths_csv<'a, W, I>(mut out: W, paths: I) -> io::Result<()>
where
    W: Write,
    I: IntoIterator<Item = (&'a [f64], &'a [Complex])>,
{
    writeln!(out, "t,re,im")?;
    for (times, points) in paths {
        for (t, z) in times.iter().zip(points) {
            writeln!(out, "{t},{},{}", z.re, z.im)?;
        }
    }
    out.flush()
}
