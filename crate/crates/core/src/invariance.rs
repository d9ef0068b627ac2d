//! Distributional check of the time change.
//!
//! Image paths `f(B_{C_s})` from `a` and direct Brownian paths from
//! `v = f(a)` should reach the circle `|w − v| = m` at identically
//! distributed angles. The two angle samples are compared with a two-sample
//! χ² test.

use serde::Serialize;

use crate::analytic::CircleSpec;
use crate::bm::{exit_angle, normalize_angle, sample_path_into, BmPath, SamplerConfig};
use crate::omt::{prepare, OmtConfig, OmtError};
use crate::par::{map_range, DEFAULT_BATCH};
use crate::rng::RngStream;
use crate::serde_complex;
use crate::stats::{two_sample_angle_test, ChiSquare, TestError};
use crate::time_change::{compute_clock, first_crossing_polyline, map_path_with_clock};
use crate::Complex;

/// Stream ids for direct paths start here so they never collide with the
/// image paths' ids `0..n`.
pub const DIRECT_STREAM_OFFSET: u64 = 1 << 40;
pub const DEFAULT_BINS: usize = 24;
pub const DEFAULT_ALPHA: f64 = 1e-3;

#[derive(Debug, Clone, Serialize)]
pub struct InvarianceReport {
    pub r: f64,
    #[serde(with = "serde_complex")]
    pub v: Complex,
    pub m: f64,
    pub n_paths: u64,
    /// Image paths that produced a crossing angle.
    pub image_crossings: u64,
    /// Image paths lost to sampler errors or missing crossings.
    pub image_dropped: u64,
    pub direct_samples: u64,
    pub bins: usize,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub alpha: f64,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CrossingAngles {
    pub image: Vec<f64>,
    pub direct: Vec<f64>,
    pub image_dropped: u64,
}

/// Crossing angles of the image paths and of direct paths. `cfg.n_paths`
/// paths of each kind; `direct_sampler` defaults to
/// [`SamplerConfig::for_radius`] at `m`.
pub fn crossing_angles(
    cfg: &OmtConfig,
    direct_sampler: Option<SamplerConfig>,
) -> Result<(crate::omt::Setup, CrossingAngles), OmtError> {
    let setup = prepare(cfg)?;
    let (v, m) = (setup.v, setup.gamma.m);
    let n = cfg.n_paths;
    let batches = n.div_ceil(DEFAULT_BATCH);

    let image_batches = map_range(batches, cfg.exec, |b| {
        let mut path = BmPath::default();
        let mut out = Vec::new();
        let mut dropped = 0u64;
        for i in b * DEFAULT_BATCH..((b + 1) * DEFAULT_BATCH).min(n) {
            let angle = (|| {
                sample_path_into(&mut path, cfg.a, setup.circle, &setup.sampler, RngStream::new(cfg.seed, i)).ok()?;
                let clock = compute_clock(&path, &cfg.f).ok()?;
                let image = map_path_with_clock(&path, &clock, &cfg.f, cfg.image_step).ok()?;
                let (times, points) = image.polyline();
                let x = first_crossing_polyline(&times, &points, v, m)?;
                let w = x.point - v;
                Some(normalize_angle(w.im.atan2(w.re)))
            })();
            match angle {
                Some(a) => out.push(a),
                None => dropped += 1,
            }
        }
        (out, dropped)
    });

    let target = CircleSpec::new(v, m)?;
    let direct_cfg = direct_sampler.unwrap_or_else(|| SamplerConfig::for_radius(m));
    let direct_batches = map_range(batches, cfg.exec, |b| {
        let mut path = BmPath::default();
        let mut out = Vec::new();
        for i in b * DEFAULT_BATCH..((b + 1) * DEFAULT_BATCH).min(n) {
            let stream = RngStream::new(cfg.seed, DIRECT_STREAM_OFFSET + i);
            if sample_path_into(&mut path, v, target, &direct_cfg, stream).is_ok() {
                out.push(exit_angle(&path, &target).expect("sampler stops on the circle"));
            }
        }
        out
    });

    let mut angles = CrossingAngles {
        image: Vec::with_capacity(n as usize),
        direct: Vec::with_capacity(n as usize),
        image_dropped: 0,
    };
    for (out, dropped) in image_batches {
        angles.image.extend(out);
        angles.image_dropped += dropped;
    }
    for out in direct_batches {
        angles.direct.extend(out);
    }
    Ok((setup, angles))
}

#[derive(Debug, thiserror::Error)]
pub enum InvarianceError {
    #[error(transparent)]
    Omt(#[from] OmtError),
    #[error(transparent)]
    Test(#[from] TestError),
}

/// Two-sample test of image against direct crossing angles; `direct_sampler`
/// as in [`crossing_angles`].
pub fn invariance_check(
    cfg: &OmtConfig,
    direct_sampler: Option<SamplerConfig>,
    bins: usize,
    alpha: f64,
) -> Result<InvarianceReport, InvarianceError> {
    let (setup, angles) = crossing_angles(cfg, direct_sampler)?;
    let ChiSquare {
        statistic,
        df,
        p_value,
    } = two_sample_angle_test(&angles.image, &angles.direct, bins)?;
    Ok(InvarianceReport {
        r: setup.r,
        v: setup.v,
        m: setup.gamma.m,
        n_paths: cfg.n_paths,
        image_crossings: angles.image.len() as u64,
        image_dropped: angles.image_dropped,
        direct_samples: angles.direct.len() as u64,
        bins,
        statistic,
        df,
        p_value,
        alpha,
        passed: p_value > alpha,
    })
}
