use std::f64::consts::{PI, TAU};

use thiserror::Error;

use super::{AnalyticFn, EvalError};
use crate::Complex;

/// The circle `{|z − a| = r}`, also read as the open disk `D(a, r)` it bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleSpec {
    pub center: Complex,
    pub radius: f64,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CircleError {
    #[error("circle radius must be positive and finite, got {0}")]
    BadRadius(f64),
    #[error("circle center must be finite")]
    BadCenter,
    #[error("at least {min} circle samples are required, got {got}")]
    TooFewSamples { min: usize, got: usize },
    #[error(transparent)]
    Eval(#[from] EvalError),
}

impl CircleSpec {
    pub fn new(center: Complex, radius: f64) -> Result<Self, CircleError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(CircleError::BadRadius(radius));
        }
        if !(center.re.is_finite() && center.im.is_finite()) {
            return Err(CircleError::BadCenter);
        }
        Ok(Self { center, radius })
    }

    pub fn point_at(&self, theta: f64) -> Complex {
        self.center + Complex::from_polar(self.radius, theta)
    }

    pub fn contains_strictly(&self, z: Complex) -> bool {
        (z - self.center).norm() < self.radius
    }
}

/// Minimum of `|f − v|` over a circle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CircleMin {
    /// Smallest value found; an upper estimate of the true minimum.
    pub m: f64,
    /// Angle in `[0, 2π)` where `m` was attained.
    pub argmin_angle: f64,
    /// Lipschitz slack `L·r·π/K`, with `L` the largest sampled `|f′|` on the
    /// circle. The true minimum is at least `m − tolerance` whenever `L`
    /// bounds `|f′|` on the circle.
    pub tolerance: f64,
}

pub const MIN_CIRCLE_SAMPLES: usize = 64;

pub fn min_on_circle(
    f: &AnalyticFn,
    circle: CircleSpec,
    v: Complex,
    samples: usize,
) -> Result<CircleMin, CircleError> {
    min_on_circle_with_offset(f, circle, v, samples, 0.0)
}

/// [`min_on_circle`] with the sampling grid rotated to `θ_k = offset + 2πk/K`.
pub fn min_on_circle_with_offset(
    f: &AnalyticFn,
    circle: CircleSpec,
    v: Complex,
    samples: usize,
    offset: f64,
) -> Result<CircleMin, CircleError> {
    if samples < MIN_CIRCLE_SAMPLES {
        return Err(CircleError::TooFewSamples {
            min: MIN_CIRCLE_SAMPLES,
            got: samples,
        });
    }
    let step = TAU / samples as f64;
    let dist = |theta: f64| -> Result<f64, EvalError> {
        Ok((f.eval(circle.point_at(theta))? - v).norm())
    };

    let mut best = (f64::INFINITY, 0usize);
    let mut lipschitz = 0.0f64;
    for k in 0..samples {
        let theta = offset + step * k as f64;
        let z = circle.point_at(theta);
        let d = (f.eval(z)? - v).norm();
        if d < best.0 {
            best = (d, k);
        }
        lipschitz = lipschitz.max(f.eval_deriv(z)?.norm());
    }

    let center = offset + step * best.1 as f64;
    let (theta, value) = golden_section(&dist, center - step, center + step)?;
    let (m, argmin) = if value < best.0 {
        (value, theta)
    } else {
        (best.0, center)
    };
    Ok(CircleMin {
        m,
        argmin_angle: argmin.rem_euclid(TAU),
        tolerance: lipschitz * circle.radius * PI / samples as f64,
    })
}

fn golden_section<F>(g: &F, mut lo: f64, mut hi: f64) -> Result<(f64, f64), EvalError>
where
    F: Fn(f64) -> Result<f64, EvalError>,
{
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut x1 = hi - inv_phi * (hi - lo);
    let mut x2 = lo + inv_phi * (hi - lo);
    let mut g1 = g(x1)?;
    let mut g2 = g(x2)?;
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + lo.abs()) {
            break;
        }
        if g1 <= g2 {
            hi = x2;
            x2 = x1;
            g2 = g1;
            x1 = hi - inv_phi * (hi - lo);
            g1 = g(x1)?;
        } else {
            lo = x1;
            x1 = x2;
            g1 = g2;
            x2 = lo + inv_phi * (hi - lo);
            g2 = g(x2)?;
        }
    }
    Ok(if g1 <= g2 { (x1, g1) } else { (x2, g2) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dense_min(f: &AnalyticFn, circle: CircleSpec, v: Complex, n: usize) -> f64 {
        (0..n)
            .map(|k| (f.eval(circle.point_at(TAU * k as f64 / n as f64)).unwrap() - v).norm())
            .fold(f64::INFINITY, f64::min)
    }

    fn unit() -> CircleSpec {
        CircleSpec::new(Complex::new(0.0, 0.0), 1.0).unwrap()
    }

    #[test]
    fn square_on_unit_circle() {
        let f: AnalyticFn = "z^2".parse().unwrap();
        let origin = Complex::new(0.0, 0.0);
        let res = min_on_circle(&f, unit(), origin, 1024).unwrap();
        let oracle = dense_min(&f, unit(), origin, 1_000_000);
        assert!((oracle - 1.0).abs() < 1e-12);
        assert!((res.m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn identity_on_unit_circle() {
        let res = min_on_circle(&AnalyticFn::identity(), unit(), Complex::new(0.0, 0.0), 64).unwrap();
        assert!((res.m - 1.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_plus_linear_on_half_circle() {
        let f: AnalyticFn = "z^2+z".parse().unwrap();
        let circle = CircleSpec::new(Complex::new(0.0, 0.0), 0.5).unwrap();
        let origin = Complex::new(0.0, 0.0);
        let oracle = dense_min(&f, circle, origin, 1_000_000);
        assert!((oracle - 0.25).abs() < 1e-10);
        // Offset grid so the minimizer at θ = π is not a grid point.
        let res = min_on_circle_with_offset(&f, circle, origin, 100, 0.0123).unwrap();
        assert!((res.m - 0.25).abs() < 1e-12, "m = {}", res.m);
        assert!((res.argmin_angle - PI).abs() < 1e-5);
        assert!(res.m >= oracle - 1e-12);
    }

    #[test]
    fn rotation_of_grid_stays_within_tolerance() {
        let f: AnalyticFn = "exp(z)+z^3".parse().unwrap();
        let circle = CircleSpec::new(Complex::new(0.2, -0.1), 0.7).unwrap();
        let v = Complex::new(0.5, 0.5);
        let base = min_on_circle(&f, circle, v, 128).unwrap();
        for k in 1..20 {
            let r = min_on_circle_with_offset(&f, circle, v, 128, 0.37 * k as f64).unwrap();
            assert!((r.m - base.m).abs() <= base.tolerance.max(r.tolerance));
        }
    }

    #[test]
    fn zero_minimum_is_legal() {
        let f: AnalyticFn = "z^2+z".parse().unwrap();
        let res = min_on_circle(&f, unit(), Complex::new(0.0, 0.0), 1024).unwrap();
        assert!(res.m < 1e-12);
    }

    #[test]
    fn requires_enough_samples() {
        let err = min_on_circle(&AnalyticFn::identity(), unit(), Complex::new(0.0, 0.0), 32);
        assert!(matches!(err, Err(CircleError::TooFewSamples { got: 32, .. })));
    }

    #[test]
    fn rejects_bad_radius() {
        assert!(CircleSpec::new(Complex::new(0.0, 0.0), 0.0).is_err());
        assert!(CircleSpec::new(Complex::new(0.0, 0.0), -1.0).is_err());
        assert!(CircleSpec::new(Complex::new(f64::NAN, 0.0), 1.0).is_err());
    }
}
