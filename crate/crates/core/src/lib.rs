//! Monte Carlo laboratory for the conformal invariance of planar Brownian
//! motion and the open mapping property of analytic functions.
//!
//! Modules, bottom up:
//!
//! - [`analytic`]: entire functions as expression trees, exact derivatives,
//!   the text grammar, and minima of `|f − v|` on circles.
//! - [`bm`]: Brownian paths stopped on a circle, with reproducible streams.
//! - [`time_change`]: the clock `σ(t) = ∫|f′(B)|²`, its inverse, and image
//!   paths on a uniform image-time grid.
//! - [`estimators`] and [`stats`]: hitting probabilities with Wilson
//!   intervals, χ² uniformity and two-sample tests.
//! - [`omt`]: the open-mapping experiment and its coverage verdict.
//! - [`invariance`]: crossing-angle comparison of image and direct paths.
//!
//! Path `i` of any experiment draws from [`rng::RngStream`] `(seed, i)`, so
//! every result is independent of thread count. See [`par`].

pub mod analytic;
pub mod bm;
pub mod estimators;
pub mod geometry;
pub mod invariance;
pub mod omt;
pub mod par;
pub mod rng;
pub mod serde_complex;
pub mod stats;
pub mod time_change;

pub type Complex = num_complex::Complex64;

pub use analytic::{AnalyticFn, CircleSpec};
pub use bm::{BmPath, SamplerConfig};
pub use par::Exec;
pub use rng::RngStream;
