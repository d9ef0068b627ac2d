//! The open-mapping experiment.
//!
//! Given `f` and a point `a` of a disk `W`, with `v = f(a)`:
//!
//! 1. pick `r` with `D̄(a, r) ⊆ W` and `f ≠ v` on `|z − a| = r`;
//! 2. sample the image curve `γ = f(|z − a| = r)` and its distance `m` to `v`;
//! 3. run Brownian paths from `a` to the circle, push each through the time
//!    change, and check that the image crosses `|w − v| = m` no later than it
//!    reaches its terminal point on `γ`;
//! 4. tally which grid cells of `D(v, 0.95·m)` the images visit before that
//!    crossing.
//!
//! Full cell coverage with zero crossing violations is the experiment's
//! verdict that `D(v, m)` lies in `f(D̄(a, r))`.

use std::f64::consts::TAU;
use std::io::{self, Write};

use serde::Serialize;
use thiserror::Error;

use crate::analytic::{min_on_circle, AnalyticFn, CircleError, CircleSpec, EvalError};
use crate::bm::{sample_path_into, BmPath, SampleError, SamplerConfig};
use crate::par::{fold_batches, Exec, DEFAULT_BATCH};
use crate::rng::RngStream;
use crate::serde_complex;
use crate::time_change::{
    compute_clock, first_crossing_polyline, map_path_with_clock, ImagePath, ImageStep, TimeChangeError,
};
use crate::Complex;

pub const DEFAULT_MARGIN_TOL: f64 = 1e-6;
pub const MAX_HALVINGS: u32 = 60;
/// Circle samples used while searching for a radius.
pub const SELECT_SAMPLES: usize = 1024;
pub const MIN_GAMMA_SAMPLES: usize = 256;
pub const DEFAULT_GAMMA_SAMPLES: usize = 4096;
/// Only cells inside `D(v, CELL_DISK_FRACTION·m)` are tallied.
pub const CELL_DISK_FRACTION: f64 = 0.95;

/// The open set `W`, represented as a disk.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DomainSpec {
    #[serde(with = "serde_complex")]
    pub center: Complex,
    pub radius: f64,
}

impl DomainSpec {
    pub fn new(center: Complex, radius: f64) -> Result<Self, OmtError> {
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(OmtError::BadDomain(radius));
        }
        Ok(Self { center, radius })
    }

    /// Distance from `a` to the boundary; positive iff `a` is inside.
    pub fn clearance(&self, a: Complex) -> f64 {
        self.radius - (a - self.center).norm()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OmtError {
    #[error("nonconstant required: f is constant")]
    ConstantFunction,
    #[error("domain radius must be positive and finite, got {0}")]
    BadDomain(f64),
    #[error("a must lie strictly inside W")]
    StartOutsideDomain,
    #[error("no admissible radius after {halvings} halvings from r0 = {r0}")]
    RadiusSelection { r0: f64, halvings: u32 },
    #[error("degenerate margin: m = {m} does not exceed {tol}")]
    DegenerateMargin { m: f64, tol: f64 },
    #[error("γ needs at least {MIN_GAMMA_SAMPLES} samples, got {0}")]
    TooFewGammaSamples(usize),
    #[error("n_paths must be at least 1")]
    NoPaths,
    #[error("grid must have at least one cell per axis")]
    EmptyGrid,
    #[error("invalid radius {0}")]
    BadRadius(f64),
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Radius search. Starting from `r0` (default: half of `a`'s clearance in
/// `W`), halves `r` until the closed disk fits in `W` and
/// `min |f − v| > margin_tol` on the circle.
pub fn select_radius(
    f: &AnalyticFn,
    a: Complex,
    domain: &DomainSpec,
    v: Complex,
    r0: Option<f64>,
    margin_tol: f64,
) -> Result<f64, OmtError> {
    if !f.is_nonconstant() {
        return Err(OmtError::ConstantFunction);
    }
    let clearance = domain.clearance(a);
    if clearance <= 0.0 {
        return Err(OmtError::StartOutsideDomain);
    }
    let r0 = r0.unwrap_or(clearance / 2.0);
    if !(r0 > 0.0 && r0.is_finite()) {
        return Err(OmtError::BadRadius(r0));
    }
    let mut r = r0;
    for _ in 0..=MAX_HALVINGS {
        if r < clearance {
            let circle = CircleSpec::new(a, r)?;
            if min_on_circle(f, circle, v, SELECT_SAMPLES)?.m > margin_tol {
                return Ok(r);
            }
        }
        r /= 2.0;
    }
    Err(OmtError::RadiusSelection {
        r0,
        halvings: MAX_HALVINGS,
    })
}

/// `γ = f(|z − a| = r)` sampled at `K` uniform angles, with its distance `m`
/// to `v`.
#[derive(Debug, Clone, PartialEq)]
pub struct GammaCurve {
    pub thetas: Vec<f64>,
    pub points: Vec<Complex>,
    pub m: f64,
    pub argmin_angle: f64,
    /// Lipschitz slack of `m` (see [`crate::analytic::CircleMin`]).
    pub m_tolerance: f64,
}

impl GammaCurve {
    /// Distance from `w` to the sample of `γ` nearest in angle to `theta`.
    pub fn deviation_at(&self, theta: f64, w: Complex) -> f64 {
        let k = self.points.len();
        let idx = ((theta.rem_euclid(TAU) / TAU * k as f64).round() as usize) % k;
        (self.points[idx] - w).norm()
    }

    /// CSV with header `theta,re,im`.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "theta,re,im")?;
        for (t, w) in self.thetas.iter().zip(&self.points) {
            writeln!(out, "{t},{},{}", w.re, w.im)?;
        }
        out.flush()
    }
}

pub fn build_gamma(
    f: &AnalyticFn,
    a: Complex,
    r: f64,
    v: Complex,
    samples: usize,
    margin_tol: f64,
) -> Result<GammaCurve, OmtError> {
    if samples < MIN_GAMMA_SAMPLES {
        return Err(OmtError::TooFewGammaSamples(samples));
    }
    let circle = CircleSpec::new(a, r)?;
    let step = TAU / samples as f64;
    let thetas: Vec<f64> = (0..samples).map(|k| step * k as f64).collect();
    let points = thetas
        .iter()
        .map(|&t| f.eval(circle.point_at(t)))
        .collect::<Result<Vec<_>, _>>()?;
    let min = min_on_circle(f, circle, v, samples)?;
    if min.m <= margin_tol {
        return Err(OmtError::DegenerateMargin {
            m: min.m,
            tol: margin_tol,
        });
    }
    Ok(GammaCurve {
        thetas,
        points,
        m: min.m,
        argmin_angle: min.argmin_angle,
        m_tolerance: min.tolerance,
    })
}

#[derive(Debug, Clone)]
pub struct OmtConfig {
    pub f: AnalyticFn,
    pub a: Complex,
    pub domain: DomainSpec,
    /// Starting radius for the search; `None` uses half the clearance.
    pub r0: Option<f64>,
    pub n_paths: u64,
    pub grid_cells: usize,
    /// `None` uses [`SamplerConfig::for_radius`] at the selected `r`.
    pub sampler: Option<SamplerConfig>,
    pub image_step: ImageStep,
    pub gamma_samples: usize,
    pub margin_tol: f64,
    pub seed: u64,
    pub exec: Exec,
}

impl OmtConfig {
    pub fn new(f: AnalyticFn, a: Complex, domain: DomainSpec, n_paths: u64, grid_cells: usize, seed: u64) -> Self {
        Self {
            f,
            a,
            domain,
            r0: None,
            n_paths,
            grid_cells,
            sampler: None,
            image_step: ImageStep::default(),
            gamma_samples: DEFAULT_GAMMA_SAMPLES,
            margin_tol: DEFAULT_MARGIN_TOL,
            seed,
            exec: Exec::default(),
        }
    }
}

/// Layout of the coverage grid over the square `[v − m, v + m]²`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellGrid {
    pub cells_per_axis: usize,
    pub x_min: f64,
    pub y_min: f64,
    pub cell_size: f64,
    pub eligible_radius: f64,
    /// Row-major (row = y index), true for cells fully inside
    /// `D(v, eligible_radius)`.
    pub eligible: Vec<bool>,
}

impl CellGrid {
    pub fn new(v: Complex, m: f64, cells_per_axis: usize) -> Self {
        let g = cells_per_axis;
        let cell_size = 2.0 * m / g as f64;
        let x_min = v.re - m;
        let y_min = v.im - m;
        let eligible_radius = CELL_DISK_FRACTION * m;
        let eligible = (0..g * g)
            .map(|idx| {
                let (ix, iy) = (idx % g, idx / g);
                let xs = [x_min + ix as f64 * cell_size, x_min + (ix + 1) as f64 * cell_size];
                let ys = [y_min + iy as f64 * cell_size, y_min + (iy + 1) as f64 * cell_size];
                xs.iter()
                    .flat_map(|&x| ys.iter().map(move |&y| Complex::new(x, y)))
                    .all(|corner| (corner - v).norm() < eligible_radius)
            })
            .collect();
        Self {
            cells_per_axis,
            x_min,
            y_min,
            cell_size,
            eligible_radius,
            eligible,
        }
    }

    /// Row-major index of the cell holding `w`, if it is eligible.
    pub fn eligible_cell(&self, w: Complex) -> Option<usize> {
        let fx = ((w.re - self.x_min) / self.cell_size).floor();
        let fy = ((w.im - self.y_min) / self.cell_size).floor();
        let g = self.cells_per_axis as f64;
        if !(fx >= 0.0 && fx < g && fy >= 0.0 && fy < g) {
            return None;
        }
        let idx = fy as usize * self.cells_per_axis + fx as usize;
        self.eligible[idx].then_some(idx)
    }

    pub fn cell_center(&self, idx: usize) -> Complex {
        let (ix, iy) = (idx % self.cells_per_axis, idx / self.cells_per_axis);
        Complex::new(
            self.x_min + (ix as f64 + 0.5) * self.cell_size,
            self.y_min + (iy as f64 + 0.5) * self.cell_size,
        )
    }

    pub fn eligible_count(&self) -> usize {
        self.eligible.iter().filter(|&&e| e).count()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellCounts {
    pub grid: CellGrid,
    /// Row-major count of paths whose image visited each cell before the
    /// crossing. Ineligible cells stay at zero.
    pub counts: Vec<u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OmtReport {
    pub r: f64,
    #[serde(with = "serde_complex")]
    pub v: Complex,
    pub m: f64,
    pub m_tolerance: f64,
    /// Paths whose terminal distance is within this of `m` are ambiguous.
    pub ambiguity_tol: f64,
    pub boundary_tol: f64,
    pub paths_run: u64,
    /// Paths lost to sampler or evaluation errors.
    pub failed_paths: u64,
    pub ambiguous_paths: u64,
    pub crossing_violations: u64,
    /// Unambiguous paths whose terminal point lies inside `D(v, m)`.
    pub terminal_inside_margin: u64,
    /// Minimum of `|terminal − v| − m` over all completed paths.
    pub terminal_margin_min: f64,
    /// Largest distance from a terminal image point to `γ`'s nearest sample.
    pub terminal_gamma_deviation_max: f64,
    /// Bound for that distance implied by the sampled `|f′|` and `K`.
    pub gamma_tolerance: f64,
    pub cells_total: usize,
    pub cells_hit: usize,
    pub per_cell_hit_counts: CellCounts,
}

/// Per-path outcome of the pipeline sample → clock → image → crossing.
#[derive(Debug, Clone, PartialEq)]
pub struct PathOutcome {
    pub image: ImagePath,
    /// Image polyline: grid points plus the terminal point.
    pub polyline: (Vec<f64>, Vec<Complex>),
    pub crossing_time: Option<f64>,
    pub terminal_margin: f64,
    pub ambiguous: bool,
    pub violation: bool,
    /// Polyline vertices visited before the crossing.
    pub pre_crossing_vertices: usize,
}

#[derive(Debug, Error)]
enum PathError {
    #[error(transparent)]
    Sample(#[from] SampleError),
    #[error(transparent)]
    TimeChange(#[from] TimeChangeError),
    #[error(transparent)]
    Eval(#[from] EvalError),
}

/// Everything fixed before any path runs.
#[derive(Debug, Clone)]
pub struct Setup {
    pub v: Complex,
    pub r: f64,
    pub circle: CircleSpec,
    pub gamma: GammaCurve,
    pub sampler: SamplerConfig,
    pub ambiguity_tol: f64,
}

pub fn prepare(cfg: &OmtConfig) -> Result<Setup, OmtError> {
    if !cfg.f.is_nonconstant() {
        return Err(OmtError::ConstantFunction);
    }
    if cfg.domain.clearance(cfg.a) <= 0.0 {
        return Err(OmtError::StartOutsideDomain);
    }
    let v = cfg.f.eval(cfg.a)?;
    let r = select_radius(&cfg.f, cfg.a, &cfg.domain, v, cfg.r0, cfg.margin_tol)?;
    let gamma = build_gamma(&cfg.f, cfg.a, r, v, cfg.gamma_samples, cfg.margin_tol)?;
    let sampler = cfg.sampler.unwrap_or_else(|| SamplerConfig::for_radius(r));
    let ambiguity_tol = gamma.m_tolerance + sampler.boundary_tol;
    Ok(Setup {
        v,
        r,
        circle: CircleSpec::new(cfg.a, r)?,
        gamma,
        sampler,
        ambiguity_tol,
    })
}

fn run_path(
    cfg: &OmtConfig,
    setup: &Setup,
    path: &mut BmPath,
    index: u64,
) -> Result<PathOutcome, PathError> {
    sample_path_into(path, cfg.a, setup.circle, &setup.sampler, RngStream::new(cfg.seed, index))?;
    let clock = compute_clock(path, &cfg.f)?;
    let image = map_path_with_clock(path, &clock, &cfg.f, cfg.image_step)?;
    let m = setup.gamma.m;
    let polyline = image.polyline();
    let crossing = first_crossing_polyline(&polyline.0, &polyline.1, setup.v, m);
    let terminal_dist = (image.terminal_point - setup.v).norm();
    let terminal_margin = terminal_dist - m;
    let ambiguous = terminal_margin.abs() <= setup.ambiguity_tol;
    let violation = !ambiguous
        && terminal_dist > m
        && crossing.is_none_or(|x| x.image_time > image.terminal_image_time);
    let pre_crossing_vertices = crossing.map_or(polyline.1.len(), |x| x.segment + 1);
    Ok(PathOutcome {
        crossing_time: crossing.map(|x| x.image_time),
        terminal_margin,
        ambiguous,
        violation,
        pre_crossing_vertices,
        image,
        polyline,
    })
}

/// Runs one path of the experiment; path `index` uses stream `(seed, index)`.
pub fn run_single_path(cfg: &OmtConfig, setup: &Setup, index: u64) -> Result<PathOutcome, String> {
    let mut path = BmPath::default();
    run_path(cfg, setup, &mut path, index).map_err(|e| e.to_string())
}

struct Tally {
    paths_run: u64,
    failed: u64,
    ambiguous: u64,
    violations: u64,
    inside: u64,
    margin_min: f64,
    deviation_max: f64,
    counts: Vec<u64>,
    // Per-batch scratch: last path index that touched each cell.
    marker: Vec<u64>,
    path: BmPath,
}

impl Tally {
    fn new(cells: usize) -> Self {
        Self {
            paths_run: 0,
            failed: 0,
            ambiguous: 0,
            violations: 0,
            inside: 0,
            margin_min: f64::INFINITY,
            deviation_max: 0.0,
            counts: vec![0; cells],
            marker: vec![u64::MAX; cells],
            path: BmPath::default(),
        }
    }

    fn merge(&mut self, other: Tally) {
        self.paths_run += other.paths_run;
        self.failed += other.failed;
        self.ambiguous += other.ambiguous;
        self.violations += other.violations;
        self.inside += other.inside;
        self.margin_min = self.margin_min.min(other.margin_min);
        self.deviation_max = self.deviation_max.max(other.deviation_max);
        for (c, o) in self.counts.iter_mut().zip(other.counts) {
            *c += o;
        }
    }
}

pub fn run_experiment(cfg: &OmtConfig) -> Result<OmtReport, OmtError> {
    if cfg.n_paths == 0 {
        return Err(OmtError::NoPaths);
    }
    if cfg.grid_cells == 0 {
        return Err(OmtError::EmptyGrid);
    }
    let setup = prepare(cfg)?;
    let grid = CellGrid::new(setup.v, setup.gamma.m, cfg.grid_cells);
    let ncells = grid.eligible.len();

    let tally = fold_batches(
        cfg.n_paths,
        DEFAULT_BATCH,
        cfg.exec,
        || Tally::new(ncells),
        |t, i| {
            t.paths_run += 1;
            let mut path = std::mem::take(&mut t.path);
            let outcome = run_path(cfg, &setup, &mut path, i);
            let exit = path.points.last().copied();
            t.path = path;
            let out = match outcome {
                Ok(o) => o,
                Err(_) => {
                    t.failed += 1;
                    return;
                }
            };
            if out.ambiguous {
                t.ambiguous += 1;
            } else if out.terminal_margin < 0.0 {
                t.inside += 1;
            }
            if out.violation {
                t.violations += 1;
            }
            t.margin_min = t.margin_min.min(out.terminal_margin);
            if let Some(z) = exit {
                let w = z - cfg.a;
                let dev = setup.gamma.deviation_at(w.im.atan2(w.re), out.image.terminal_point);
                t.deviation_max = t.deviation_max.max(dev);
            }
            for w in &out.polyline.1[..out.pre_crossing_vertices] {
                if let Some(idx) = grid.eligible_cell(*w) {
                    if t.marker[idx] != i {
                        t.marker[idx] = i;
                        t.counts[idx] += 1;
                    }
                }
            }
        },
        Tally::merge,
    );

    let cells_total = grid.eligible_count();
    let cells_hit = tally
        .counts
        .iter()
        .zip(&grid.eligible)
        .filter(|(&c, &e)| e && c > 0)
        .count();
    Ok(OmtReport {
        r: setup.r,
        v: setup.v,
        m: setup.gamma.m,
        m_tolerance: setup.gamma.m_tolerance,
        ambiguity_tol: setup.ambiguity_tol,
        boundary_tol: setup.sampler.boundary_tol,
        paths_run: tally.paths_run,
        failed_paths: tally.failed,
        ambiguous_paths: tally.ambiguous,
        crossing_violations: tally.violations,
        terminal_inside_margin: tally.inside,
        terminal_margin_min: tally.margin_min,
        terminal_gamma_deviation_max: tally.deviation_max,
        gamma_tolerance: setup.gamma.m_tolerance,
        cells_total,
        cells_hit,
        per_cell_hit_counts: CellCounts {
            grid,
            counts: tally.counts,
        },
    })
}

/// Verdict: no crossing violations, no terminal point measurably inside
/// `D(v, m)`, and every eligible cell hit.
pub fn containment_check(report: &OmtReport) -> bool {
    report.crossing_violations == 0
        && report.terminal_margin_min >= -report.boundary_tol
        && report.cells_total > 0
        && report.cells_hit == report.cells_total
}
