//! Command execution and the JSON document.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use levy_omt::analytic::CircleError;
use levy_omt::bm::{sample_path_until_exit, write_paths_csv};
use levy_omt::estimators::{center_exit_angles, estimate_arc_first_hit, ArcSpec, EstimateError};
use levy_omt::invariance::{invariance_check, InvarianceError};
use levy_omt::omt::{containment_check, prepare, run_experiment, run_single_path, DomainSpec, OmtConfig, OmtError};
use levy_omt::par::{current_parallelism, with_threads};
use levy_omt::serde_complex::Json;
use levy_omt::stats::{chi_square_uniformity, TestError};
use levy_omt::time_change::ImageStep;
use levy_omt::{CircleSpec, Complex, Exec, RngStream, SamplerConfig};
use serde::Serialize;
use thiserror::Error;

use crate::args::{Command, Common, Experiment, InvarianceArgs, LemmaArgs, OmtArgs, RunConfig, UniformityArgs};

pub const SCHEMA: u32 = 1;

pub const DEFAULT_N_LEMMA: u64 = 100_000;
pub const DEFAULT_N_UNIFORMITY: u64 = 100_000;
pub const DEFAULT_N_INVARIANCE: u64 = 10_000;
pub const DEFAULT_N_OMT: u64 = 100_000;

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_ERROR: i32 = 2;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Estimate(#[from] EstimateError),
    #[error(transparent)]
    Test(#[from] TestError),
    #[error(transparent)]
    Omt(#[from] OmtError),
    #[error(transparent)]
    Invariance(#[from] InvarianceError),
    #[error("path {index}: {message}")]
    Path { index: u64, message: String },
    #[error("{}: {source}", path.display())]
    Io { path: PathBuf, source: io::Error },
}

impl RunError {
    pub fn kind(&self) -> &'static str {
        match self {
            RunError::Circle(_) => "geometry",
            RunError::Estimate(_) => "estimate",
            RunError::Test(_) => "test",
            RunError::Omt(OmtError::ConstantFunction) | RunError::Invariance(InvarianceError::Omt(OmtError::ConstantFunction)) => {
                "precondition"
            }
            RunError::Omt(_) => "experiment",
            RunError::Invariance(_) => "experiment",
            RunError::Path { .. } => "path",
            RunError::Io { .. } => "io",
        }
    }
}

/// A finished command: the JSON text and the verdict.
#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub json: String,
    pub passed: bool,
}

#[derive(Serialize)]
struct Document<'a, C, R> {
    schema: u32,
    command: &'a str,
    config: C,
    results: R,
    verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none")]
    duration_s: Option<f64>,
}

#[derive(Serialize)]
struct Verdict {
    passed: bool,
}

#[derive(Serialize)]
struct ErrorDocument<'a> {
    schema: u32,
    command: &'a str,
    error: ErrorBody<'a>,
}

#[derive(Serialize)]
struct ErrorBody<'a> {
    kind: &'a str,
    message: String,
}

#[derive(Serialize)]
struct CommonEcho {
    n: u64,
    seed: u64,
    threads: usize,
    out: Option<String>,
    dump_paths: Option<String>,
    dump_cap: u64,
}

impl CommonEcho {
    fn new(c: &Common, n: u64) -> Self {
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        Self {
            n,
            seed: c.seed,
            threads: current_parallelism(),
            out: path(&c.out),
            dump_paths: path(&c.dump_paths),
            dump_cap: c.dump_cap,
        }
    }
}

#[derive(Serialize)]
struct SamplerEcho {
    step_dt: f64,
    boundary_tol: f64,
    max_steps: u64,
}

impl From<&SamplerConfig> for SamplerEcho {
    fn from(s: &SamplerConfig) -> Self {
        Self {
            step_dt: s.step_dt,
            boundary_tol: s.boundary_tol,
            max_steps: s.max_steps,
        }
    }
}

fn sampler_for(step_dt: Option<f64>, radius: f64) -> SamplerConfig {
    match step_dt {
        Some(dt) => SamplerConfig::with_step(dt, radius),
        None => SamplerConfig::for_radius(radius),
    }
}

/// Runs `config` and renders its JSON document. The wall-clock duration goes
/// to standard error, and into the document only with `--timing`.
pub fn execute(config: &RunConfig) -> Result<Outcome, RunError> {
    let common = config.common();
    let start = Instant::now();
    let (json_without_time, passed, render) = with_threads(common.threads, || match &config.command {
        Command::Lemma(a) => lemma(a),
        Command::Uniformity(a) => uniformity(a),
        Command::Invariance(a) => invariance(a),
        Command::Omt(a) => omt(a),
    })?;
    let elapsed = start.elapsed().as_secs_f64();
    eprintln!("levy-omt {}: {elapsed:.3}s", config.command.name());
    let json = if common.timing {
        render(Some(elapsed))
    } else {
        json_without_time
    };
    Ok(Outcome { json, passed })
}

type Rendered = (String, bool, Box<dyn FnOnce(Option<f64>) -> String + Send>);

fn render<C, R>(command: &'static str, config: C, results: R, passed: bool) -> Rendered
where
    C: Serialize + Send + 'static,
    R: Serialize + Send + 'static,
{
    let doc = move |duration_s: Option<f64>| {
        let d = Document {
            schema: SCHEMA,
            command,
            config: &config,
            results: &results,
            verdict: Verdict { passed },
            duration_s,
        };
        serde_json::to_string_pretty(&d).expect("documents serialize") + "\n"
    };
    let plain = doc(None);
    (plain, passed, Box::new(doc))
}

pub fn error_json(command: &str, err: &RunError) -> String {
    let doc = ErrorDocument {
        schema: SCHEMA,
        command,
        error: ErrorBody {
            kind: err.kind(),
            message: err.to_string(),
        },
    };
    serde_json::to_string_pretty(&doc).expect("documents serialize") + "\n"
}

fn create(path: &Path) -> Result<BufWriter<File>, RunError> {
    File::create(path).map(BufWriter::new).map_err(|source| RunError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(io::Error) -> RunError + '_ {
    move |source| RunError::Io {
        path: path.to_path_buf(),
        source,
    }
}

fn dump_brownian(common: &Common, start: Complex, circle: CircleSpec, sampler: &SamplerConfig, n: u64) -> Result<(), RunError> {
    let Some(path) = &common.dump_paths else {
        return Ok(());
    };
    let paths = (0..common.dump_cap.min(n))
        .map(|i| {
            sample_path_until_exit(start, circle, sampler, RngStream::new(common.seed, i)).map_err(|e| RunError::Path {
                index: i,
                message: e.to_string(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    write_paths_csv(create(path)?, paths.iter().map(|p| (&p.times[..], &p.points[..]))).map_err(io_err(path))
}

fn dump_images(common: &Common, cfg: &OmtConfig) -> Result<(), RunError> {
    let Some(path) = &common.dump_paths else {
        return Ok(());
    };
    let setup = prepare(cfg)?;
    let lines = (0..common.dump_cap.min(cfg.n_paths))
        .map(|i| run_single_path(cfg, &setup, i).map(|o| o.polyline).map_err(|message| RunError::Path { index: i, message }))
        .collect::<Result<Vec<_>, _>>()?;
    write_paths_csv(create(path)?, lines.iter().map(|(t, w)| (&t[..], &w[..]))).map_err(io_err(path))
}

#[derive(Serialize)]
struct LemmaEcho {
    center: Json,
    radius: f64,
    arc_radius: f64,
    theta1: f64,
    theta2: f64,
    #[serde(flatten)]
    common: CommonEcho,
    sampler: SamplerEcho,
}

fn lemma(a: &LemmaArgs) -> Result<Rendered, RunError> {
    let n = a.common.n.unwrap_or(DEFAULT_N_LEMMA);
    let circle = CircleSpec::new(a.center, a.radius)?;
    let arc = ArcSpec::new(a.center, a.arc_radius, a.theta1, a.theta2)?;
    let sampler = sampler_for(a.common.step_dt, a.arc_radius);
    let report = estimate_arc_first_hit(circle, arc, n, &sampler, a.common.seed, Exec::Parallel)?;
    dump_brownian(&a.common, a.center, CircleSpec::new(a.center, a.arc_radius)?, &sampler, n)?;
    let echo = LemmaEcho {
        center: Json(a.center),
        radius: a.radius,
        arc_radius: a.arc_radius,
        theta1: a.theta1,
        theta2: a.theta2,
        common: CommonEcho::new(&a.common, n),
        sampler: (&sampler).into(),
    };
    let passed = report.passed.unwrap_or(false);
    Ok(render("lemma", echo, report, passed))
}

#[derive(Serialize)]
struct UniformityEcho {
    center: Json,
    radius: f64,
    bins: usize,
    alpha: f64,
    #[serde(flatten)]
    common: CommonEcho,
    sampler: SamplerEcho,
}

#[derive(Serialize)]
struct UniformityResults {
    n: u64,
    bins: usize,
    statistic: f64,
    df: usize,
    p_value: f64,
    alpha: f64,
    passed: bool,
}

fn uniformity(a: &UniformityArgs) -> Result<Rendered, RunError> {
    let n = a.common.n.unwrap_or(DEFAULT_N_UNIFORMITY);
    let circle = CircleSpec::new(a.center, a.radius)?;
    let sampler = sampler_for(a.common.step_dt, a.radius);
    let angles = center_exit_angles(circle, n, &sampler, a.common.seed, Exec::Parallel)?;
    let chi = chi_square_uniformity(&angles, a.bins)?;
    dump_brownian(&a.common, a.center, circle, &sampler, n)?;
    let passed = chi.p_value > a.alpha;
    let results = UniformityResults {
        n,
        bins: a.bins,
        statistic: chi.statistic,
        df: chi.df,
        p_value: chi.p_value,
        alpha: a.alpha,
        passed,
    };
    let echo = UniformityEcho {
        center: Json(a.center),
        radius: a.radius,
        bins: a.bins,
        alpha: a.alpha,
        common: CommonEcho::new(&a.common, n),
        sampler: (&sampler).into(),
    };
    Ok(render("uniformity", echo, results, passed))
}

#[derive(Serialize)]
struct ExperimentEcho {
    f: String,
    a: Json,
    #[serde(rename = "W_center")]
    w_center: Json,
    #[serde(rename = "W_radius")]
    w_radius: f64,
    r0: f64,
    image_subdivisions: u32,
    gamma_samples: usize,
    margin_tol: f64,
}

/// Builds the experiment configuration and resolves the sampler at the
/// selected radius.
fn experiment_config(e: &Experiment, common: &Common, n: u64, grid: usize) -> Result<(OmtConfig, ExperimentEcho), RunError> {
    let domain = DomainSpec::new(e.w_center, e.w_radius)?;
    let mut cfg = OmtConfig::new(e.f.clone(), e.a, domain, n, grid, common.seed);
    cfg.r0 = e.r;
    cfg.image_step = ImageStep::Subdivisions(e.image_subdivisions);
    cfg.gamma_samples = e.gamma_samples;
    cfg.margin_tol = e.margin_tol;
    cfg.exec = Exec::Parallel;
    let setup = prepare(&cfg)?;
    cfg.sampler = Some(sampler_for(common.step_dt, setup.r));
    let echo = ExperimentEcho {
        f: e.f.to_string(),
        a: Json(e.a),
        w_center: Json(e.w_center),
        w_radius: e.w_radius,
        r0: e.r.unwrap_or(domain.clearance(e.a) / 2.0),
        image_subdivisions: e.image_subdivisions,
        gamma_samples: e.gamma_samples,
        margin_tol: e.margin_tol,
    };
    Ok((cfg, echo))
}

#[derive(Serialize)]
struct InvarianceEcho {
    #[serde(flatten)]
    experiment: ExperimentEcho,
    bins: usize,
    alpha: f64,
    #[serde(flatten)]
    common: CommonEcho,
    sampler: SamplerEcho,
    direct_sampler: SamplerEcho,
}

fn invariance(a: &InvarianceArgs) -> Result<Rendered, RunError> {
    let n = a.common.n.unwrap_or(DEFAULT_N_INVARIANCE);
    let (cfg, experiment) = experiment_config(&a.experiment, &a.common, n, 1)?;
    let m = prepare(&cfg)?.gamma.m;
    let direct = sampler_for(a.common.step_dt, m);
    let report = invariance_check(&cfg, Some(direct), a.bins, a.alpha)?;
    dump_images(&a.common, &cfg)?;
    let echo = InvarianceEcho {
        experiment,
        bins: a.bins,
        alpha: a.alpha,
        common: CommonEcho::new(&a.common, n),
        sampler: cfg.sampler.as_ref().expect("resolved").into(),
        direct_sampler: (&direct).into(),
    };
    let passed = report.passed;
    Ok(render("invariance", echo, report, passed))
}

#[derive(Serialize)]
struct OmtEcho {
    #[serde(flatten)]
    experiment: ExperimentEcho,
    grid: usize,
    dump_gamma: Option<String>,
    #[serde(flatten)]
    common: CommonEcho,
    sampler: SamplerEcho,
}

fn omt(a: &OmtArgs) -> Result<Rendered, RunError> {
    let n = a.common.n.unwrap_or(DEFAULT_N_OMT);
    let (cfg, experiment) = experiment_config(&a.experiment, &a.common, n, a.grid)?;
    let report = run_experiment(&cfg)?;
    if let Some(path) = &a.dump_gamma {
        prepare(&cfg)?.gamma.write_csv(create(path)?).map_err(io_err(path))?;
    }
    dump_images(&a.common, &cfg)?;
    let echo = OmtEcho {
        experiment,
        grid: a.grid,
        dump_gamma: a.dump_gamma.as_ref().map(|p| p.display().to_string()),
        common: CommonEcho::new(&a.common, n),
        sampler: cfg.sampler.as_ref().expect("resolved").into(),
    };
    let passed = containment_check(&report);
    Ok(render("omt", echo, report, passed))
}

fn emit(out: Option<&Path>, text: &str) -> io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text),
        None => {
            let mut stdout = io::stdout().lock();
            stdout.write_all(text.as_bytes())?;
            stdout.flush()
        }
    }
}

/// Runs `config`, writes its JSON document, and returns the exit code:
/// 0 on a passing verdict, 1 on a failing one, 2 on any error.
pub fn run(config: &RunConfig) -> i32 {
    let out = config.common().out.as_deref();
    let (text, code) = match execute(config) {
        Ok(o) => (o.json, if o.passed { EXIT_PASS } else { EXIT_FAIL }),
        Err(e) => (error_json(config.command.name(), &e), EXIT_ERROR),
    };
    match emit(out, &text) {
        Ok(()) => code,
        Err(e) => {
            eprintln!("levy-omt: cannot write output: {e}");
            EXIT_ERROR
        }
    }
}
