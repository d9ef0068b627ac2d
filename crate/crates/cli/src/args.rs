//! Flag grammar.

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use levy_omt::{AnalyticFn, Complex};

/// Monte Carlo experiments on planar Brownian motion and the open mapping
/// property of analytic functions.
#[derive(Debug, Clone, Parser)]
#[command(name = "levy-omt", version)]
pub struct RunConfig {
    #[command(subcommand)]
    pub command: Command,
}

impl RunConfig {
    /// Parses `argv` (program name first) without exiting the process.
    pub fn parse_from<I, T>(argv: I) -> Result<Self, clap::Error>
    where
        I: IntoIterator<Item = T>,
        T: Into<OsString> + Clone,
    {
        <Self as Parser>::try_parse_from(argv)
    }

    pub fn common(&self) -> &Common {
        match &self.command {
            Command::Lemma(a) => &a.common,
            Command::Uniformity(a) => &a.common,
            Command::Invariance(a) => &a.common,
            Command::Omt(a) => &a.common,
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Probability that paths from the center first reach an inner circle
    /// inside an angular window.
    Lemma(LemmaArgs),
    /// χ² uniformity test of exit angles from the center of a disk.
    Uniformity(UniformityArgs),
    /// Compares crossing angles of time-changed image paths with direct
    /// Brownian motion.
    Invariance(InvarianceArgs),
    /// Runs the open-mapping experiment: crossing claims and cell coverage.
    Omt(OmtArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Lemma(_) => "lemma",
            Command::Uniformity(_) => "uniformity",
            Command::Invariance(_) => "invariance",
            Command::Omt(_) => "omt",
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// Number of paths (default depends on the command).
    #[arg(long, value_parser = parse_count)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Brownian time step (default 1e-4·r² for stopping radius r).
    #[arg(long = "step-dt", value_parser = parse_positive, allow_hyphen_values = true)]
    pub step_dt: Option<f64>,
    /// Worker threads; 0 uses every available core.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
    /// Write the JSON document here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write the first paths as CSV (`t,re,im`).
    #[arg(long = "dump-paths")]
    pub dump_paths: Option<PathBuf>,
    /// Number of paths written by `--dump-paths`.
    #[arg(long = "dump-cap", default_value_t = 16)]
    pub dump_cap: u64,
    /// Include the wall-clock duration in the JSON document.
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Clone, Args)]
pub struct LemmaArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0+0i")]
    pub center: Complex,
    #[arg(long, value_parser = parse_positive, allow_hyphen_values = true, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long = "arc-radius", value_parser = parse_positive, allow_hyphen_values = true)]
    pub arc_radius: f64,
    /// Window start, radians.
    #[arg(long, value_parser = parse_finite, allow_hyphen_values = true)]
    pub theta1: f64,
    /// Window end, radians.
    #[arg(long, value_parser = parse_finite, allow_hyphen_values = true)]
    pub theta2: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct UniformityArgs {
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true, default_value = "0+0i")]
    pub center: Complex,
    #[arg(long, value_parser = parse_positive, allow_hyphen_values = true, default_value_t = 1.0)]
    pub radius: f64,
    #[arg(long, default_value_t = 36)]
    pub bins: usize,
    #[arg(long, value_parser = parse_probability, default_value_t = 1e-3)]
    pub alpha: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct Experiment {
    /// Analytic function, e.g. "z^2+z" or "exp(z)".
    #[arg(long = "f", value_parser = parse_function, allow_hyphen_values = true)]
    pub f: AnalyticFn,
    /// Start point; v = f(a).
    #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
    pub a: Complex,
    #[arg(long = "W-center", value_parser = parse_complex, allow_hyphen_values = true)]
    pub w_center: Complex,
    #[arg(long = "W-radius", value_parser = parse_positive, allow_hyphen_values = true)]
    pub w_radius: f64,
    /// Starting radius for the search (default: half the distance to W's boundary).
    #[arg(long, value_parser = parse_positive, allow_hyphen_values = true)]
    pub r: Option<f64>,
    /// Image-time intervals per path.
    #[arg(long = "image-subdivisions", default_value_t = levy_omt::time_change::DEFAULT_IMAGE_SUBDIVISIONS)]
    pub image_subdivisions: u32,
    /// Circle samples for γ.
    #[arg(long = "gamma-samples", default_value_t = levy_omt::omt::DEFAULT_GAMMA_SAMPLES)]
    pub gamma_samples: usize,
    #[arg(long = "margin-tol", value_parser = parse_positive, default_value_t = levy_omt::omt::DEFAULT_MARGIN_TOL)]
    pub margin_tol: f64,
}

#[derive(Debug, Clone, Args)]
pub struct InvarianceArgs {
    #[command(flatten)]
    pub experiment: Experiment,
    #[arg(long, default_value_t = levy_omt::invariance::DEFAULT_BINS)]
    pub bins: usize,
    #[arg(long, value_parser = parse_probability, default_value_t = levy_omt::invariance::DEFAULT_ALPHA)]
    pub alpha: f64,
    #[command(flatten)]
    pub common: Common,
}

#[derive(Debug, Clone, Args)]
pub struct OmtArgs {
    #[command(flatten)]
    pub experiment: Experiment,
    /// Coverage grid cells per axis.
    #[arg(long, value_parser = parse_grid, default_value_t = 10)]
    pub grid: usize,
    /// Write γ as CSV (`theta,re,im`).
    #[arg(long = "dump-gamma")]
    pub dump_gamma: Option<PathBuf>,
    #[command(flatten)]
    pub common: Common,
}

/// `<real>`, `<real>+<real>i` or `<real>-<real>i`, without spaces.
pub fn parse_complex(s: &str) -> Result<Complex, String> {
    let bad = || format!("expected <real> or <real>±<real>i, got {s:?}");
    let parse_real = |t: &str| -> Result<f64, String> {
        // Reject forms f64::from_str accepts but the grammar does not.
        if t.is_empty() || t.chars().any(|c| !(c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))) {
            return Err(bad());
        }
        t.parse::<f64>().map_err(|_| bad()).and_then(|x| if x.is_finite() { Ok(x) } else { Err(bad()) })
    };
    let Some(body) = s.strip_suffix('i') else {
        return parse_real(s).map(|re| Complex::new(re, 0.0));
    };
    let bytes = body.as_bytes();
    // The split is the last sign that is neither leading nor an exponent sign.
    let split = (1..bytes.len())
        .rev()
        .find(|&k| matches!(bytes[k], b'+' | b'-') && !matches!(bytes[k - 1], b'e' | b'E'))
        .ok_or_else(bad)?;
    let re = parse_real(&body[..split])?;
    let im_text = &body[split + 1..];
    if im_text.starts_with(['+', '-']) {
        return Err(bad());
    }
    let im = parse_real(im_text)?;
    Ok(Complex::new(re, if bytes[split] == b'-' { -im } else { im }))
}

fn parse_finite(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(x) if x.is_finite() => Ok(x),
        _ => Err(format!("expected a finite real, got {s:?}")),
    }
}

fn parse_positive(s: &str) -> Result<f64, String> {
    let x = parse_finite(s)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {x}"))
    }
}

fn parse_probability(s: &str) -> Result<f64, String> {
    let x = parse_finite(s)?;
    if x > 0.0 && x < 1.0 {
        Ok(x)
    } else {
        Err(format!("must lie in (0, 1), got {x}"))
    }
}

fn parse_count(s: &str) -> Result<u64, String> {
    match s.parse::<u64>() {
        Ok(n) if n >= 1 => Ok(n),
        _ => Err(format!("expected a positive integer, got {s:?}")),
    }
}

fn parse_grid(s: &str) -> Result<usize, String> {
    parse_count(s).map(|n| n as usize)
}

fn parse_function(s: &str) -> Result<AnalyticFn, String> {
    s.parse::<AnalyticFn>().map_err(|e| e.to_string())
}
