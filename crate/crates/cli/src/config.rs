//! Command-line arguments. Every subcommand's arguments double as the
//! serialized experiment record written into its JSON summary.

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use skewcmv::coeffs::{SkewShiftParams, TorusPoint, VerblunskySource};
use skewcmv::num::parse_frequency;
use skewcmv::C64;
use std::path::PathBuf;

use crate::CliError;

#[derive(Parser, Debug, Clone)]
#[command(name = "skewcmv", version, about = "CMV matrices with skew-shift Verblunsky coefficients")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Output directory.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Also write a gnuplot script next to each series.
    #[arg(long, global = true)]
    pub gnuplot: bool,
}

#[derive(Subcommand, Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Eigenvalue angles of E^{[0,N−1]} with fixed boundaries.
    Spectrum(SpectrumArgs),
    /// Gap statistics and histograms of the spectrum.
    Gaps(GapsArgs),
    /// Laplace functional of the spectrum against the rotation by 2ω.
    Laplace(LaplaceArgs),
    /// Lyapunov exponent estimates.
    Lyapunov(LyapunovArgs),
    /// Wegner average of eigenvalue counts in an arc.
    Wegner(WegnerArgs),
    /// Scan windows for Green's function decay.
    GreenScan(GreenScanArgs),
    /// Skew-shift box visits and Diophantine constant.
    Recurrence(RecurrenceArgs),
    /// Linear and quadratic Weyl sums.
    Weyl(WeylArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Spectrum(_) => "spectrum",
            Command::Gaps(_) => "gaps",
            Command::Laplace(_) => "laplace",
            Command::Lyapunov(_) => "lyapunov",
            Command::Wegner(_) => "wegner",
            Command::GreenScan(_) => "green-scan",
            Command::Recurrence(_) => "recurrence",
            Command::Weyl(_) => "weyl",
        }
    }
}

/// Coefficient source: a config file, or one of the kinds `monomial`
/// (α_n = λe(ωn^k)), `skew_shift` (needs --x), `constant` (α ≡ λ).
#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceArgs {
    #[arg(long, default_value = "monomial")]
    pub source: String,
    #[arg(long, default_value_t = 2)]
    pub k: usize,
    /// Decimal frequency or `sqrt2` for √2 − 1.
    #[arg(long, default_value = "sqrt2")]
    pub omega: String,
    /// `re` or `re,im`.
    #[arg(long, default_value = "0.5")]
    pub lambda: String,
    /// Start point for `skew_shift`, comma separated.
    #[arg(long)]
    pub x: Option<String>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundaryArgs {
    /// Left boundary phase in turns (β = e(beta)).
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub beta: f64,
    /// Right boundary phase in turns.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub gamma: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    #[arg(long, value_delimiter = ',', default_value = "2000")]
    pub n: Vec<usize>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapsArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    #[arg(long, value_delimiter = ',', default_value = "2000")]
    pub n: Vec<usize>,
    /// Histogram bin width for normalized gaps.
    #[arg(long, default_value_t = 0.1)]
    pub bin: f64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LaplaceArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    #[arg(long, value_delimiter = ',', default_value = "500,1000,2000,4000")]
    pub n: Vec<usize>,
    /// Quadrature nodes per mean gap.
    #[arg(long, default_value_t = 32)]
    pub resolution: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LyapunovArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    /// Number of transfer steps.
    #[arg(long, value_delimiter = ',', default_value = "100000")]
    pub n: Vec<usize>,
    /// Number of torus start points.
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
    /// Spectral parameters as phases in turns.
    #[arg(long, value_delimiter = ',', default_value = "0.1", allow_hyphen_values = true)]
    pub z: Vec<f64>,
    /// Also write the running estimate along the source orbit.
    #[arg(long)]
    pub trace: bool,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WegnerArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    #[arg(long, default_value_t = 64)]
    pub n: usize,
    /// Arc `θ1,θ2` in turns.
    #[arg(long, value_delimiter = ',', default_value = "0,0.25", allow_hyphen_values = true)]
    pub arc: Vec<f64>,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenScanArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[command(flatten)]
    pub boundary: BoundaryArgs,
    /// Scale L; centres k range over ±[L/3, 2L/3].
    #[arg(long, default_value_t = 300)]
    pub n: i64,
    /// Window half-width M.
    #[arg(long, default_value_t = 20)]
    pub m: i64,
    /// Neighbourhood factor C for k±.
    #[arg(long, default_value_t = 1)]
    pub c: i64,
    /// Spectral parameter phase in turns.
    #[arg(long, default_value_t = 0.123, allow_hyphen_values = true)]
    pub z: f64,
    /// Decay rate for the exponential check.
    #[arg(long)]
    pub rate: Option<f64>,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecurrenceArgs {
    #[command(flatten)]
    pub source: SourceArgs,
    #[arg(long, default_value_t = 0.05)]
    pub eps: f64,
    #[arg(long, default_value_t = 0.05)]
    pub delta: f64,
    /// Orbit lengths L.
    #[arg(long, value_delimiter = ',', default_value = "1000000")]
    pub n: Vec<u64>,
    /// Stride N of the arithmetic progression.
    #[arg(long, default_value_t = 1)]
    pub stride: u64,
    #[arg(long, default_value_t = 1.0)]
    pub tau: f64,
    #[arg(long, default_value_t = 1_000_000)]
    pub qmax: u64,
}

#[derive(Args, Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeylArgs {
    /// Decimal frequency or `sqrt2`.
    #[arg(long, default_value = "sqrt2")]
    pub omega: String,
    /// Sum lengths L.
    #[arg(long, value_delimiter = ',', default_value = "256,1024,4096,16384,65536")]
    pub n: Vec<u64>,
    /// Linear phase t of the quadratic sum.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub t: f64,
    /// Oversampling of the t-grid for the supremum.
    #[arg(long, default_value_t = 4)]
    pub oversample: usize,
}

/// Full record of one run, written as the `config` header of every summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    #[serde(flatten)]
    pub command: Command,
    /// Resolved coefficient source in config-file syntax.
    pub resolved_source: Option<String>,
}

impl ExperimentConfig {
    pub fn new(command: &Command) -> Result<Self, CliError> {
        let resolved_source = match source_args(command) {
            Some(s) => Some(resolve_source(s)?.to_config()),
            None => None,
        };
        Ok(ExperimentConfig { command: command.clone(), resolved_source })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    pub fn from_json(s: &str) -> Result<Self, CliError> {
        serde_json::from_str(s).map_err(|e| CliError::Usage(format!("bad experiment config: {e}")))
    }
}

pub fn source_args(c: &Command) -> Option<&SourceArgs> {
    match c {
        Command::Spectrum(a) => Some(&a.source),
        Command::Gaps(a) => Some(&a.source),
        Command::Laplace(a) => Some(&a.source),
        Command::Lyapunov(a) => Some(&a.source),
        Command::Wegner(a) => Some(&a.source),
        Command::GreenScan(a) => Some(&a.source),
        Command::Recurrence(a) => Some(&a.source),
        Command::Weyl(_) => None,
    }
}

pub fn parse_omega(s: &str) -> Result<f64, CliError> {
    parse_frequency(s).ok_or_else(|| CliError::Usage(format!("bad frequency `{s}`")))
}

pub fn parse_lambda(s: &str) -> Result<C64, CliError> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|_| CliError::Usage(format!("bad lambda `{s}`")));
    match parts.as_slice() {
        [re] => Ok(C64::new(num(re)?, 0.0)),
        [re, im] => Ok(C64::new(num(re)?, num(im)?)),
        _ => Err(CliError::Usage(format!("lambda expects `re` or `re,im`, got `{s}`"))),
    }
}

/// Skew-shift parameters and start point of a monomial or skew_shift source.
pub fn skew_params(s: &SourceArgs) -> Result<(SkewShiftParams, TorusPoint), CliError> {
    match resolve_source(s)? {
        VerblunskySource::SkewShift { params, start } => Ok((params, start)),
        _ => Err(CliError::Usage("this command needs a skew-shift source".into())),
    }
}

pub fn resolve_source(s: &SourceArgs) -> Result<VerblunskySource, CliError> {
    let path = std::path::Path::new(&s.source);
    if path.is_file() {
        let text = std::fs::read_to_string(path)?;
        return Ok(VerblunskySource::from_config(&text)?);
    }
    let omega = parse_omega(&s.omega)?;
    let lambda = parse_lambda(&s.lambda)?;
    let src = match s.source.as_str() {
        "monomial" => VerblunskySource::monomial(s.k, omega, lambda)?,
        "constant" => VerblunskySource::constant(lambda)?,
        "skew_shift" => {
            let x = s
                .x
                .as_deref()
                .ok_or_else(|| CliError::Usage("skew_shift needs --x".into()))?
                .split(',')
                .map(|t| t.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("bad --x entry `{t}`"))))
                .collect::<Result<Vec<_>, _>>()?;
            VerblunskySource::skew_shift(SkewShiftParams::new(s.k, omega, lambda)?, TorusPoint::new(x)?)?
        }
        other => {
            return Err(CliError::Usage(format!(
                "--source `{other}` is neither a file nor one of monomial, skew_shift, constant"
            )))
        }
    };
    Ok(src)
}
