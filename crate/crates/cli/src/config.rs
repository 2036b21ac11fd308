//! Command-line grammar. Every parsed command serializes to the `config`
//! object embedded in its artifact, defaults included.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use fdde_stab::fdde_sim::{NonlinearityKind, DEFAULT_HISTORY};
use fdde_stab::two_delay::{
    BOUNDARY_ACCEPT, DEFAULT_MAX_BRANCH, DEFAULT_TAU2_MAX, DEFAULT_V_MAX, DEFAULT_V_SAMPLES,
};

pub const DEFAULT_TAU1_MAX: f64 = 4.0;
pub const DEFAULT_K_MIN: f64 = 0.1;
pub const DEFAULT_K_MAX: f64 = 10.0;
pub const DEFAULT_CURVE_SAMPLES: usize = 100;

#[derive(Debug, Parser)]
#[command(
    name = "fdde-stab",
    version,
    about = "Stability switches and delay-plane boundaries for D^α x = −γx + g(x(t−τ₁)) − e^{−γτ₂} g(x(t−τ₁−τ₂))",
    after_help = "FDDE_STAB_THREADS caps the number of worker threads.\n\
                  Exit codes: 0 ok, 1 domain error, 2 numerical failure or failed verification, \
                  64 usage, 66 missing or unreadable artifact, 74 output error."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "kebab-case")]
pub enum Command {
    /// Switch pattern and critical delays for τ₁ = 0.
    Classify(ClassifyArgs),
    /// Single-delay region and first Hopf delay.
    Hopf(HopfArgs),
    /// Bifurcation curves h1 and h2 in the (k, γ) plane.
    Curves(CurvesArgs),
    /// Imaginary-axis crossing set in the (τ₁, τ₂) plane.
    TauPlane(TauPlaneArgs),
    /// Stability intervals along τ₁ at fixed τ₂.
    Slice(SliceArgs),
    /// Time-domain simulation with a stability verdict.
    Simulate(SimulateArgs),
    /// Re-check a classification, boundary or slice artifact.
    Verify(VerifyArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Classify(_) => "classify",
            Command::Hopf(_) => "hopf",
            Command::Curves(_) => "curves",
            Command::TauPlane(_) => "tau-plane",
            Command::Slice(_) => "slice",
            Command::Simulate(_) => "simulate",
            Command::Verify(_) => "verify",
        }
    }

    pub fn output(&self) -> &OutputArgs {
        match self {
            Command::Classify(a) => &a.output,
            Command::Hopf(a) => &a.output,
            Command::Curves(a) => &a.output,
            Command::TauPlane(a) => &a.output,
            Command::Slice(a) => &a.output,
            Command::Simulate(a) => &a.output,
            Command::Verify(a) => &a.output,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GKind {
    Linear,
    Tanh,
}

impl From<GKind> for NonlinearityKind {
    fn from(g: GKind) -> Self {
        match g {
            GKind::Linear => NonlinearityKind::Linear,
            GKind::Tanh => NonlinearityKind::Tanh,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CurveChoice {
    H1,
    H2,
    Both,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct OutputArgs {
    /// Output file; standard output when absent.
    #[arg(long)]
    #[serde(skip)]
    pub out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ModelArgs {
    /// Fractional order α in (0, 1].
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Slope g'(0).
    #[arg(long, allow_negative_numbers = true)]
    pub k: f64,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TraceArgs {
    /// Upper end of the crossing-frequency grid.
    #[arg(long, default_value_t = DEFAULT_V_MAX)]
    pub v_max: f64,
    #[arg(long, default_value_t = DEFAULT_V_SAMPLES)]
    pub v_samples: usize,
    /// Number of 2π/v copies added to each crossing.
    #[arg(long, default_value_t = DEFAULT_MAX_BRANCH)]
    pub max_branch: u32,
    /// Crossings above this τ₂ are dropped.
    #[arg(long, default_value_t = DEFAULT_TAU2_MAX)]
    pub tau2_max: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ClassifyArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HopfArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub alpha: f64,
    /// Coefficient a of D^α x = a x(t) + b x(t−τ); with --b, replaces --k/--gamma/--tau2.
    #[arg(long, allow_negative_numbers = true, requires = "b", conflicts_with_all = ["k", "gamma", "tau2"])]
    pub a: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires = "a")]
    pub b: Option<f64>,
    #[arg(long, allow_negative_numbers = true, requires_all = ["gamma", "tau2"])]
    pub k: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,
    /// Delay that fixes b = −k e^{−γτ₂}.
    #[arg(long)]
    pub tau2: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct CurvesArgs {
    #[arg(long)]
    pub alpha: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = DEFAULT_K_MIN)]
    pub k_min: f64,
    #[arg(long, allow_negative_numbers = true, default_value_t = DEFAULT_K_MAX)]
    pub k_max: f64,
    /// Number of k values.
    #[arg(long, default_value_t = DEFAULT_CURVE_SAMPLES)]
    pub samples: usize,
    #[arg(long, value_enum, default_value_t = CurveChoice::Both)]
    pub curve: CurveChoice,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TauPlaneArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SliceArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub tau2: f64,
    /// The slice covers τ₁ in [0, tau1-max].
    #[arg(long, default_value_t = DEFAULT_TAU1_MAX)]
    pub tau1_max: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub trace: TraceArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimArgs {
    #[arg(long, value_enum, default_value_t = GKind::Linear)]
    pub g: GKind,
    /// Constant initial function.
    #[arg(long, allow_negative_numbers = true, default_value_t = DEFAULT_HISTORY)]
    pub phi: f64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = 0.0)]
    pub tau1: f64,
    #[arg(long, default_value_t = 0.0)]
    pub tau2: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
    /// Grid spacing; chosen from the root bound and the delays when absent.
    #[arg(long)]
    pub step: Option<f64>,
    /// Final time; when absent it is chosen per case and doubled while the
    /// verdict is inconclusive.
    #[arg(long)]
    pub horizon: Option<f64>,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VerifyArgs {
    /// Artifact written by classify, tau-plane or slice (JSON or CSV).
    #[arg(long)]
    pub input: PathBuf,
    /// Residual bound for |Δ| at claimed crossings.
    #[arg(long, default_value_t = BOUNDARY_ACCEPT)]
    pub tol: f64,
    #[command(flatten)]
    #[serde(flatten)]
    pub sim: SimArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub output: OutputArgs,
}
