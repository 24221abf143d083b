//! Command-line grammar. The same types serialize into the `config` block of
//! every report, so a report can be re-run from its own header.

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(name = "geo", version, about = "Cubic divergence geometry and round-trip cost toolkit")]
pub struct Cli {
    /// Output format; falls back to GEO_DEFAULT_FORMAT, then json.
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write the report here (atomically) instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<String>,
    /// Run data-parallel loops on the calling thread only.
    #[arg(long, global = true)]
    pub sequential: bool,
    #[command(subcommand)]
    pub command: CliCommand,
}

#[derive(Debug, Subcommand)]
pub enum CliCommand {
    /// Re-run the config embedded in a previous report.
    Replay(ReplayArgs),
    #[command(flatten)]
    Run(Command),
}

#[derive(Debug, Args)]
pub struct ReplayArgs {
    /// A JSON or CSV report written by geo.
    pub report: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Format {
    Json,
    Csv,
    PlotCsv,
}

impl std::str::FromStr for Format {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        <Format as ValueEnum>::from_str(s, true)
    }
}

#[derive(Debug, Clone, Subcommand, Serialize, Deserialize)]
#[serde(tag = "subcommand", rename_all = "kebab-case")]
pub enum Command {
    /// Collective/sequential fidelity gap, exact rationals.
    Gap(GapArgs),
    /// Monte-Carlo single-copy fidelity.
    Estimate(EstimateArgs),
    /// Extract metric and cubic tensors at a point.
    Tensor(TensorArgs),
    /// Antisymmetric part D(P‖P+hv) − D(P+hv‖P) against h.
    Asymmetry(AsymmetryArgs),
    /// Error decay of extraction across a step ladder.
    Convergence(ConvergenceArgs),
    /// Three-leg log-return expansion by simulation.
    Triangle(TriangleArgs),
    /// Work surcharge summed along a path and its reverse.
    Demon(DemonArgs),
    /// Average work surcharge over sampled trades.
    Spread(SpreadArgs),
    /// Bargmann phase of a loop of pure states.
    Holonomy(HolonomyArgs),
    /// Veronese embedding of a qubit into the spin-1 symmetric subspace.
    Veronese(VeroneseArgs),
    /// Evaluate a divergence between two points.
    Divergence(DivergenceArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Gap(_) => "gap",
            Command::Estimate(_) => "estimate",
            Command::Tensor(_) => "tensor",
            Command::Asymmetry(_) => "asymmetry",
            Command::Convergence(_) => "convergence",
            Command::Triangle(_) => "triangle",
            Command::Demon(_) => "demon",
            Command::Spread(_) => "spread",
            Command::Holonomy(_) => "holonomy",
            Command::Veronese(_) => "veronese",
            Command::Divergence(_) => "divergence",
        }
    }
}

/// A classical family, or a quantum divergence on a chart.
#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct Target {
    /// exponential | bernoulli | gaussian | gaussian-fixed[:σ] | categorical:k
    #[arg(long, required_unless_present = "chart", conflicts_with = "chart")]
    pub family: Option<String>,
    /// Probability margin for classical families [default: 1e-9].
    #[arg(long, conflicts_with = "chart")]
    pub margin: Option<f64>,
    /// bloch | qutrit-diagonal | qutrit-gellmann | qubit-pure | veronese-pure
    #[arg(long)]
    pub chart: Option<String>,
    /// qre | qjsd, with --chart [default: qre]
    #[arg(long, requires = "chart")]
    pub divergence: Option<String>,
    /// Smoothing weight for qre, with --chart [default: 1e-3]
    #[arg(long, requires = "chart")]
    pub eps: Option<f64>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
#[command(group = clap::ArgGroup::new("size").required(true).args(["n", "table"]))]
pub struct GapArgs {
    /// Number of copies N.
    #[arg(long)]
    pub n: Option<u64>,
    /// Report N = 1..=TABLE.
    #[arg(long)]
    pub table: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Strategy {
    OutcomeAligned,
    Fixed,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct EstimateArgs {
    #[arg(long, default_value_t = 1_000_000)]
    pub trials: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "outcome-aligned")]
    pub strategy: Strategy,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TensorArgs {
    #[command(flatten)]
    pub target: Target,
    /// Base point, comma-separated chart coordinates.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub at: Vec<f64>,
    #[arg(long, default_value_t = 1e-2)]
    pub h_metric: f64,
    #[arg(long, default_value_t = 5e-2)]
    pub h_cubic: f64,
    /// Richardson extrapolation over (h, h/2).
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub richardson: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct AsymmetryArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub at: Vec<f64>,
    /// Direction v.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub dir: Vec<f64>,
    /// Strictly decreasing step scales, at least four.
    #[arg(long, value_delimiter = ',', default_value = "0.1,0.05,0.025,0.0125")]
    pub steps: Vec<f64>,
    /// Step for the reference cubic tensor.
    #[arg(long, default_value_t = 5e-2)]
    pub h: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub richardson: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartArg {
    Default,
    Natural,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct ConvergenceArgs {
    #[arg(long)]
    pub family: String,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub at: Vec<f64>,
    #[arg(long, value_delimiter = ',', default_value = "0.04,0.02,0.01,0.005,0.0025")]
    pub ladder: Vec<f64>,
    /// Chart in which the ladder runs.
    #[arg(long, value_enum, default_value = "default")]
    pub chart: ChartArg,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct TriangleArgs {
    /// Three leg distributions: fixed:v | gaussian:loc,scale |
    /// skewnormal:loc,scale,shape | lognormal:loc,scale,shape
    #[arg(long, num_args = 3, required_unless_present = "sweep_shapes", conflicts_with = "sweep_shapes")]
    pub legs: Option<Vec<String>>,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
    /// Sweep zero-mean skew-normal legs over these shapes.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub sweep_shapes: Option<Vec<f64>>,
    /// Leg scale for --sweep-shapes.
    #[arg(long, default_value_t = 0.01)]
    pub scale: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TensorSourceArg {
    /// Finite-difference extraction at each point.
    Extracted,
    /// Closed-form expansion cubic (classical families only).
    Oracle,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EvaluationArg {
    Start,
    Midpoint,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DemonArgs {
    #[command(flatten)]
    pub target: Target,
    /// One waypoint per line, coordinates comma-separated.
    #[arg(long, required = true)]
    pub path: Option<String>,
    /// Waypoints read from --path; filled in when the config is resolved.
    #[arg(skip)]
    pub waypoints: Option<Vec<Vec<f64>>>,
    #[arg(long, value_enum, default_value = "extracted")]
    pub source: TensorSourceArg,
    #[arg(long, value_enum, default_value = "start")]
    pub evaluation: EvaluationArg,
    #[arg(long, default_value_t = 5e-2)]
    pub h: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub richardson: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SpreadArgs {
    #[command(flatten)]
    pub target: Target,
    /// fixed:<point>,<step> | symmetric:<point>,<step> | box:<lo>,<hi>,<step>
    #[arg(long, allow_hyphen_values = true)]
    pub sampler: String,
    #[arg(long, default_value_t = 10_000)]
    pub samples: u64,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "extracted")]
    pub source: TensorSourceArg,
    #[arg(long, default_value_t = 5e-2)]
    pub h: f64,
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub richardson: bool,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct HolonomyArgs {
    /// JSON file: array of states, each an array of amplitudes.
    #[arg(long = "loop", conflicts_with = "states")]
    pub loop_file: Option<String>,
    /// States as comma-separated complex literals, e.g. 1,0 0.7071,0.7071i
    #[arg(long, num_args = 1.., required_unless_present = "loop_file")]
    pub states: Option<Vec<String>>,
    /// Map qubit states through the Veronese embedding first.
    #[arg(long)]
    pub veronese: bool,
    /// Resolved loop as [re, im] amplitude pairs.
    #[arg(skip)]
    pub resolved: Option<Vec<Vec<[f64; 2]>>>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct VeroneseArgs {
    /// Qubit state, e.g. 0.7071,0.7071
    #[arg(long, allow_hyphen_values = true)]
    pub state: String,
    /// Second qubit for the overlap-squaring check.
    #[arg(long, allow_hyphen_values = true)]
    pub other: Option<String>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DivergenceArgs {
    #[command(flatten)]
    pub target: Target,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub p: Vec<f64>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    pub q: Vec<f64>,
}
