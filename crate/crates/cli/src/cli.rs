use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use dicke_core::{AnglePolicy, Backend, Engine};

use crate::figure::FigureId;

#[derive(Debug, Parser)]
#[command(name = "dicke-prep", version, about = "Adaptive rotate-and-measure Dicke state preparation toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Base seed for every random stream.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (defaults to all cores).
    #[arg(long, global = true, env = "DICKE_PREP_THREADS")]
    pub threads: Option<usize>,
    #[arg(long, global = true, default_value = ".")]
    pub out_dir: PathBuf,
    /// Omit the generation time from output headers.
    #[arg(long, global = true)]
    pub no_timestamp: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Wigner d-matrix columns.
    Dmatrix(DmatrixArgs),
    /// Rotation angles for every starting m.
    Angles(AnglesArgs),
    /// Transition matrix and expected steps of the absorbing chain.
    Chain(ChainArgs),
    /// Monte Carlo trajectories.
    Simulate(SimulateArgs),
    /// Exact values against the large-j formulas.
    Asymptotics(AsymptoticsArgs),
    /// Husimi Q of a Dicke state along theta.
    Husimi(HusimiArgs),
    /// Tilted-ring model against exact transition rows.
    Geometry(GeometryArgs),
    /// Dispersive-cavity Hamming-weight readout.
    Cavity(CavityArgs),
    /// Data behind a figure panel.
    Figure(FigureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyArg {
    Geometric,
    ApproxMt0,
    NumericOptimal,
}

impl From<PolicyArg> for AnglePolicy {
    fn from(p: PolicyArg) -> Self {
        match p {
            PolicyArg::Geometric => AnglePolicy::Geometric,
            PolicyArg::ApproxMt0 => AnglePolicy::ApproxMt0,
            PolicyArg::NumericOptimal => AnglePolicy::NumericOptimal,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ResetArg {
    None,
    SqrtJ,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum BackendArg {
    Auto,
    LogSum,
    Propagation,
}

impl BackendArg {
    pub fn resolve(self, two_j: u32) -> Backend {
        match self {
            BackendArg::Auto => Backend::auto(two_j),
            BackendArg::LogSum => Backend::LogSum,
            BackendArg::Propagation => Backend::TridiagonalPropagation,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum EngineArg {
    Chain,
    Statevector,
}

impl From<EngineArg> for Engine {
    fn from(e: EngineArg) -> Self {
        match e {
            EngineArg::Chain => Engine::Chain,
            EngineArg::Statevector => Engine::Statevector,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct DmatrixArgs {
    #[arg(long)]
    pub two_j: u32,
    /// Rotation angle in radians.
    #[arg(long, allow_hyphen_values = true)]
    pub theta: f64,
    /// Single column; all columns when omitted.
    #[arg(long, allow_hyphen_values = true)]
    pub two_m: Option<i32>,
    #[arg(long, value_enum, default_value = "auto")]
    pub backend: BackendArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AnglesArgs {
    #[arg(long)]
    pub two_j: u32,
    /// Target; defaults to the lowest non-negative value.
    #[arg(long, allow_hyphen_values = true)]
    pub two_mt: Option<i32>,
    #[arg(long, value_enum, default_value = "geometric")]
    pub policy: PolicyArg,
}

/// A protocol given either as a JSON config file or by flags.
#[derive(Debug, Clone, Args, Serialize)]
pub struct ProtocolArgs {
    #[arg(long, conflicts_with_all = ["two_j", "two_mt", "policy", "reset", "reset_threshold", "max_iterations"])]
    pub config: Option<PathBuf>,
    #[arg(long, required_unless_present = "config")]
    pub two_j: Option<u32>,
    #[arg(long, allow_hyphen_values = true)]
    pub two_mt: Option<i32>,
    #[arg(long, value_enum)]
    pub policy: Option<PolicyArg>,
    #[arg(long, value_enum, conflicts_with = "reset_threshold")]
    pub reset: Option<ResetArg>,
    /// Reset whenever the measured |m| exceeds this value.
    #[arg(long)]
    pub reset_threshold: Option<f64>,
    #[arg(long)]
    pub max_iterations: Option<u32>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum ScopeArg {
    Full,
    Reachable,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct ChainArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, value_enum, default_value = "full")]
    pub scope: ScopeArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub protocol: ProtocolArgs,
    #[arg(long, default_value_t = 10_000)]
    pub runs: u64,
    #[arg(long, value_enum, default_value = "chain")]
    pub engine: EngineArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum AsymptoticsMode {
    StationaryPhase,
    Bessel,
    Contraction,
    Moments,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct AsymptoticsArgs {
    #[arg(long, value_enum)]
    pub mode: AsymptoticsMode,
    #[arg(long)]
    pub two_j: u32,
    /// Starting state; contraction mode sweeps the whole window when omitted.
    #[arg(long)]
    pub two_m: Option<i32>,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Bessel mode: largest |m - m'|.
    #[arg(long, default_value_t = 3)]
    pub reach: u32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub two_mt: i32,
    #[arg(long, value_enum, default_value = "approx-mt0")]
    pub policy: PolicyArg,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct HusimiArgs {
    #[arg(long)]
    pub two_j: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub two_m: i32,
    /// Number of theta samples on [0, pi].
    #[arg(long, default_value_t = 181)]
    pub grid: usize,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct GeometryArgs {
    /// Emit the pdf-versus-exact comparison rows.
    #[arg(long)]
    pub pdf: bool,
    #[arg(long)]
    pub two_j: u32,
    #[arg(long, allow_hyphen_values = true)]
    pub two_m: i32,
    #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
    pub two_mt: i32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum CavityMode {
    Spectrum,
    Fisher,
    Estimate,
    Resolvability,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct CavityArgs {
    #[arg(long, value_enum)]
    pub mode: CavityMode,
    #[arg(long, default_value_t = 1.0)]
    pub kappa: f64,
    #[arg(long, default_value_t = 0.01)]
    pub chi: f64,
    /// Single-photon coupling for the resolvability table.
    #[arg(long, default_value_t = 100.0)]
    pub g: f64,
    #[arg(long, default_value_t = 20)]
    pub n_atoms: u32,
    #[arg(long, default_value_t = 0)]
    pub weight: u32,
    #[arg(long, default_value_t = 10_000)]
    pub photons: u64,
    #[arg(long, default_value_t = 1_000)]
    pub reps: u64,
}

#[derive(Debug, Clone, Args, Serialize)]
pub struct FigureArgs {
    #[arg(long, value_enum)]
    pub id: FigureId,
    /// Comma-separated `two_j` values (qubit counts for cavity-spectrum).
    #[arg(long, value_delimiter = ',')]
    pub two_j: Option<Vec<u32>>,
}
