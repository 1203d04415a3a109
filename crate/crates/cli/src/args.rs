//! Command-line surface. Every subcommand struct doubles as its resolved
//! configuration: it is echoed into the manifest and can be overridden
//! field by field from `--config`.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};

use polystretch::tail_stats::DEFAULT_K_FRACTION;

const AFTER_HELP: &str = "Positions and angles are in radians; times are nondimensional.\n\
Exit codes: 0 success, 1 invalid input or usage, 2 numerical failure (blowup, CFL).";

#[derive(Debug, Parser)]
#[command(name = "polystretch", version, about = "Polymer stretching by transport noise: experiments and reports", after_help = AFTER_HELP)]
pub struct Cli {
    /// Worker threads; 0 picks one per core. Results do not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    pub threads: usize,
    /// Directory for output files and the run manifest; stdout if absent.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
    /// JSON object overriding subcommand options; explicit flags win.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// List the shell modes as CSV (k1,k2,theta,phase).
    Modes(ModesArgs),
    /// Compare lattice correctors with their closed-form limits.
    VerifyCovariance(VerifyCovarianceArgs),
    /// Monte Carlo ensemble of the pre-limit or limit dumbbell SDE.
    Simulate(SimulateArgs),
    /// Closed-form rotation-invariant equilibrium on a log-spaced grid.
    Stationary(StationaryArgs),
    /// Evolve the radial Fokker–Planck equation from a Gaussian.
    FpRadial(FpRadialArgs),
    /// Hill fit and empirical survival function of |R| samples.
    FitTail(FitTailArgs),
    /// Structure-tensor moment equation of the limit model.
    Moments(MomentsArgs),
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct ModesArgs {
    /// Shell index: modes with N ≤ |k| ≤ 2N.
    #[arg(long = "N", default_value_t = 1)]
    pub n: u32,
    /// Noise intensity.
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct VerifyCovarianceArgs {
    /// Shell indices to compare.
    #[arg(long = "N-list", value_delimiter = ',', default_values_t = [8u32, 16, 32, 64, 128])]
    pub n_list: Vec<u32>,
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    /// Random unit vectors r per shell.
    #[arg(long, default_value_t = 16)]
    pub r_samples: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

/// Parameters of the limit model. `--kt-beta`, when given, sets the
/// intensity so that k_T β takes that value.
#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct LimitArgs {
    #[arg(long, default_value_t = 1.0, allow_negative_numbers = true)]
    pub a: f64,
    #[arg(long)]
    pub kt_beta: Option<f64>,
    /// Relaxation time.
    #[arg(long, default_value_t = 1.0)]
    pub beta: f64,
    /// Thermal amplitude.
    #[arg(long, default_value_t = 1.0)]
    pub sigma: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModelKind {
    Limit,
    Prelimit,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FlowKind {
    Zero,
    /// Stream function sin x₁ sin x₂.
    Cellular,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SteppingKind {
    Explicit,
    Implicit,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    #[arg(long, value_enum, default_value_t = ModelKind::Limit)]
    pub model: ModelKind,
    /// Shell index of the pre-limit model.
    #[arg(long = "N", default_value_t = 8)]
    pub n: u32,
    #[command(flatten)]
    #[serde(flatten)]
    pub limit: LimitArgs,
    /// Time step; defaults to β/50 and is reduced by the stability rule.
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 1.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 1000)]
    pub n_paths: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial end-to-end vector.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0], allow_negative_numbers = true)]
    pub r0: Vec<f64>,
    /// Initial center of mass; uniform on the torus if absent.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub x0: Option<Vec<f64>>,
    #[arg(long, value_enum, default_value_t = FlowKind::Zero)]
    pub velocity: FlowKind,
    /// Output intervals on [0, t_final].
    #[arg(long, default_value_t = 10)]
    pub n_out: usize,
    /// Step halvings allowed after a blowup.
    #[arg(long, default_value_t = 2)]
    pub max_halvings: u32,
    /// Also write the final |R| samples as CSV.
    #[arg(long)]
    pub samples: bool,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct StationaryArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub limit: LimitArgs,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    /// Smallest radius, in units of σ√β.
    #[arg(long, default_value_t = 1e-3)]
    pub rho_min: f64,
    /// Largest radius, in units of σ√β.
    #[arg(long, default_value_t = 1e3)]
    pub rho_max: f64,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct FpRadialArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub limit: LimitArgs,
    #[arg(long, default_value_t = polystretch::radial_fp::DEFAULT_CELLS)]
    pub cells: usize,
    /// Outer radius, in units of σ√β.
    #[arg(long, default_value_t = 40.0)]
    pub rho_max: f64,
    /// End of the uniform part of the grid, in units of σ√β.
    #[arg(long, default_value_t = 2.0)]
    pub rho_lin: f64,
    /// Per-component variance of the Gaussian initial density.
    #[arg(long, default_value_t = 1.0)]
    pub init_var: f64,
    #[arg(long, value_enum, default_value_t = SteppingKind::Explicit)]
    pub stepping: SteppingKind,
    /// Time step; defaults to the CFL limit (explicit) or 0.01 (implicit).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, value_delimiter = ',', default_values_t = [1.0, 2.0, 5.0, 10.0, 20.0])]
    pub checkpoints: Vec<f64>,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct FitTailArgs {
    /// One-column CSV of positive samples; a non-numeric first line is a header.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_K_FRACTION)]
    pub k_fraction: f64,
    #[arg(long, value_delimiter = ',', default_values_t = polystretch::tail_stats::K_FRACTION_SWEEP)]
    pub sweep: Vec<f64>,
    /// Number of log-spaced survival levels.
    #[arg(long, default_value_t = 50)]
    pub levels: usize,
}

#[derive(Clone, Debug, Args, Serialize, Deserialize)]
pub struct MomentsArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub limit: LimitArgs,
    /// Initial structure tensor as xx,xy,yy.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.0, 0.0], allow_negative_numbers = true)]
    pub t0: Vec<f64>,
    #[arg(long, default_value_t = 10.0)]
    pub t_final: f64,
    #[arg(long, default_value_t = 0.01)]
    pub dt: f64,
    /// Output intervals on [0, t_final].
    #[arg(long, default_value_t = 100)]
    pub n_out: usize,
}
