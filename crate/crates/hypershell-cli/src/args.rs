use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

#[derive(Debug, Parser, Serialize)]
#[command(name = "hypershell", version, about = "Lattice points in hyperbolic shells: experiment runner")]
pub struct Cli {
    /// Form file (TOML).
    #[arg(long, global = true)]
    pub form: Option<PathBuf>,
    /// CSV output path; a JSON sidecar is written next to it. Without it the CSV goes to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 1)]
    pub seed: u64,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "HYPERSHELL_THREADS")]
    pub threads: Option<usize>,
    /// Work budget: points for counting, nodes for minima, terms for theta sums.
    #[arg(long, global = true)]
    pub budget: Option<f64>,
    /// Print a work estimate and exit without computing or writing anything.
    #[arg(long, global = true)]
    pub dry_run: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(tag = "operation", rename_all = "kebab-case")]
pub enum Command {
    /// Lattice points in the shell, one row per r.
    Count(CountArgs),
    /// Count against volume, one row per r.
    Delta(DeltaArgs),
    /// Distribution-function remainder (a = cube minimum), one row per r.
    Distr(DistrArgs),
    /// Largest gap between consecutive values, one row per r.
    Gaps(GapsArgs),
    /// Successive minima, one row per minimum.
    Minima(MinimaArgs),
    /// Gamma_{T,r}, one row per t-grid point.
    Gamma(GammaArgs),
    /// D(t, nu), one row per nu.
    Dioph(DiophArgs),
    /// Measure of {t : M_1 <= tau}, one row per (r, tau).
    Mmeasure(MmeasureArgs),
    /// Theta sum and integral; with --bound-grid, the theta bound ratio per t.
    Theta(ThetaArgs),
    /// Both sides of the transformation formula on random instances.
    PoissonCheck(PoissonArgs),
    /// Smoothed lattice sum and integral, one row per r.
    Smoothed(SmoothedArgs),
    /// rho(r, Q, T) per T with the minimum over the grid.
    Rho(RhoArgs),
    /// Inequality suite, one row per (check, r).
    Suite(SuiteArgs),
    /// Run an experiment file.
    Run(RunArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Count(_) => "count",
            Command::Delta(_) => "delta",
            Command::Distr(_) => "distr",
            Command::Gaps(_) => "gaps",
            Command::Minima(_) => "minima",
            Command::Gamma(_) => "gamma",
            Command::Dioph(_) => "dioph",
            Command::Mmeasure(_) => "mmeasure",
            Command::Theta(_) => "theta",
            Command::PoissonCheck(_) => "poisson-check",
            Command::Smoothed(_) => "smoothed",
            Command::Rho(_) => "rho",
            Command::Suite(_) => "suite",
            Command::Run(_) => "run",
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum AlgoArg {
    Block,
    Direct,
}

#[derive(Debug, Args, Serialize)]
pub struct CountArgs {
    /// Lower bound; "-inf" selects the cube minimum.
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    /// Shift "m1,...,md" (default 0).
    #[arg(long = "M", allow_hyphen_values = true)]
    pub m: Option<String>,
    /// Radius, or a comma-separated list.
    #[arg(long)]
    pub r: String,
    #[arg(long, value_enum)]
    pub algo: Option<AlgoArg>,
    /// Fill the `seconds` column (makes the CSV run-dependent).
    #[arg(long)]
    pub timing: bool,
}

#[derive(Debug, Args, Serialize)]
pub struct DeltaArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: String,
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long = "M", allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long)]
    pub r_list: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DistrArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub b: String,
    #[arg(long = "M", allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long)]
    pub r_list: String,
    #[arg(long, default_value_t = 1_000_000)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct GapsArgs {
    #[arg(long = "M", allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long)]
    pub r_list: String,
    /// Value window "lo,hi".
    #[arg(long, allow_hyphen_values = true)]
    pub window: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct MinimaArgs {
    #[arg(long)]
    pub r: String,
    #[arg(long, allow_hyphen_values = true)]
    pub t: String,
    /// Compute only the first k minima.
    #[arg(long)]
    pub count: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct GammaArgs {
    #[arg(long = "T")]
    pub big_t: f64,
    #[arg(long)]
    pub r_list: String,
    #[arg(long, default_value_t = 64)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct DiophArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub t: f64,
    /// One value or a comma-separated list.
    #[arg(long)]
    pub nu: String,
}

#[derive(Debug, Args, Serialize)]
pub struct MmeasureArgs {
    #[arg(long)]
    pub r_list: String,
    #[arg(long)]
    pub kappa: f64,
    #[arg(long)]
    pub xi: f64,
    /// One value or a comma-separated list.
    #[arg(long)]
    pub tau: String,
    #[arg(long, default_value_t = 256)]
    pub grid: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct ThetaArgs {
    #[arg(long)]
    pub r: f64,
    /// "re,im".
    #[arg(long, allow_hyphen_values = true)]
    pub z: Option<String>,
    /// Complex entries such as "0.5,1-2i" (default 0).
    #[arg(long, allow_hyphen_values = true)]
    pub v: Option<String>,
    #[arg(long = "M", allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long, default_value_t = hypershell::theta::DEFAULT_TRUNCATION)]
    pub truncation: f64,
    /// Check the theta bound on this many t-points instead of evaluating at one z.
    #[arg(long)]
    pub bound_grid: Option<usize>,
}

#[derive(Debug, Args, Serialize)]
pub struct PoissonArgs {
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = 50)]
    pub trials: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct SmoothedArgs {
    #[arg(long, allow_hyphen_values = true)]
    pub a: f64,
    #[arg(long, allow_hyphen_values = true)]
    pub b: f64,
    #[arg(long)]
    pub w: f64,
    #[arg(long)]
    pub eps: f64,
    /// Use the inner taper (transition on [1 - eps, 1]).
    #[arg(long)]
    pub inner: bool,
    /// Taper order (default d + 2).
    #[arg(long = "K")]
    pub k: Option<u32>,
    #[arg(long = "M", allow_hyphen_values = true)]
    pub m: Option<String>,
    #[arg(long)]
    pub r_list: String,
    #[arg(long, default_value_t = 100_000)]
    pub samples: usize,
}

#[derive(Debug, Args, Serialize)]
pub struct RhoArgs {
    #[arg(long)]
    pub r_list: String,
    /// T values (default powers of two up to 1024).
    #[arg(long = "T-grid")]
    pub t_grid: Option<String>,
}

#[derive(Debug, Args, Serialize)]
pub struct SuiteArgs {
    /// Overrides `r_list` from the config.
    #[arg(long)]
    pub r_list: Option<String>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Overrides `r_min` from the config.
    #[arg(long)]
    pub r_min: Option<f64>,
}

#[derive(Debug, Args, Serialize)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
}
