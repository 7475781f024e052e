use std::path::PathBuf;

use civqr_core::moment::DEFAULT_KERNEL;
use civqr_core::optim::OptimConfig;
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::data::ColumnSpec;

#[derive(Debug, Parser)]
#[command(
    name = "civqr",
    version,
    about = "Censored instrumental-variable quantile regression"
)]
pub struct Cli {
    /// Worker threads for the parallel parts (default: all cores)
    #[arg(long, global = true, env = "CIVQR_THREADS")]
    pub threads: Option<usize>,

    /// Write the JSON report here instead of stdout
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate coefficients at one quantile level or a sweep of levels
    Fit(FitArgs),
    /// Percentile bootstrap confidence intervals
    Bootstrap(BootstrapArgs),
    /// Monte Carlo study of one simulation design
    Simulate(SimulateArgs),
    /// Support, relevance and rank checks next to a fit
    Diagnose(DiagnoseArgs),
    /// Write a SYNTHETIC job-training-shaped CSV file
    SynthJtpa(SynthArgs),
    /// List the registered moment kernels and simulation designs
    List,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DataArgs {
    /// Input CSV file with a header row
    #[arg(long)]
    pub data: PathBuf,
    /// Duration column
    #[arg(long)]
    pub y: String,
    /// Event indicator column (1 = observed, 0 = censored)
    #[arg(long)]
    pub delta: String,
    /// Regressor columns, comma separated
    #[arg(long, value_delimiter = ',')]
    pub z: Vec<String>,
    /// Instrument columns, comma separated
    #[arg(long, value_delimiter = ',')]
    pub w: Vec<String>,
    #[arg(long)]
    pub intercept_z: bool,
    #[arg(long)]
    pub intercept_w: bool,
}

impl DataArgs {
    pub fn column_spec(&self) -> ColumnSpec {
        ColumnSpec {
            y_col: self.y.clone(),
            delta_col: self.delta.clone(),
            z_cols: self.z.clone(),
            w_cols: self.w.clone(),
            add_intercept_z: self.intercept_z,
            add_intercept_w: self.intercept_w,
        }
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SearchArgs {
    /// Lower corner of the coefficient box, comma separated
    #[arg(
        long = "box-lower",
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub box_lower: Vec<f64>,
    /// Upper corner of the coefficient box, comma separated
    #[arg(
        long = "box-upper",
        value_delimiter = ',',
        allow_hyphen_values = true,
        required = true
    )]
    pub box_upper: Vec<f64>,
    /// Random starting points for the simplex search
    #[arg(long, default_value_t = OptimConfig::DEFAULT_STARTS)]
    pub starts: usize,
    #[arg(long, default_value_t = OptimConfig::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = OptimConfig::DEFAULT_F_TOL)]
    pub f_tol: f64,
    #[arg(long, default_value_t = OptimConfig::DEFAULT_X_TOL)]
    pub x_tol: f64,
    /// Dominance-sum kernel (see `civqr list`)
    #[arg(long, default_value = DEFAULT_KERNEL)]
    pub kernel: String,
}

impl SearchArgs {
    pub fn optim(&self, seed: u64) -> OptimConfig {
        let mut cfg = OptimConfig::new(self.box_lower.clone(), self.box_upper.clone(), seed);
        cfg.n_starts = self.starts;
        cfg.max_iters = self.max_iters;
        cfg.f_tol = self.f_tol;
        cfg.x_tol = self.x_tol;
        cfg
    }
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    /// Quantile level
    #[arg(long, default_value_t = 0.5, conflicts_with = "quantiles")]
    pub u: f64,
    /// Comma-separated quantile levels for a sweep
    #[arg(long, value_delimiter = ',')]
    pub quantiles: Option<Vec<f64>>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Bootstrap replicates per level; 0 skips intervals
    #[arg(long, default_value_t = 0)]
    pub boot_b: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    /// CSV with columns u, coefficient, estimate, lower, upper
    #[arg(long)]
    pub plot_data: Option<PathBuf>,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct BootstrapArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 0.5)]
    pub u: f64,
    #[arg(long, default_value_t = civqr_core::inference::DEFAULT_BOOTSTRAP_REPLICATES)]
    pub boot_b: usize,
    #[arg(long, default_value_t = 0.95)]
    pub level: f64,
    #[arg(long)]
    pub seed: u64,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SimulateArgs {
    /// Design name (see `civqr list`)
    #[arg(long)]
    pub design: u8,
    #[arg(long)]
    pub u: f64,
    #[arg(long)]
    pub n: usize,
    /// Rate of the exponential censoring time
    #[arg(long)]
    pub lambda: f64,
    #[arg(long)]
    pub reps: usize,
    #[arg(long)]
    pub seed: u64,
    #[arg(long, default_value_t = OptimConfig::DEFAULT_STARTS)]
    pub starts: usize,
    #[arg(long, default_value_t = OptimConfig::DEFAULT_MAX_ITERS)]
    pub max_iters: usize,
    #[arg(long, default_value_t = OptimConfig::DEFAULT_F_TOL)]
    pub f_tol: f64,
    #[arg(long, default_value_t = OptimConfig::DEFAULT_X_TOL)]
    pub x_tol: f64,
    #[arg(
        long = "box-lower",
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "0,0,0"
    )]
    pub box_lower: Vec<f64>,
    #[arg(
        long = "box-upper",
        value_delimiter = ',',
        allow_hyphen_values = true,
        default_value = "1,1,1"
    )]
    pub box_upper: Vec<f64>,
    #[arg(long, default_value = DEFAULT_KERNEL)]
    pub kernel: String,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct DiagnoseArgs {
    #[command(flatten)]
    pub data: DataArgs,
    #[command(flatten)]
    pub search: SearchArgs,
    #[arg(long, default_value_t = 0.5)]
    pub u: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Binary treatment column (must be one of --z)
    #[arg(long)]
    pub treat: Option<String>,
    /// Binary instrument column (must be one of --w)
    #[arg(long)]
    pub instr: Option<String>,
    #[arg(long, default_value_t = 0.25)]
    pub radius: f64,
    #[arg(long, default_value_t = 11)]
    pub steps: usize,
}

#[derive(Debug, Clone, Args, Serialize, Deserialize)]
pub struct SynthArgs {
    #[arg(long, default_value_t = 802)]
    pub n: usize,
    #[arg(long)]
    pub seed: u64,
    /// Destination CSV file
    #[arg(long = "csv")]
    pub csv: PathBuf,
}
