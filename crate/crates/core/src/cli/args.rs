use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::experiments::Preset;
use crate::measures::MeasureKind;

#[derive(Debug, Parser)]
#[command(name = "gvc-randlab", version, about = "Random input-output economies: upstreamness, downstreamness and their covariance")]
pub struct Cli {
    /// `key = value` file; command-line flags take precedence.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Sample an ensemble and record the tracked sector's measures.
    Simulate(SimulateArgs),
    /// Scatter of two measures over an ensemble, with its OLS fit.
    Scatter(ScatterArgs),
    /// Monte Carlo covariance next to the exact value for the reference rows.
    Table1(Table1Args),
    /// (U1, D1) fit as the flow matrix is thinned out.
    Sparsity(SparsityArgs),
    /// Exact moments, covariance and slope over a parameter grid.
    Analytic(AnalyticArgs),
    /// Exact covariance as a function of N.
    Curve(CurveArgs),
    /// Compare closed forms with quadrature, brute force and Neumann sums.
    OracleCheck(OracleArgs),
    /// Validate an input-output table file.
    Ingest(IngestArgs),
    /// Per-sector measures of an input-output table file.
    Measure(MeasureArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum DisorderArg {
    Exp,
    Lognormal,
    Uniform,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum PolicyArg {
    Flag,
    Reject,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, ValueEnum)]
pub enum Format {
    Csv,
    Json,
    Svg,
}

#[derive(Debug, Clone, Default, Args)]
pub struct OutputArgs {
    /// Output directory [default: out].
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Comma-separated subset of csv, json, svg [default: csv,json].
    #[arg(long, value_delimiter = ',')]
    pub format: Option<Vec<Format>>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SeedArgs {
    /// Master seed; falls back to GVC_RANDLAB_SEED.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads [default: available cores].
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ModelArgs {
    /// Start from a named reference ensemble.
    #[arg(long)]
    pub preset: Option<Preset>,
    /// Number of sectors.
    #[arg(long)]
    pub n: Option<usize>,
    /// Rate of the flow entries (mean 1/mu).
    #[arg(long)]
    pub mu: Option<f64>,
    /// Rate of the final demands (mean 1/muf).
    #[arg(long)]
    pub muf: Option<f64>,
    #[arg(long)]
    pub disorder: Option<DisorderArg>,
    /// Log-mean of log-normal flows.
    #[arg(long)]
    pub mu_prime: Option<f64>,
    /// Log-sigma of log-normal flows.
    #[arg(long)]
    pub sigma: Option<f64>,
    /// Log-mean of log-normal final demands.
    #[arg(long)]
    pub muf_prime: Option<f64>,
    /// Log-sigma of log-normal final demands.
    #[arg(long)]
    pub sigma_f: Option<f64>,
    /// Probability that a flow entry is zeroed.
    #[arg(long)]
    pub sparsity: Option<f64>,
    /// Number of sampled tables.
    #[arg(long)]
    pub instances: Option<usize>,
    /// Tracked sector, 1-based [default: 7].
    #[arg(long)]
    pub sector: Option<usize>,
    /// What to do with tables that have negative value added.
    #[arg(long)]
    pub policy: Option<PolicyArg>,
    #[command(flatten)]
    pub seed: SeedArgs,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct ScatterArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Horizontal measure (U1, D1, U_tilde, D_tilde).
    #[arg(long)]
    pub x: Option<MeasureKind>,
    /// Vertical measure.
    #[arg(long)]
    pub y: Option<MeasureKind>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct Table1Args {
    /// Instances per row [default: 10000].
    #[arg(long)]
    pub instances: Option<usize>,
    /// Tracked sector, 1-based [default: 7].
    #[arg(long)]
    pub sector: Option<usize>,
    /// Only these rows of the table, 1-based.
    #[arg(long, value_delimiter = ',')]
    pub rows: Option<Vec<usize>>,
    #[command(flatten)]
    pub seed: SeedArgs,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct SparsityArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// Sparsity levels in [0, 0.5].
    #[arg(long, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct AnalyticArgs {
    /// Sector counts (comma-separated).
    #[arg(long, value_delimiter = ',')]
    pub n: Option<Vec<usize>>,
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub muf: Option<Vec<f64>>,
    /// Use the five reference covariance rows instead of a grid.
    #[arg(long)]
    pub table1: bool,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct CurveArgs {
    /// Largest N [default: 500].
    #[arg(long)]
    pub n_max: Option<usize>,
    /// Rates, paired with --muf [default: the four reference pairs].
    #[arg(long, value_delimiter = ',')]
    pub mu: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',')]
    pub muf: Option<Vec<f64>>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    /// Replace every relative tolerance of the deterministic checks.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Samples for the brute-force moments [default: 1000000].
    #[arg(long)]
    pub samples: Option<usize>,
    /// Allowed distance of brute-force moments, in standard errors [default: 4].
    #[arg(long)]
    pub sigmas: Option<f64>,
    /// Largest k of the integral checks [default: 502].
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct IngestArgs {
    pub path: PathBuf,
    /// Table file format.
    #[arg(long = "table-format", default_value = "csv")]
    pub table_format: String,
    /// Relative tolerance of the accounting identities [default: 1e-6].
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Args)]
pub struct MeasureArgs {
    pub path: PathBuf,
    #[arg(long = "table-format", default_value = "csv")]
    pub table_format: String,
    #[arg(long)]
    pub tol: Option<f64>,
    #[command(flatten)]
    pub output: OutputArgs,
}
