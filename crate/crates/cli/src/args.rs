use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use aid_core::subsolvers::KernelKind;
use aid_core::{BalanceMode, ProblemKind};

#[derive(Debug, Parser)]
#[command(name = "aid", version, about = "Aggregate and iterative disaggregate solvers")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Least absolute deviation regression.
    Lad(RunArgs),
    /// Soft-margin SVM, linear or RBF kernel.
    Svm(RunArgs),
    /// Semi-supervised SVM.
    S3vm(RunArgs),
    /// Run AID and the direct solve on the same instance and print the metrics as JSON.
    Compare {
        #[arg(value_enum)]
        problem: Problem,
        #[command(flatten)]
        args: RunArgs,
    },
    /// Per-iteration aggregation rates for entries near and far from the fit, as CSV.
    DiagnoseRates {
        #[arg(value_enum)]
        problem: Problem,
        /// CSV destination; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        #[command(flatten)]
        args: RunArgs,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Problem {
    Lad,
    Svm,
    S3vm,
}

impl From<Problem> for ProblemKind {
    fn from(p: Problem) -> Self {
        match p {
            Problem::Lad => ProblemKind::Lad,
            Problem::Svm => ProblemKind::Svm,
            Problem::S3vm => ProblemKind::S3vm,
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct RunArgs {
    /// Data file (`.csv`, otherwise svmlight). A synthetic instance is generated when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// CSV header of the target column (default: last column).
    #[arg(long)]
    pub target_column: Option<String>,
    /// Synthetic entries.
    #[arg(long, default_value_t = 1000)]
    pub n: usize,
    /// Synthetic features.
    #[arg(long, default_value_t = 5)]
    pub m: usize,
    /// Share of labeled entries in a synthetic S3VM instance.
    #[arg(long, default_value_t = 0.1)]
    pub labeled_fraction: f64,
    /// Seed for data generation and clustering.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Initial aggregation rate (overrides the problem default).
    #[arg(long)]
    pub r0: Option<f64>,
    /// Optimality gap tolerance.
    #[arg(long)]
    pub tol: Option<f64>,
    #[arg(long)]
    pub max_iter: Option<usize>,
    /// Seconds.
    #[arg(long)]
    pub time_limit: Option<f64>,
    /// SVM penalty.
    #[arg(long = "M", default_value_t = aid_core::svm::DEFAULT_PENALTY)]
    pub penalty: f64,
    /// S3VM labeled penalty.
    #[arg(long = "Ml", default_value_t = 5.0)]
    pub labeled_penalty: f64,
    /// S3VM unlabeled penalty.
    #[arg(long = "Mu", default_value_t = 1.0)]
    pub unlabeled_penalty: f64,
    /// `linear` or `rbf:GAMMA`.
    #[arg(long, default_value = "linear", value_parser = parse_kernel)]
    pub kernel: KernelKind,
    #[arg(long, default_value = "none", value_parser = parse_balance)]
    pub balance: BalanceMode,
    /// Boost the minority class instead of the majority under `--balance cost`.
    #[arg(long)]
    pub balance_cost_swapped: bool,
    /// Stop after K iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Append an all-ones column.
    #[arg(long)]
    pub intercept: bool,
    /// Also solve the full problem directly and report the metrics.
    #[arg(long)]
    pub oracle: bool,
    /// JSON-lines log destination; stdout for the run subcommands when absent.
    #[arg(long)]
    pub log: Option<PathBuf>,
    /// Fitted model destination.
    #[arg(long)]
    pub model: Option<PathBuf>,
}

pub fn parse_kernel(s: &str) -> Result<KernelKind, String> {
    if s == "linear" {
        return Ok(KernelKind::Linear);
    }
    let gamma = s
        .strip_prefix("rbf:")
        .ok_or_else(|| format!("expected `linear` or `rbf:GAMMA`, got `{s}`"))?
        .parse::<f64>()
        .map_err(|e| format!("bad RBF gamma: {e}"))?;
    if !(gamma > 0.0) || !gamma.is_finite() {
        return Err(format!("RBF gamma must be positive, got {gamma}"));
    }
    Ok(KernelKind::Rbf { gamma })
}

fn parse_balance(s: &str) -> Result<BalanceMode, String> {
    s.parse().map_err(|e: aid_core::AidError| e.to_string())
}
