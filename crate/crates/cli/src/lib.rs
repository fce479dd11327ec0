//! Command-line front end for `srobust`: `fit`, `enumerate`, `bench` and
//! `simulate`. Every command writes machine-readable output to stdout and
//! progress messages to stderr.

pub mod bench;
pub mod commands;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use srobust::sfit::DEFAULT_NSAMP;

pub use commands::run;

#[derive(Debug, Parser)]
#[command(
    name = "srobust",
    version,
    about = "Robust S-estimation of linear regression with nonsingular subsampling",
    long_about = "Robust S-estimation of linear regression. Starting candidates come from \
                  nonsingular subsampling: observations are added one at a time to an \
                  incremental LU factorization, and any observation that is collinear with \
                  those already chosen is skipped instead of discarding the subsample.\n\n\
                  JSON goes to stdout, progress messages to stderr. Exit codes: 0 success, \
                  2 input error, 3 rank or feasibility error, 4 internal error."
)]
pub struct Cli {
    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Fit an S-estimate of regression to a CSV file.
    Fit(FitArgs),
    /// Count the size-p row subsets of a design and how many are nonsingular.
    Enumerate(EnumerateArgs),
    /// Compare nonsingular and rejection subsampling on the same data.
    Bench(BenchArgs),
    /// Write a synthetic data set with categorical and continuous predictors.
    Simulate(SimulateArgs),
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// CSV file with a header row.
    #[arg(long, value_name = "PATH")]
    pub data: PathBuf,

    /// Model formula, e.g. `y ~ x1 + f1 + x1:f1`. The intercept is implicit;
    /// `- 1` removes it and `a*b` expands to `a + b + a:b`.
    #[arg(long)]
    pub formula: String,

    /// Columns to treat as factors even if they look numeric
    /// (comma-separated). Non-numeric columns are always factors.
    #[arg(long, value_delimiter = ',', value_name = "COLS")]
    pub factors: Vec<String>,
}

#[derive(Debug, Clone, Args)]
pub struct SingTolArg {
    /// Pivot threshold below which an observation counts as collinear.
    /// Default: p · 2.22e-16, relative to the design after each column is
    /// divided by its largest absolute value.
    #[arg(long, value_name = "TOL")]
    pub sing_tol: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    /// Candidate generator: nonsingular, rejection or exhaustive.
    #[arg(long, default_value = "nonsingular")]
    pub method: String,

    /// Seed; candidate i draws from stream i of this seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Number of candidates (ignored by the exhaustive method).
    #[arg(long, default_value_t = DEFAULT_NSAMP)]
    pub nsamp: usize,

    /// Bisquare tuning constant (1.54764 gives E[rho(Z)] = 1/2 under the normal).
    #[arg(long, default_value_t = srobust::rho::DEFAULT_TUNING)]
    pub cc: f64,

    /// Right-hand side of the scale equation, in (0, 1).
    /// Default: (1 − p/n) / 2 clamped to [0.05, 0.5].
    #[arg(long)]
    pub kappa: Option<f64>,

    /// Refinement stops when no fitted value moves by more than
    /// this times the current scale.
    #[arg(long, default_value_t = srobust::irls::DEFAULT_COEF_TOL)]
    pub refine_tol: f64,

    /// Maximum reweighting passes per candidate.
    #[arg(long, default_value_t = srobust::irls::DEFAULT_MAX_ITER)]
    pub refine_maxit: usize,

    #[command(flatten)]
    pub sing_tol: SingTolArg,

    /// Worker threads for candidate evaluation; 0 uses all cores.
    /// The output does not depend on this setting.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct EnumerateArgs {
    #[command(flatten)]
    pub model: ModelArgs,

    #[command(flatten)]
    pub sing_tol: SingTolArg,
}

#[derive(Debug, Clone, Args)]
pub struct BenchArgs {
    /// Built-in scenario: continuous (n = 1000, p = 10), anova (3 groups × 3
    /// replicates) or rare-level (n = 50, one 10-level factor with a level
    /// observed once). Ignored when --data is given.
    #[arg(long, default_value = "continuous")]
    pub scenario: String,

    /// CSV file to benchmark instead of a built-in scenario.
    #[arg(long, value_name = "PATH", requires = "formula")]
    pub data: Option<PathBuf>,

    /// Model formula for --data.
    #[arg(long)]
    pub formula: Option<String>,

    /// Factor columns for --data (comma-separated).
    #[arg(long, value_delimiter = ',', value_name = "COLS")]
    pub factors: Vec<String>,

    /// Successful candidates requested from each method.
    #[arg(long, default_value_t = 500)]
    pub candidates: usize,

    /// Draws the rejection method may spend on one candidate before
    /// giving up on it.
    #[arg(long, default_value_t = bench::DEFAULT_MAX_TRIES)]
    pub max_tries: u64,

    /// Seed for the scenario data and the subsample streams.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,

    /// Timed repetitions; reported times are medians.
    #[arg(long, default_value_t = 1)]
    pub repeat: usize,

    /// Only time candidate generation; skip refinement and final_sigma.
    #[arg(long)]
    pub skip_refine: bool,

    #[command(flatten)]
    pub sing_tol: SingTolArg,

    /// Worker threads for refinement; 0 uses all cores. Subsampling is
    /// always timed on one thread.
    #[arg(long, default_value_t = 0)]
    pub threads: usize,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    /// `key = value` file with any of: n, factors, continuous, beta,
    /// noise_sd, outlier_fraction, outlier_shift, seed. Flags override it.
    #[arg(long, value_name = "PATH")]
    pub config: Option<PathBuf>,

    /// Number of observations (default 50).
    #[arg(long)]
    pub n: Option<usize>,

    /// Level frequencies per factor, e.g. `3,3,3; 1,49` for two factors.
    #[arg(long)]
    pub factors: Option<String>,

    /// Number of standard-normal continuous predictors (default 1).
    #[arg(long)]
    pub continuous: Option<usize>,

    /// Coefficients in design-column order (default 1, 2, …, p).
    #[arg(long, allow_hyphen_values = true)]
    pub beta: Option<String>,

    /// Standard deviation of the Gaussian errors (default 1).
    #[arg(long)]
    pub noise_sd: Option<f64>,

    /// Fraction of responses shifted by --outlier-shift (default 0).
    #[arg(long)]
    pub outlier_fraction: Option<f64>,

    /// Shift added to outlying responses (default 10).
    #[arg(long, allow_hyphen_values = true)]
    pub outlier_shift: Option<f64>,

    /// Seed (default 0).
    #[arg(long)]
    pub seed: Option<u64>,

    /// Output file; stdout when omitted.
    #[arg(long, value_name = "PATH")]
    pub out: Option<PathBuf>,
}

/// Process exit code for an error: 2 for bad input, 3 for rank or
/// feasibility failures, 4 otherwise.
pub fn exit_code(err: &anyhow::Error) -> i32 {
    if let Some(e) = err.downcast_ref::<srobust::Error>() {
        if e.is_input_error() {
            2
        } else if e.is_rank_error() {
            3
        } else {
            4
        }
    } else if err.downcast_ref::<std::io::Error>().is_some() {
        2
    } else {
        4
    }
}
