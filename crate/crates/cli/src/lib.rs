//! Command-line front end for `wassmix`.
//!
//! Subcommands:
//! - `simulate`: Monte Carlo benchmark, writes `report.csv` and `report.json`.
//! - `fit`: barycentric weights of a model spec against a target sample,
//!   writes `weights.json`.
//! - `sequential`: one-step-ahead forecasting over a claims panel, writes
//!   `weights.csv` and `risk.csv`.
//! - `risk`: VaR and ES of a sample or model, writes `risk.csv`.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric error.

pub mod commands;
pub mod config;
pub mod error;
pub mod input;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use wassmix::solver::StepSize;
use wassmix::tuning::{log_spaced, TuningGrid};
use wassmix::{Grid, PenaltyConfig, PenaltyKind, SolverOptions};

pub use config::RunConfig;
pub use error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "wassmix", version, about = "Penalized Wasserstein barycenter model averaging")]
pub struct Cli {
    #[command(flatten)]
    pub common: CommonArgs,

    #[command(subcommand)]
    pub command: Command,
}

/// Options shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct CommonArgs {
    /// TOML configuration file; flags override its values.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR")]
    pub out: Option<PathBuf>,

    /// Quadrature nodes M.
    #[arg(long = "grid-nodes", global = true, value_name = "M")]
    pub grid_nodes: Option<usize>,

    /// Symmetric trim of the quadrature interval.
    #[arg(long, global = true)]
    pub trim: Option<f64>,

    /// Penalty strength; fixes the penalty instead of tuning it.
    #[arg(long, global = true)]
    pub lambda: Option<f64>,

    /// Elastic-net mixing weight of the L1 term.
    #[arg(long, global = true)]
    pub alpha: Option<f64>,

    /// Penalty family: pure, lasso, ridge or enet.
    #[arg(long, global = true, value_name = "KIND")]
    pub penalty: Option<String>,

    /// Select the penalty by grid search.
    #[arg(long, global = true, conflicts_with = "no_tune")]
    pub tune: bool,

    /// Disable grid search.
    #[arg(long = "no-tune", global = true)]
    pub no_tune: bool,

    #[arg(long = "lambda-min", global = true)]
    pub lambda_min: Option<f64>,

    #[arg(long = "lambda-max", global = true)]
    pub lambda_max: Option<f64>,

    #[arg(long = "lambda-count", global = true)]
    pub lambda_count: Option<usize>,

    #[arg(long = "alpha-step", global = true)]
    pub alpha_step: Option<f64>,

    /// Solver convergence tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    #[arg(long = "max-iter", global = true)]
    pub max_iter: Option<usize>,

    /// Solver step size: a number or `auto`.
    #[arg(long, global = true)]
    pub step: Option<String>,

    /// Smoothing constant of the quadratic approximation to |w|.
    #[arg(long = "eps-lqa", global = true)]
    pub eps_lqa: Option<f64>,

    /// Risk levels, comma separated.
    #[arg(long, global = true, value_delimiter = ',')]
    pub levels: Option<Vec<f64>>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a Monte Carlo benchmark experiment.
    Simulate(SimulateArgs),
    /// Fit barycentric weights of a model set to a target sample.
    Fit(FitArgs),
    /// Sequential forecasting over a claims panel.
    Sequential(SequentialArgs),
    /// VaR and ES of a sample or a model.
    Risk(RiskArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// True family: normal or weibull.
    #[arg(long)]
    pub family: Option<String>,

    /// Weibull shape of the true model.
    #[arg(long)]
    pub shape: Option<f64>,

    /// Number of candidate models.
    #[arg(long = "J")]
    pub models: Option<usize>,

    /// Sample size per model.
    #[arg(long = "n")]
    pub sample_size: Option<usize>,

    /// Replications.
    #[arg(long = "B")]
    pub replications: Option<usize>,

    #[arg(long)]
    pub seed: Option<u64>,

    /// Methods, comma separated.
    #[arg(long, value_delimiter = ',')]
    pub methods: Option<Vec<String>>,

    /// Cross-validation folds for penalty selection.
    #[arg(long)]
    pub folds: Option<usize>,

    /// Normal scheme: mean noise half-width.
    #[arg(long)]
    pub c: Option<f64>,
    /// Normal scheme: lower sd multiplier.
    #[arg(long)]
    pub a: Option<f64>,
    /// Normal scheme: upper sd multiplier.
    #[arg(long)]
    pub b: Option<f64>,
    /// Weibull scheme: shape multiplier bounds.
    #[arg(long)]
    pub a1: Option<f64>,
    #[arg(long)]
    pub b1: Option<f64>,
    /// Weibull scheme: scale multiplier bounds.
    #[arg(long)]
    pub a2: Option<f64>,
    #[arg(long)]
    pub b2: Option<f64>,
}

#[derive(Debug, Clone, Args)]
pub struct FitArgs {
    /// Target sample file.
    #[arg(long, value_name = "FILE")]
    pub target: PathBuf,

    /// Model spec file.
    #[arg(long, value_name = "FILE")]
    pub models: PathBuf,
}

#[derive(Debug, Clone, Args)]
pub struct SequentialArgs {
    /// Claims CSV with header `period,loss`.
    #[arg(long, value_name = "FILE")]
    pub claims: PathBuf,

    /// Weight on the newest period: a number in [0, 1] or `auto`.
    #[arg(long)]
    pub delta: Option<String>,

    /// Candidates searched by `--delta auto`, comma separated.
    #[arg(long = "delta-candidates", value_delimiter = ',')]
    pub delta_candidates: Option<Vec<f64>>,

    /// Bias smoothing factor.
    #[arg(long)]
    pub rho: Option<f64>,

    /// Periods observed before validation starts.
    #[arg(long)]
    pub warmup: Option<usize>,

    /// Zero weights as `blank` cells or `numeric` zeros.
    #[arg(long)]
    pub zeros: Option<String>,
}

#[derive(Debug, Clone, Args)]
pub struct RiskArgs {
    /// Sample file.
    #[arg(long, value_name = "FILE", group = "source")]
    pub sample: Option<PathBuf>,

    /// Model spec file holding one model.
    #[arg(long, value_name = "FILE", group = "source")]
    pub spec: Option<PathBuf>,

    /// Inline model line such as `exponential 1`.
    #[arg(long, group = "source")]
    pub model: Option<String>,
}

/// Configuration file merged with flag overrides.
#[derive(Debug, Clone)]
pub struct Settings {
    pub file: RunConfig,
    pub common: CommonArgs,
}

fn pick<T: Clone>(flag: &Option<T>, file: &Option<T>) -> Option<T> {
    flag.clone().or_else(|| file.clone())
}

impl Settings {
    pub fn new(common: CommonArgs) -> Result<Self> {
        let file = match &common.config {
            Some(path) => RunConfig::load(path)?,
            None => RunConfig::default(),
        };
        Ok(Self { file, common })
    }

    pub fn out_dir(&self) -> PathBuf {
        pick(&self.common.out, &self.file.output.dir).unwrap_or_else(|| PathBuf::from("."))
    }

    pub fn grid(&self) -> Result<Grid> {
        let default = Grid::default();
        let nodes = pick(&self.common.grid_nodes, &self.file.grid.nodes).unwrap_or(default.len());
        let trim = pick(&self.common.trim, &self.file.grid.trim).unwrap_or(default.trim());
        Grid::new(nodes, trim).map_err(|e| CliError::usage(format!("grid: {e}")))
    }

    pub fn solver(&self) -> Result<SolverOptions> {
        let mut opts = SolverOptions::default();
        if let Some(tol) = pick(&self.common.tol, &self.file.solver.tol) {
            opts.tol = tol;
        }
        if let Some(n) = pick(&self.common.max_iter, &self.file.solver.max_iter) {
            opts.max_iter = n;
        }
        if let Some(eps) = pick(&self.common.eps_lqa, &self.file.solver.eps_lqa) {
            opts.eps_lqa = eps;
        }
        let step = match (&self.common.step, &self.file.solver.step) {
            (Some(s), _) => Some(parse_step(s)?),
            (None, Some(config::StepValue::Fixed(x))) => Some(StepSize::Fixed(*x)),
            (None, Some(config::StepValue::Named(s))) => Some(parse_step(s)?),
            (None, None) => None,
        };
        if let Some(step) = step {
            opts.step = step;
        }
        opts.validate().map_err(|e| CliError::usage(format!("solver: {e}")))?;
        Ok(opts)
    }

    pub fn penalty_kind(&self) -> Result<Option<PenaltyKind>> {
        pick(&self.common.penalty, &self.file.penalty.kind).map(|s| parse_kind(&s)).transpose()
    }

    /// Tri-state tuning switch: flags first, then the file.
    pub fn tune(&self) -> Option<bool> {
        if self.common.tune {
            Some(true)
        } else if self.common.no_tune {
            Some(false)
        } else {
            self.file.penalty.tune
        }
    }

    /// Grid searched when tuning, restricted to the configured kind.
    pub fn tuning_grid(&self) -> Result<TuningGrid> {
        let p = &self.file.penalty;
        let lo = pick(&self.common.lambda_min, &p.lambda_min).unwrap_or(1e-4);
        let hi = pick(&self.common.lambda_max, &p.lambda_max).unwrap_or(10.0);
        let count = pick(&self.common.lambda_count, &p.lambda_count).unwrap_or(25);
        let step = pick(&self.common.alpha_step, &p.alpha_step).unwrap_or(0.05);
        if !(lo > 0.0 && hi >= lo && count >= 1) {
            return Err(CliError::usage(format!("invalid lambda range [{lo}, {hi}] with {count} points")));
        }
        if !(step > 0.0 && step <= 1.0) {
            return Err(CliError::usage(format!("alpha step must lie in (0, 1], got {step}")));
        }
        let steps = (1.0 / step).round() as usize;
        let alphas = (0..=steps).map(|i| (i as f64 * step).min(1.0)).collect();
        let grid = TuningGrid::new(log_spaced(lo, hi, count), alphas).map_err(|e| CliError::usage(e.to_string()))?;
        Ok(match self.penalty_kind()? {
            Some(kind) => grid.for_kind(kind),
            None => grid,
        })
    }

    /// Penalty fixed by `--lambda`/`--alpha` or `--penalty`, if any.
    pub fn fixed_penalty(&self) -> Result<Option<PenaltyConfig>> {
        let lambda = pick(&self.common.lambda, &self.file.penalty.lambda);
        let alpha = pick(&self.common.alpha, &self.file.penalty.alpha);
        let kind = self.penalty_kind()?;
        let penalty = match (kind, lambda) {
            (Some(PenaltyKind::Pure), _) => Some(Ok(PenaltyConfig::pure())),
            (_, None) => {
                if alpha.is_some() {
                    return Err(CliError::usage("--alpha needs --lambda"));
                }
                if matches!(kind, Some(k) if k != PenaltyKind::Pure) && self.tune() != Some(true) {
                    return Err(CliError::usage("a penalized kind needs --lambda or --tune"));
                }
                None
            }
            (Some(PenaltyKind::Lasso), Some(l)) => Some(PenaltyConfig::lasso(l)),
            (Some(PenaltyKind::Ridge), Some(l)) => Some(PenaltyConfig::ridge(l)),
            (Some(PenaltyKind::ElasticNet) | None, Some(l)) => {
                let a = alpha.ok_or_else(|| CliError::usage("--lambda needs --alpha or --penalty lasso|ridge"))?;
                Some(PenaltyConfig::new(l, a))
            }
        };
        penalty.transpose().map_err(|e| CliError::usage(e.to_string()))
    }

    pub fn levels(&self) -> Vec<f64> {
        pick(&self.common.levels, &self.file.risk.levels).unwrap_or_else(|| wassmix::risk::DEFAULT_LEVELS.to_vec())
    }
}

fn parse_step(s: &str) -> Result<StepSize> {
    if s.eq_ignore_ascii_case("auto") {
        return Ok(StepSize::Auto);
    }
    s.parse::<f64>()
        .map(StepSize::Fixed)
        .map_err(|_| CliError::usage(format!("step must be a number or `auto`, got `{s}`")))
}

pub fn parse_kind(s: &str) -> Result<PenaltyKind> {
    match s.trim().to_ascii_lowercase().as_str() {
        "pure" | "none" => Ok(PenaltyKind::Pure),
        "lasso" => Ok(PenaltyKind::Lasso),
        "ridge" => Ok(PenaltyKind::Ridge),
        "enet" | "elastic-net" | "elastic_net" => Ok(PenaltyKind::ElasticNet),
        other => Err(CliError::usage(format!("unknown penalty `{other}`; expected pure, lasso, ridge or enet"))),
    }
}

pub fn run(cli: Cli) -> Result<()> {
    let settings = Settings::new(cli.common)?;
    match cli.command {
        Command::Simulate(args) => commands::simulate(&settings, &args),
        Command::Fit(args) => commands::fit(&settings, &args),
        Command::Sequential(args) => commands::sequential(&settings, &args),
        Command::Risk(args) => commands::risk(&settings, &args),
    }
}
