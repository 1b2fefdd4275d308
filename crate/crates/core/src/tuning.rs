//! Grid search over the penalty hyperparameters `(λ, α)`.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gram::EvaluatedModels;
use crate::quantile::{Grid, QuantileFunction};
use crate::solver::{solve, FitResult, PenaltyConfig, PenaltyKind, SolverOptions};

/// Relative tolerance under which two criterion values count as tied.
const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct TuningGrid {
    lambdas: Vec<f64>,
    alphas: Vec<f64>,
}

impl Default for TuningGrid {
    /// 25 log-spaced `λ` in `[1e-4, 10]` and `α ∈ {0, 0.05, …, 1}`.
    fn default() -> Self {
        let alphas = (0..=20).map(|i| i as f64 / 20.0).collect();
        Self { lambdas: log_spaced(1e-4, 10.0, 25), alphas }
    }
}

/// `n` points from `lo` to `hi` equally spaced in `log10`.
pub fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    let (a, b) = (lo.log10(), hi.log10());
    (0..n).map(|i| 10f64.powf(a + (b - a) * i as f64 / (n - 1) as f64)).collect()
}

impl TuningGrid {
    pub fn new(lambdas: Vec<f64>, alphas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() || alphas.is_empty() {
            return Err(Error::invalid("tuning grid needs at least one lambda and one alpha"));
        }
        if lambdas.iter().any(|l| !(l.is_finite() && *l > 0.0)) {
            return Err(Error::invalid(format!("tuning lambdas must be positive: {lambdas:?}")));
        }
        if alphas.iter().any(|a| !(0.0..=1.0).contains(a)) {
            return Err(Error::invalid(format!("tuning alphas must lie in [0, 1]: {alphas:?}")));
        }
        let ascending = |v: &[f64]| v.windows(2).all(|p| p[0] < p[1]);
        if !ascending(&lambdas) || !ascending(&alphas) {
            return Err(Error::invalid("tuning grids must be strictly ascending"));
        }
        Ok(Self { lambdas, alphas })
    }

    pub fn lambdas(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn alphas(&self) -> &[f64] {
        &self.alphas
    }

    /// The grid a method searches: LASSO pins `α = 1`, Ridge pins `α = 0`.
    pub fn for_kind(&self, kind: PenaltyKind) -> Self {
        let alphas = match kind {
            PenaltyKind::Lasso => vec![1.0],
            PenaltyKind::Ridge => vec![0.0],
            PenaltyKind::Pure | PenaltyKind::ElasticNet => self.alphas.clone(),
        };
        Self { lambdas: self.lambdas.clone(), alphas }
    }

    /// Cells in `(λ, α)` row-major order.
    pub fn cells(&self) -> Vec<PenaltyConfig> {
        self.lambdas
            .iter()
            .flat_map(|&l| self.alphas.iter().map(move |&a| PenaltyConfig::new(l, a).expect("validated grid")))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TuningOutcome {
    pub penalty: PenaltyConfig,
    /// Squared W₂ distance of the selected fit to the criterion target.
    pub criterion: f64,
    pub fit: FitResult,
}

/// True when `(a_value, a)` should replace the incumbent `(b_value, b)`.
fn better(a_value: f64, a: &PenaltyConfig, b_value: f64, b: &PenaltyConfig) -> bool {
    let tol = TIE_TOLERANCE * a_value.abs().max(b_value.abs()).max(f64::MIN_POSITIVE);
    if (a_value - b_value).abs() > tol {
        return a_value < b_value;
    }
    (a.lambda(), a.alpha()) > (b.lambda(), b.alpha())
}

fn select(cells: Vec<(PenaltyConfig, Result<(f64, FitResult)>)>) -> Result<TuningOutcome> {
    let mut best: Option<TuningOutcome> = None;
    let mut failures = 0usize;
    for (penalty, outcome) in cells {
        match outcome {
            Ok((criterion, fit)) => {
                let replace = match &best {
                    None => true,
                    Some(b) => better(criterion, &penalty, b.criterion, &b.penalty),
                };
                if replace {
                    best = Some(TuningOutcome { penalty, criterion, fit });
                }
            }
            Err(e) => {
                failures += 1;
                log::warn!("tuning cell lambda={} alpha={} skipped: {e}", penalty.lambda(), penalty.alpha());
            }
        }
    }
    best.ok_or_else(|| Error::Tuning(format!("all {failures} tuning cells failed")))
}

/// Fits every cell to `fit_target` and keeps the one whose barycenter is
/// closest in W₂ to `criterion_target`.
///
/// Ties (relative gap below 1e-12) go to the larger `λ`, then the larger
/// `α`. Failing cells are logged and skipped.
pub fn grid_search_evaluated(
    models: &EvaluatedModels,
    fit_target: &[f64],
    criterion_target: &[f64],
    tuning: &TuningGrid,
    opts: &SolverOptions,
) -> Result<TuningOutcome> {
    let gram = models.gram(fit_target)?;
    let cells: Vec<_> = tuning
        .cells()
        .into_par_iter()
        .map(|penalty| {
            let outcome = solve(&gram, &penalty, opts).map(|fit| (models.w2_squared(&fit.weights, criterion_target), fit));
            (penalty, outcome)
        })
        .collect();
    select(cells)
}

/// Grid search on quantile functions. The criterion target defaults to the
/// fit target; pass a held-out estimate to score out of sample.
pub fn grid_search(
    models: &[QuantileFunction],
    target: &QuantileFunction,
    grid: &Grid,
    tuning: &TuningGrid,
    opts: &SolverOptions,
    criterion_target: Option<&QuantileFunction>,
) -> Result<TuningOutcome> {
    let evaluated = EvaluatedModels::new(models, grid)?;
    let fit_values = evaluated.target_values(target)?;
    let criterion_values = match criterion_target {
        Some(q) => evaluated.target_values(q)?,
        None => fit_values.clone(),
    };
    grid_search_evaluated(&evaluated, &fit_values, &criterion_values, tuning, opts)
}

/// K-fold cross-validated grid search on a target sample.
///
/// Fold `k` holds the observations at positions `i ≡ k (mod K)`. Each cell
/// is scored by the mean over folds of the squared W₂ distance between the
/// barycenter fitted to the other folds and the held-out fold's empirical
/// quantile. The winning cell is refitted on the full sample.
pub fn cross_validated_search(
    models: &EvaluatedModels,
    target_sample: &[f64],
    folds: usize,
    tuning: &TuningGrid,
    opts: &SolverOptions,
) -> Result<TuningOutcome> {
    if folds < 2 || target_sample.len() < folds {
        return Err(Error::invalid(format!(
            "{folds}-fold cross-validation needs at least 2 folds and {folds} observations"
        )));
    }
    let grid = models.grid();
    let mut splits = Vec::with_capacity(folds);
    for k in 0..folds {
        let (held, train): (Vec<_>, Vec<_>) = target_sample.iter().enumerate().partition(|(i, _)| i % folds == k);
        let held: Vec<f64> = held.into_iter().map(|(_, &x)| x).collect();
        let train: Vec<f64> = train.into_iter().map(|(_, &x)| x).collect();
        let train_values = crate::quantile::empirical_quantile(&train)?.values_on(grid)?;
        let held_values = crate::quantile::empirical_quantile(&held)?.values_on(grid)?;
        splits.push((models.gram(&train_values)?, held_values));
    }
    let cells: Vec<_> = tuning
        .cells()
        .into_par_iter()
        .map(|penalty| {
            let mut total = 0.0;
            for (gram, held) in &splits {
                match solve(gram, &penalty, opts) {
                    Ok(fit) => total += models.w2_squared(&fit.weights, held),
                    Err(e) => return (penalty, Err(e)),
                }
            }
            (penalty, Ok(total / folds as f64))
        })
        .collect();
    let mut best: Option<(PenaltyConfig, f64)> = None;
    let mut failures = 0usize;
    for (penalty, score) in cells {
        match score {
            Ok(v) => {
                if best.as_ref().is_none_or(|(p, b)| better(v, &penalty, *b, p)) {
                    best = Some((penalty, v));
                }
            }
            Err(e) => {
                failures += 1;
                log::warn!("cross-validation cell lambda={} alpha={} skipped: {e}", penalty.lambda(), penalty.alpha());
            }
        }
    }
    let (penalty, criterion) = best.ok_or_else(|| Error::Tuning(format!("all {failures} tuning cells failed")))?;
    let full = crate::quantile::empirical_quantile(target_sample)?.values_on(grid)?;
    let fit = solve(&models.gram(&full)?, &penalty, opts)?;
    Ok(TuningOutcome { penalty, criterion, fit })
}
