//! Monte Carlo experiments comparing pure and penalized barycenters.
//!
//! Each replication perturbs the parameters of a true model with uniform
//! noise to obtain `J` candidate models, draws `n` observations from the
//! truth and from every candidate, fits the calibration weights from the
//! empirical quantiles, and scores the aggregate against the true quantile.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal, Weibull};
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::EvaluatedModels;
use crate::quantile::{empirical_quantile, Family, Grid, QuantileFunction};
use crate::solver::{solve_pure, SolverOptions, WeightVector, PenaltyKind};
use crate::tuning::{cross_validated_search, TuningGrid};

/// Calibration methods in declaration order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub enum Method {
    Pure,
    Lasso,
    Ridge,
    Enet,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Pure, Method::Lasso, Method::Ridge, Method::Enet];

    pub fn name(&self) -> &'static str {
        match self {
            Method::Pure => "pure",
            Method::Lasso => "lasso",
            Method::Ridge => "ridge",
            Method::Enet => "enet",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::invalid(format!("unknown method `{s}`; expected pure, lasso, ridge or enet")))
    }

    fn kind(&self) -> PenaltyKind {
        match self {
            Method::Pure => PenaltyKind::Pure,
            Method::Lasso => PenaltyKind::Lasso,
            Method::Ridge => PenaltyKind::Ridge,
            Method::Enet => PenaltyKind::ElasticNet,
        }
    }
}

/// True model and the uniform noise applied to its parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Scenario {
    /// `m_j ~ U(-c, c)` added to the mean, `σ_j ~ U(a, b)` scaling the sd.
    Normal { mean: f64, sd: f64, c: f64, a: f64, b: f64 },
    /// `α_j = α u₁`, `κ_j = κ u₂` with `u₁ ~ U(a₁, b₁)`, `u₂ ~ U(a₂, b₂)`.
    Weibull { shape: f64, scale: f64, a1: f64, b1: f64, a2: f64, b2: f64 },
}

impl Scenario {
    pub fn normal() -> Self {
        Scenario::Normal { mean: 0.0, sd: 1.0, c: 1.0, a: 0.5, b: 2.0 }
    }

    pub fn weibull(shape: f64) -> Self {
        Scenario::Weibull { shape, scale: 1.0, a1: 0.5, b1: 1.5, a2: 0.5, b2: 1.5 }
    }

    pub fn family_name(&self) -> &'static str {
        match self {
            Scenario::Normal { .. } => "normal",
            Scenario::Weibull { .. } => "weibull",
        }
    }

    pub fn truth(&self) -> Family {
        match *self {
            Scenario::Normal { mean, sd, .. } => Family::Normal { mean, sd },
            Scenario::Weibull { shape, scale, .. } => Family::Weibull { shape, scale },
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.truth().validate()?;
        let ok = match *self {
            Scenario::Normal { c, a, b, .. } => c > 0.0 && a > 0.0 && a < 1.0 && b > 1.0,
            Scenario::Weibull { a1, b1, a2, b2, .. } => {
                a1 > 0.0 && a1 < 1.0 && a2 > 0.0 && a2 < 1.0 && b1 > a1 && b2 > a2
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("noise bounds out of range: {self:?}")))
        }
    }

    fn perturb(&self, rng: &mut ChaCha8Rng) -> Family {
        match *self {
            Scenario::Normal { mean, sd, c, a, b } => {
                let m = rng.random_range(-c..c);
                let s = rng.random_range(a..b);
                Family::Normal { mean: mean + m, sd: sd * s }
            }
            Scenario::Weibull { shape, scale, a1, b1, a2, b2 } => {
                let u1 = rng.random_range(a1..b1);
                let u2 = rng.random_range(a2..b2);
                Family::Weibull { shape: shape * u1, scale: scale * u2 }
            }
        }
    }
}

fn draw(family: &Family, n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    match *family {
        Family::Normal { mean, sd } => {
            let d = Normal::new(mean, sd).expect("validated parameters");
            (0..n).map(|_| d.sample(rng)).collect()
        }
        Family::Weibull { shape, scale } => {
            let d = Weibull::new(scale, shape).expect("validated parameters");
            (0..n).map(|_| d.sample(rng)).collect()
        }
        // Inverse transform for the remaining families.
        f => (0..n).map(|_| f.quantile(rng.random_range(f64::EPSILON..1.0))).collect(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub scenario: Scenario,
    pub models: usize,
    pub sample_size: usize,
    pub replications: usize,
    pub seed: u64,
    pub methods: Vec<Method>,
    pub tuning: TuningGrid,
    /// Folds of the cross-validated penalty selection.
    pub folds: usize,
    pub grid: Grid,
    pub solver: SolverOptions,
}

impl ExperimentConfig {
    pub fn new(scenario: Scenario, models: usize, sample_size: usize) -> Self {
        Self {
            scenario,
            models,
            sample_size,
            replications: 200,
            seed: 20240607,
            methods: Method::ALL.to_vec(),
            tuning: TuningGrid::default(),
            folds: 5,
            grid: Grid::default(),
            solver: SolverOptions::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.scenario.validate()?;
        if self.models == 0 || self.replications == 0 {
            return Err(Error::invalid("need at least one model and one replication"));
        }
        if self.sample_size < self.folds.max(2) {
            return Err(Error::invalid(format!("sample size {} is too small", self.sample_size)));
        }
        if self.methods.is_empty() {
            return Err(Error::invalid("no methods selected"));
        }
        self.solver.validate()
    }

    /// Generator of replication `r`: stream `r` of the seeded ChaCha8.
    pub fn replication_rng(&self, r: usize) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(r as u64);
        rng
    }
}

/// Draws the true model and `J` perturbed candidates.
pub fn generate_model_set(config: &ExperimentConfig, rng: &mut ChaCha8Rng) -> Result<(QuantileFunction, Vec<QuantileFunction>)> {
    config.scenario.validate()?;
    let truth = QuantileFunction::parametric(config.scenario.truth())?;
    let models = (0..config.models)
        .map(|_| QuantileFunction::parametric(config.scenario.perturb(rng)))
        .collect::<Result<Vec<_>>>()?;
    Ok((truth, models))
}

/// One method's outcome in one replication.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodOutcome {
    pub method: Method,
    pub w2: f64,
    pub weights: WeightVector,
    pub lambda: f64,
    pub alpha: f64,
    /// Euclidean distance to the pure weights.
    pub delta_w: f64,
}

/// Runs replication `r` and returns one outcome per configured method.
pub fn run_replication(config: &ExperimentConfig, r: usize) -> Result<Vec<MethodOutcome>> {
    let mut rng = config.replication_rng(r);
    let (truth, models) = generate_model_set(config, &mut rng)?;
    let n = config.sample_size;
    let target_sample = draw(&config.scenario.truth(), n, &mut rng);
    let model_quantiles = models
        .iter()
        .map(|m| match m {
            QuantileFunction::Parametric(f) => empirical_quantile(&draw(f, n, &mut rng)),
            _ => unreachable!("generated models are parametric"),
        })
        .collect::<Result<Vec<_>>>()?;
    let grid = config.grid;
    let evaluated = EvaluatedModels::new(&model_quantiles, &grid)?;
    let truth_values = truth.values_on(&grid)?;
    let target_values = empirical_quantile(&target_sample)?.values_on(&grid)?;
    let pure = solve_pure(&evaluated.gram(&target_values)?)?;
    let score = |w: &WeightVector| evaluated.w2_squared(w, &truth_values).sqrt();

    let mut out = Vec::with_capacity(config.methods.len());
    for &method in &config.methods {
        let (weights, lambda, alpha) = if method == Method::Pure {
            (pure.weights.clone(), 0.0, 0.0)
        } else {
            let tuning = config.tuning.for_kind(method.kind());
            let t = cross_validated_search(&evaluated, &target_sample, config.folds, &tuning, &config.solver)?;
            (t.fit.weights, t.penalty.lambda(), t.penalty.alpha())
        };
        out.push(MethodOutcome {
            method,
            w2: score(&weights),
            delta_w: weights.euclidean_distance(&pure.weights),
            weights,
            lambda,
            alpha,
        });
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MethodSummary {
    pub method: Method,
    pub mean_w2: f64,
    /// Sample standard deviation over `√B`.
    pub se_w2: f64,
    /// Present for penalized methods.
    pub mean_dw: Option<f64>,
    pub std_dw: Option<f64>,
    pub mean_lambda: Option<f64>,
    /// Present for the elastic net, the only method that selects `α`.
    pub mean_alpha: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentReport {
    pub family: String,
    pub scenario: Scenario,
    pub models: usize,
    pub sample_size: usize,
    pub replications: usize,
    /// Replications that finished without error.
    pub completed: usize,
    pub seed: u64,
    pub methods: Vec<MethodSummary>,
}

impl ExperimentReport {
    pub fn method(&self, m: Method) -> Option<&MethodSummary> {
        self.methods.iter().find(|s| s.method == m)
    }
}

fn mean_sd(x: &[f64]) -> (f64, f64) {
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = if x.len() > 1 { x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
    (mean, var.sqrt())
}

/// Runs all replications and aggregates per-method statistics.
///
/// Failed replications are logged and dropped; more than 1% failures is an
/// error.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let results: Vec<Result<Vec<MethodOutcome>>> =
        (0..config.replications).into_par_iter().map(|r| run_replication(config, r)).collect();
    let mut kept = Vec::with_capacity(results.len());
    for (r, res) in results.into_iter().enumerate() {
        match res {
            Ok(v) => kept.push(v),
            Err(e) => log::warn!("replication {r} dropped: {e}"),
        }
    }
    let dropped = config.replications - kept.len();
    if dropped as f64 > 0.01 * config.replications as f64 {
        return Err(Error::Experiment(format!("{dropped} of {} replications failed", config.replications)));
    }
    if kept.is_empty() {
        return Err(Error::Experiment("no replication completed".into()));
    }
    let b = kept.len() as f64;
    let methods = config
        .methods
        .iter()
        .enumerate()
        .map(|(i, &method)| {
            let w2: Vec<f64> = kept.iter().map(|v| v[i].w2).collect();
            let (mean_w2, sd_w2) = mean_sd(&w2);
            let penalized = method != Method::Pure;
            let dw: Vec<f64> = kept.iter().map(|v| v[i].delta_w).collect();
            let (mean_dw, std_dw) = mean_sd(&dw);
            let lambda: Vec<f64> = kept.iter().map(|v| v[i].lambda).collect();
            let alpha: Vec<f64> = kept.iter().map(|v| v[i].alpha).collect();
            MethodSummary {
                method,
                mean_w2,
                se_w2: sd_w2 / b.sqrt(),
                mean_dw: penalized.then_some(mean_dw),
                std_dw: penalized.then_some(std_dw),
                mean_lambda: penalized.then(|| mean_sd(&lambda).0),
                mean_alpha: (method == Method::Enet).then(|| mean_sd(&alpha).0),
            }
        })
        .collect();
    Ok(ExperimentReport {
        family: config.scenario.family_name().to_string(),
        scenario: config.scenario,
        models: config.models,
        sample_size: config.sample_size,
        replications: config.replications,
        completed: kept.len(),
        seed: config.seed,
        methods,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ranking {
    pub method: Method,
    pub mean_w2: f64,
    pub best: bool,
}

/// Methods by ascending mean W₂; equal means keep declaration order.
pub fn compare_methods(report: &ExperimentReport) -> Result<Vec<Ranking>> {
    if report.methods.len() < 2 {
        return Err(Error::invalid("ranking needs at least two methods"));
    }
    let mut rows: Vec<Ranking> =
        report.methods.iter().map(|m| Ranking { method: m.method, mean_w2: m.mean_w2, best: false }).collect();
    rows.sort_by_key(|r| r.method);
    rows.sort_by(|a, b| a.mean_w2.total_cmp(&b.mean_w2));
    rows[0].best = true;
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(scenario: Scenario) -> ExperimentConfig {
        ExperimentConfig {
            replications: 3,
            tuning: TuningGrid::new(vec![0.01, 0.1, 1.0], vec![0.0, 0.5, 1.0]).unwrap(),
            grid: Grid::with_nodes(200).unwrap(),
            ..ExperimentConfig::new(scenario, 3, 50)
        }
    }

    #[test]
    fn method_names_round_trip() {
        for m in Method::ALL {
            assert_eq!(Method::parse(m.name()).unwrap(), m);
        }
        assert!(Method::parse("bogus").is_err());
    }

    #[test]
    fn scenario_validation() {
        assert!(Scenario::normal().validate().is_ok());
        assert!(Scenario::Normal { mean: 0.0, sd: 1.0, c: 1.0, a: 1.2, b: 2.0 }.validate().is_err());
        assert!(Scenario::Weibull { shape: 1.0, scale: 1.0, a1: 0.5, b1: 0.4, a2: 0.5, b2: 1.5 }.validate().is_err());
    }

    #[test]
    fn model_sets_are_reproducible() {
        let cfg = small(Scenario::weibull(1.3));
        let a = generate_model_set(&cfg, &mut cfg.replication_rng(4)).unwrap();
        let b = generate_model_set(&cfg, &mut cfg.replication_rng(4)).unwrap();
        let c = generate_model_set(&cfg, &mut cfg.replication_rng(5)).unwrap();
        assert_eq!(a, b);
        assert_ne!(a.1, c.1);
    }

    #[test]
    fn pure_only_report_has_no_deviation() {
        let cfg = ExperimentConfig { methods: vec![Method::Pure], ..small(Scenario::normal()) };
        let r = run_experiment(&cfg).unwrap();
        assert_eq!(r.methods.len(), 1);
        assert!(r.methods[0].mean_dw.is_none());
        assert!(compare_methods(&r).is_err());
    }

    #[test]
    fn ranking_ties_keep_declaration_order() {
        let summary = |method| MethodSummary {
            method,
            mean_w2: 0.1,
            se_w2: 0.0,
            mean_dw: None,
            std_dw: None,
            mean_lambda: None,
            mean_alpha: None,
        };
        let report = ExperimentReport {
            family: "normal".into(),
            scenario: Scenario::normal(),
            models: 2,
            sample_size: 10,
            replications: 1,
            completed: 1,
            seed: 0,
            methods: vec![summary(Method::Enet), summary(Method::Ridge), summary(Method::Pure), summary(Method::Lasso)],
        };
        let ranks = compare_methods(&report).unwrap();
        let order: Vec<Method> = ranks.iter().map(|r| r.method).collect();
        assert_eq!(order, Method::ALL.to_vec());
        assert!(ranks[0].best && !ranks[1].best);
    }

    #[test]
    fn experiment_is_deterministic() {
        let cfg = small(Scenario::weibull(1.0));
        let a = run_experiment(&cfg).unwrap();
        let b = run_experiment(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.methods.len(), 4);
        for m in &a.methods {
            assert!(m.mean_w2.is_finite() && m.se_w2 >= 0.0);
        }
    }
}
