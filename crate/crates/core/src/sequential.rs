//! One-step-ahead forecasting of per-period loss distributions.
//!
//! After period `j` is observed, the barycenter of the earlier periods is
//! refitted to it, the fitted weights are scaled by `1 - δ` and the newest
//! period receives weight `δ`. The next period is predicted by that
//! combination shifted by an exponentially weighted bias estimate.

use std::io::Write;

use serde::Serialize;

use crate::claims::ClaimsPanel;
use crate::error::{Error, Result};
use crate::gram::EvaluatedModels;
use crate::quantile::{empirical_quantile, Grid, QuantileFunction};
use crate::risk::{risk_report, RiskReport, DEFAULT_LEVELS};
use crate::solver::{solve, PenaltyConfig, SolverOptions, WeightVector};
use crate::tuning::{grid_search_evaluated, TuningGrid};

/// How the penalty of each period's fit is chosen.
#[derive(Debug, Clone, PartialEq)]
pub enum PenaltyMode {
    Fixed(PenaltyConfig),
    /// In-sample grid search against the newly observed period.
    Tuned(TuningGrid),
}

#[derive(Debug, Clone, PartialEq)]
pub struct SequentialConfig {
    pub delta: f64,
    pub rho: f64,
    pub warmup: usize,
    pub grid: Grid,
    pub penalty: PenaltyMode,
    pub solver: SolverOptions,
    pub levels: Vec<f64>,
}

impl Default for SequentialConfig {
    fn default() -> Self {
        Self {
            delta: 0.2,
            rho: 0.5,
            warmup: 5,
            grid: Grid::new(1000, 0.001).expect("valid default grid"),
            penalty: PenaltyMode::Tuned(TuningGrid::default()),
            solver: SolverOptions::default(),
            levels: DEFAULT_LEVELS.to_vec(),
        }
    }
}

impl SequentialConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.delta) {
            return Err(Error::invalid(format!("delta must lie in [0, 1], got {}", self.delta)));
        }
        if !(self.rho > 0.0 && self.rho <= 1.0) {
            return Err(Error::invalid(format!("rho must lie in (0, 1], got {}", self.rho)));
        }
        if self.warmup == 0 {
            return Err(Error::invalid("warmup must be at least one period"));
        }
        if self.levels.iter().any(|p| !(*p > 0.0 && *p < 1.0)) {
            return Err(Error::invalid(format!("risk levels must lie in (0, 1): {:?}", self.levels)));
        }
        self.solver.validate()
    }
}

/// `(w̃ (1-δ), δ)`.
pub fn extend_weights(fitted: &WeightVector, delta: f64) -> Result<WeightVector> {
    if !(0.0..=1.0).contains(&delta) {
        return Err(Error::invalid(format!("delta must lie in [0, 1], got {delta}")));
    }
    let mut w: Vec<f64> = fitted.as_slice().iter().map(|x| x * (1.0 - delta)).collect();
    w.push(delta);
    // Rounding in the scaling can leave the sum an ulp or two off.
    let sum: f64 = w.iter().sum();
    if sum != 1.0 {
        w.iter_mut().for_each(|x| *x /= sum);
    }
    WeightVector::new(w)
}

/// Weights fitted to one newly observed period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct StepFit {
    pub weights: WeightVector,
    pub penalty: PenaltyConfig,
    pub objective: f64,
}

#[derive(Debug, Clone)]
pub struct SequentialState {
    config: SequentialConfig,
    history: Vec<QuantileFunction>,
    history_values: Vec<Vec<f64>>,
    current_weights: Option<WeightVector>,
    bias: f64,
    bias_history: Vec<f64>,
}

impl SequentialState {
    pub fn new(config: SequentialConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            config,
            history: Vec::new(),
            history_values: Vec::new(),
            current_weights: None,
            bias: 0.0,
            bias_history: Vec::new(),
        })
    }

    pub fn config(&self) -> &SequentialConfig {
        &self.config
    }

    pub fn history(&self) -> &[QuantileFunction] {
        &self.history
    }

    pub fn current_weights(&self) -> Option<&WeightVector> {
        self.current_weights.as_ref()
    }

    /// Current bias correction `w₀`.
    pub fn bias(&self) -> f64 {
        self.bias
    }

    pub fn bias_history(&self) -> &[f64] {
        &self.bias_history
    }

    /// Fits the barycenter of the history to `observed`.
    pub fn step_fit(&self, observed: &QuantileFunction) -> Result<StepFit> {
        if self.history.is_empty() {
            return Err(Error::invalid("step_fit needs at least one period of history"));
        }
        let models = EvaluatedModels::from_values(self.history_values.clone(), self.config.grid);
        let target = observed.values_on(&self.config.grid)?;
        let (penalty, fit) = match &self.config.penalty {
            PenaltyMode::Fixed(p) => (*p, solve(&models.gram(&target)?, p, &self.config.solver)?),
            PenaltyMode::Tuned(tuning) => {
                let out = grid_search_evaluated(&models, &target, &target, tuning, &self.config.solver)?;
                (out.penalty, out.fit)
            }
        };
        Ok(StepFit { weights: fit.weights, penalty, objective: fit.objective })
    }

    /// Folds `realized - predicted` into the EWMA bias and returns the new
    /// `w₀ = ρ b + (1-ρ) w₀`.
    pub fn bias_update(&mut self, realized_mean: f64, predicted_mean: f64) -> Result<f64> {
        if !(realized_mean.is_finite() && predicted_mean.is_finite()) {
            return Err(Error::invalid("bias update needs finite means"));
        }
        let b = realized_mean - predicted_mean;
        self.bias = self.config.rho * b + (1.0 - self.config.rho) * self.bias;
        self.bias_history.push(self.bias);
        Ok(self.bias)
    }

    /// Barycenter of the history under the current weights, without bias.
    fn combination(&self, shift: f64) -> Result<QuantileFunction> {
        let w = self
            .current_weights
            .clone()
            .ok_or_else(|| Error::invalid("no weights have been fitted yet"))?;
        QuantileFunction::combination(self.history.clone(), w, shift)
    }

    /// `ĝ_{j+1}(s) = w₀ + Σ_k w_k g_k(s)`.
    pub fn predict_next(&self) -> Result<QuantileFunction> {
        self.combination(self.bias)
    }

    /// Appends a period without fitting; the first period and warmup.
    pub fn push_history(&mut self, observed: QuantileFunction) -> Result<()> {
        self.history_values.push(observed.values_on(&self.config.grid)?);
        self.history.push(observed);
        Ok(())
    }

    /// Sets the weights over the current history directly.
    pub fn set_weights(&mut self, w: WeightVector) -> Result<()> {
        if w.len() != self.history.len() {
            return Err(Error::invalid(format!("{} weights for {} history periods", w.len(), self.history.len())));
        }
        self.current_weights = Some(w);
        Ok(())
    }

    /// Observes a period: scores the pending prediction, updates the bias,
    /// refits and extends the weights, and appends the period.
    pub fn observe(&mut self, observed: QuantileFunction) -> Result<Observation> {
        let grid = self.config.grid;
        let target = observed.values_on(&grid)?;
        let realized_mean = target.iter().sum::<f64>() / target.len() as f64;
        let mut prediction = None;
        if self.current_weights.is_some() {
            let predicted = self.predict_next()?;
            let values = predicted.values_on(&grid)?;
            let w2_squared = grid.step() * values.iter().zip(&target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
            let uncorrected_mean = self.combination(0.0)?.mean_on(&grid)?;
            prediction = Some(Prediction {
                risk: risk_report(&predicted, &self.config.levels, &grid)?,
                w2_squared,
                bias: self.bias,
            });
            self.bias_update(realized_mean, uncorrected_mean)?;
        }
        let fitted = if self.history.is_empty() {
            None
        } else {
            let step = self.step_fit(&observed)?;
            let bary = QuantileFunction::combination(self.history.clone(), step.weights.clone(), 0.0)?;
            let fitted_risk = risk_report(&bary, &self.config.levels, &grid)?;
            let extended = extend_weights(&step.weights, self.config.delta)?;
            self.current_weights = Some(extended);
            Some((step, fitted_risk))
        };
        let realized_risk = risk_report(&observed, &self.config.levels, &grid)?;
        self.history_values.push(target);
        self.history.push(observed);
        if self.current_weights.is_none() {
            self.current_weights = Some(WeightVector::uniform(1));
        }
        Ok(Observation {
            weights: self.current_weights.clone().expect("set above"),
            fitted,
            prediction,
            realized_risk,
        })
    }
}

/// Scored one-step-ahead prediction of a period.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Prediction {
    pub risk: RiskReport,
    pub w2_squared: f64,
    /// Bias shift the prediction used.
    pub bias: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Observation {
    /// Extended weights over the history including the new period.
    pub weights: WeightVector,
    pub fitted: Option<(StepFit, RiskReport)>,
    pub prediction: Option<Prediction>,
    pub realized_risk: RiskReport,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodRecord {
    pub label: String,
    pub observation: Observation,
}

/// Outcome of a full pass over a panel; `records` covers the validation
/// periods after the warmup.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SequentialRun {
    pub labels: Vec<String>,
    pub warmup: usize,
    pub records: Vec<PeriodRecord>,
}

impl SequentialRun {
    /// Mean one-step-ahead squared W₂ over validation periods.
    pub fn mean_one_step_w2(&self) -> Option<f64> {
        let scores: Vec<f64> = self
            .records
            .iter()
            .filter_map(|r| r.observation.prediction.as_ref().map(|p| p.w2_squared))
            .collect();
        (!scores.is_empty()).then(|| scores.iter().sum::<f64>() / scores.len() as f64)
    }

    /// Active set of the weights fitted at the last period.
    pub fn final_active_set(&self) -> Option<Vec<usize>> {
        self.records.last().and_then(|r| r.observation.fitted.as_ref()).map(|(f, _)| f.weights.active_set())
    }
}

/// Runs the forecasting workflow over every period of `panel`.
pub fn run_sequential(panel: &ClaimsPanel, config: &SequentialConfig) -> Result<SequentialRun> {
    if panel.len() < config.warmup {
        return Err(Error::invalid(format!(
            "panel has {} periods, fewer than the warmup of {}",
            panel.len(),
            config.warmup
        )));
    }
    let mut state = SequentialState::new(config.clone())?;
    let mut records = Vec::new();
    for (j, period) in panel.periods().iter().enumerate() {
        let observation = state.observe(empirical_quantile(&period.losses)?)?;
        if j >= config.warmup {
            records.push(PeriodRecord { label: period.label.clone(), observation });
        }
    }
    Ok(SequentialRun { labels: panel.labels().into_iter().map(String::from).collect(), warmup: config.warmup, records })
}

/// Picks the `δ` with the smallest mean one-step-ahead squared W₂ over the
/// validation periods; ties go to the smaller `δ`.
pub fn tune_delta(panel: &ClaimsPanel, candidates: &[f64], config: &SequentialConfig) -> Result<f64> {
    if candidates.is_empty() {
        return Err(Error::invalid("no candidate deltas"));
    }
    if panel.len() <= config.warmup {
        return Err(Error::invalid(format!(
            "tuning delta needs more than {} periods, panel has {}",
            config.warmup,
            panel.len()
        )));
    }
    let mut sorted = candidates.to_vec();
    sorted.sort_by(f64::total_cmp);
    // Scores are squared distances; compare them against the second moment
    // of the losses so exact fits tie despite rounding.
    let scale = panel
        .periods()
        .iter()
        .map(|p| p.losses.iter().map(|x| x * x).sum::<f64>() / p.losses.len() as f64)
        .sum::<f64>()
        / panel.len() as f64;
    let mut best: Option<(f64, f64)> = None;
    for delta in sorted {
        let run = run_sequential(panel, &SequentialConfig { delta, ..config.clone() })?;
        let score = run.mean_one_step_w2().ok_or_else(|| Error::invalid("no validation periods to score"))?;
        log::debug!("delta {delta}: mean one-step W2^2 {score}");
        if best.is_none_or(|(_, b)| score < b - 1e-12 * b.max(scale)) {
            best = Some((delta, score));
        }
    }
    Ok(best.expect("non-empty candidates").0)
}

/// How zero weights are written in the weight table.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ZeroStyle {
    Blank,
    Numeric,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Io(e.into())
}

/// Weight table: one row per validation period, one column per period.
pub fn write_weight_table<W: Write>(run: &SequentialRun, zeros: ZeroStyle, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let mut header = vec!["period".to_string()];
    header.extend(run.labels.iter().cloned());
    wtr.write_record(&header).map_err(csv_error)?;
    for record in &run.records {
        let w = record.observation.weights.as_slice();
        let mut row = vec![record.label.clone()];
        for k in 0..run.labels.len() {
            let cell = match w.get(k) {
                Some(&x) if x != 0.0 => format!("{x:.6}"),
                Some(_) if zeros == ZeroStyle::Numeric => "0".to_string(),
                _ => String::new(),
            };
            row.push(cell);
        }
        wtr.write_record(&row).map_err(csv_error)?;
    }
    wtr.flush()?;
    Ok(())
}

/// Realized, fitted and one-step-ahead VaR/ES per validation period.
pub fn write_risk_table<W: Write>(run: &SequentialRun, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    wtr.write_record([
        "period",
        "level",
        "realized_var",
        "realized_es",
        "fitted_var",
        "fitted_es",
        "predicted_var",
        "predicted_es",
    ])
    .map_err(csv_error)?;
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.6}")).unwrap_or_default();
    for record in &run.records {
        let obs = &record.observation;
        for (i, (level, var, es)) in obs.realized_risk.rows().enumerate() {
            let fitted = obs.fitted.as_ref().map(|(_, r)| (r.var[i], r.es[i]));
            let predicted = obs.prediction.as_ref().map(|p| (p.risk.var[i], p.risk.es[i]));
            wtr.write_record([
                record.label.clone(),
                level.to_string(),
                format!("{var:.6}"),
                format!("{es:.6}"),
                fmt(fitted.map(|f| f.0)),
                fmt(fitted.map(|f| f.1)),
                fmt(predicted.map(|p| p.0)),
                fmt(predicted.map(|p| p.1)),
            ])
            .map_err(csv_error)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pm(x: f64) -> QuantileFunction {
        QuantileFunction::point_mass(x).unwrap()
    }

    fn fixed(penalty: PenaltyConfig) -> SequentialConfig {
        SequentialConfig { penalty: PenaltyMode::Fixed(penalty), grid: Grid::with_nodes(200).unwrap(), ..Default::default() }
    }

    #[test]
    fn extend_examples() {
        let w = WeightVector::new(vec![0.5, 0.5]).unwrap();
        assert_eq!(extend_weights(&w, 0.2).unwrap().as_slice(), &[0.4, 0.4, 0.2]);
        assert_eq!(extend_weights(&w, 0.0).unwrap().as_slice(), &[0.5, 0.5, 0.0]);
        assert_eq!(extend_weights(&w, 1.0).unwrap().as_slice(), &[0.0, 0.0, 1.0]);
        assert!(extend_weights(&w, 1.5).is_err());
    }

    #[test]
    fn bias_recursion() {
        let mut s = SequentialState::new(fixed(PenaltyConfig::pure())).unwrap();
        s.bias_update(2.0, 0.0).unwrap();
        assert_eq!(s.bias_update(4.0, 0.0).unwrap(), 2.5);
        let mut s = SequentialState::new(SequentialConfig { rho: 1.0, ..fixed(PenaltyConfig::pure()) }).unwrap();
        s.bias_update(1.0, 3.0).unwrap();
        assert_eq!(s.bias_update(7.0, 2.0).unwrap(), 5.0);
    }

    #[test]
    fn step_fit_examples() {
        let mut s = SequentialState::new(fixed(PenaltyConfig::pure())).unwrap();
        assert!(s.step_fit(&pm(1.0)).is_err());
        s.push_history(pm(3.0)).unwrap();
        assert_eq!(s.step_fit(&pm(1.0)).unwrap().weights.as_slice(), &[1.0]);
        s.push_history(pm(0.0)).unwrap();
        let w = s.step_fit(&pm(3.0)).unwrap().weights;
        assert!((w.as_slice()[0] - 1.0).abs() < 1e-9);
    }

    #[test]
    fn prediction_is_shifted_combination() {
        let mut s = SequentialState::new(fixed(PenaltyConfig::pure())).unwrap();
        s.push_history(pm(0.0)).unwrap();
        s.push_history(pm(10.0)).unwrap();
        s.set_weights(WeightVector::uniform(2)).unwrap();
        s.bias_update(1.0, 0.0).unwrap();
        s.bias_update(1.5, 0.0).unwrap();
        // w0 = 0.5 * 1.5 + 0.5 * 0.5 = 1
        let q = s.predict_next().unwrap();
        assert!((q.evaluate(0.3).unwrap() - 6.0).abs() < 1e-12);
    }

    #[test]
    fn unit_delta_puts_all_mass_on_newest() {
        let panel = ClaimsPanel::from_rows((0..4).flat_map(|j| (1..=5).map(move |i| (j.to_string(), (i * (j + 1)) as f64)))).unwrap();
        let cfg = SequentialConfig { delta: 1.0, warmup: 2, ..fixed(PenaltyConfig::pure()) };
        let run = run_sequential(&panel, &cfg).unwrap();
        assert_eq!(run.records.len(), 2);
        for r in &run.records {
            let w = r.observation.weights.as_slice();
            assert_eq!(w[w.len() - 1], 1.0);
            assert!(w[..w.len() - 1].iter().all(|&x| x == 0.0));
        }
    }

    #[test]
    fn warmup_only_panel_has_no_rows() {
        let panel = ClaimsPanel::from_rows((0..3).map(|j| (j.to_string(), 1.0 + j as f64))).unwrap();
        let run = run_sequential(&panel, &SequentialConfig { warmup: 3, ..fixed(PenaltyConfig::pure()) }).unwrap();
        assert!(run.records.is_empty());
        let mut buf = Vec::new();
        write_weight_table(&run, ZeroStyle::Blank, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 1);
        assert!(tune_delta(&panel, &[0.1], &SequentialConfig { warmup: 3, ..fixed(PenaltyConfig::pure()) }).is_err());
    }
}
