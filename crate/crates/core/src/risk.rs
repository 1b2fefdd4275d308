//! Value-at-Risk and Expected Shortfall of quantile functions.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::quantile::{EmpiricalQuantile, Grid, QuantileFunction};

/// Report levels used when none are given.
pub const DEFAULT_LEVELS: [f64; 5] = [0.90, 0.95, 0.975, 0.99, 0.995];

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RiskReport {
    pub levels: Vec<f64>,
    pub var: Vec<f64>,
    pub es: Vec<f64>,
}

impl RiskReport {
    pub fn rows(&self) -> impl Iterator<Item = (f64, f64, f64)> + '_ {
        self.levels.iter().zip(&self.var).zip(&self.es).map(|((&l, &v), &e)| (l, v, e))
    }
}

fn check_level(p: f64) -> Result<()> {
    if p > 0.0 && p < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(p))
    }
}

/// `VaR_p = g(p)`.
pub fn value_at_risk(q: &QuantileFunction, p: f64) -> Result<f64> {
    q.evaluate(p)
}

/// `ES_p = (1-p)⁻¹ ∫_p^1 g(s) ds`.
///
/// Empirical quantiles use the exact tail average of the order statistics.
/// Combinations are expanded linearly over their components. Parametric
/// quantiles use the midpoint rule with the grid's node count on
/// `(p, 1 - trim)`, averaged over that interval.
pub fn expected_shortfall(q: &QuantileFunction, p: f64, grid: &Grid) -> Result<f64> {
    check_level(p)?;
    match q {
        QuantileFunction::Empirical(e) => Ok(empirical_tail_average(e, p)),
        QuantileFunction::Combination(c) => {
            let mut total = c.shift();
            for (component, &w) in c.components().iter().zip(c.weights().as_slice()) {
                if w != 0.0 {
                    total += w * expected_shortfall(component, p, grid)?;
                }
            }
            Ok(total)
        }
        QuantileFunction::Parametric(f) => {
            let upper = 1.0 - grid.trim();
            if p >= upper {
                return Err(Error::invalid(format!("level {p} lies inside the trimmed tail (trim {})", grid.trim())));
            }
            let m = grid.len();
            let h = (upper - p) / m as f64;
            let mut sum = 0.0;
            for k in 0..m {
                sum += f.quantile(p + (k as f64 + 0.5) * h);
            }
            let es = sum / m as f64;
            if !es.is_finite() {
                return Err(Error::numeric(format!(
                    "expected shortfall at level {p} is not finite; increase the grid trim"
                )));
            }
            Ok(es)
        }
    }
}

/// `[(k - np) x_(k) + Σ_{i>k} x_(i)] / (n - np)` with `k = ⌈np⌉`, which is
/// the exact tail average of the step quantile; when `np` is an integer it
/// reduces to the plain mean of the top `n - k` order statistics.
fn empirical_tail_average(e: &EmpiricalQuantile, p: f64) -> f64 {
    let x = e.sorted();
    let n = x.len();
    let k = e.order_index(p);
    let np = n as f64 * p;
    let partial = (k as f64 - np).max(0.0);
    let top: f64 = x[k..].iter().sum();
    if partial <= 8.0 * f64::EPSILON * np.max(1.0) {
        if k == n {
            return x[n - 1];
        }
        return top / (n - k) as f64;
    }
    (partial * x[k - 1] + top) / (n as f64 - np)
}

pub fn risk_report(q: &QuantileFunction, levels: &[f64], grid: &Grid) -> Result<RiskReport> {
    let mut var = Vec::with_capacity(levels.len());
    let mut es = Vec::with_capacity(levels.len());
    for &p in levels {
        var.push(value_at_risk(q, p)?);
        es.push(expected_shortfall(q, p, grid)?);
    }
    Ok(RiskReport { levels: levels.to_vec(), var, es })
}
