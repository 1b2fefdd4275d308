//! Quantile functions of real-line probability models.
//!
//! Every model in this crate is represented by its quantile function
//! `g: (0,1) -> R`. Distances and inner products are integrals over `(0,1)`
//! evaluated with the midpoint rule on a [`Grid`], which never touches the
//! endpoints where heavy-tailed quantiles diverge.

use std::sync::Arc;

use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::solver::WeightVector;

/// Parametric families with closed-form quantile functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Family {
    Normal { mean: f64, sd: f64 },
    Weibull { shape: f64, scale: f64 },
    Exponential { rate: f64 },
    Uniform { low: f64, high: f64 },
    PointMass { at: f64 },
}

impl Family {
    pub fn validate(&self) -> Result<()> {
        let finite = |xs: &[f64]| xs.iter().all(|x| x.is_finite());
        let ok = match *self {
            Family::Normal { mean, sd } => finite(&[mean, sd]) && sd > 0.0,
            Family::Weibull { shape, scale } => finite(&[shape, scale]) && shape > 0.0 && scale > 0.0,
            Family::Exponential { rate } => rate.is_finite() && rate > 0.0,
            Family::Uniform { low, high } => finite(&[low, high]) && low < high,
            Family::PointMass { at } => at.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid parameters for {self:?}")))
        }
    }

    /// Quantile at `s`; assumes `0 < s < 1` and validated parameters.
    pub fn quantile(&self, s: f64) -> f64 {
        match *self {
            Family::Normal { mean, sd } => mean + sd * standard_normal_quantile(s),
            // ln_1p keeps precision for small s
            Family::Weibull { shape, scale } => scale * (-(-s).ln_1p()).powf(1.0 / shape),
            Family::Exponential { rate } => -(-s).ln_1p() / rate,
            Family::Uniform { low, high } => low + (high - low) * s,
            Family::PointMass { at } => at,
        }
    }
}

fn standard_normal_quantile(s: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * s)
}

/// Left-continuous step quantile of a finite sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalQuantile {
    sorted: Arc<[f64]>,
}

impl EmpiricalQuantile {
    pub fn from_sample(sample: &[f64]) -> Result<Self> {
        if sample.is_empty() {
            return Err(Error::invalid("empirical quantile of an empty sample"));
        }
        if let Some((i, x)) = sample.iter().enumerate().find(|(_, x)| !x.is_finite()) {
            return Err(Error::invalid(format!("sample value {x} at position {i} is not finite")));
        }
        let mut sorted = sample.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted: sorted.into() })
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    /// 1-based order-statistic index `ceil(n s)`, clamped to `1..=n`.
    ///
    /// `n s` is snapped to the nearest integer when it lies within a few ulps
    /// of it, so that e.g. `s = 0.95, n = 100` selects the 95th statistic even
    /// though `0.95` is not exactly representable.
    pub fn order_index(&self, s: f64) -> usize {
        let n = self.sorted.len();
        let t = n as f64 * s;
        let r = t.round();
        let k = if (t - r).abs() <= 8.0 * f64::EPSILON * t.max(1.0) { r } else { t.ceil() };
        (k as usize).clamp(1, n)
    }

    pub fn value(&self, s: f64) -> f64 {
        self.sorted[self.order_index(s) - 1]
    }

    pub fn mean(&self) -> f64 {
        self.sorted.iter().sum::<f64>() / self.sorted.len() as f64
    }

    /// Exact `∫_p^1 g(s) ds` of the step function.
    pub fn upper_tail_integral(&self, p: f64) -> f64 {
        let n = self.sorted.len() as f64;
        self.sorted
            .iter()
            .enumerate()
            .map(|(k, &x)| {
                let lo = (k as f64 / n).max(p);
                let hi = (k + 1) as f64 / n;
                if hi > lo {
                    x * (hi - lo)
                } else {
                    0.0
                }
            })
            .sum()
    }
}

/// Exact `∫_0^1 g_a(s) g_b(s) ds` for two step quantiles, integrating the
/// product piecewise between the merged breakpoints `k/n` and `l/m`.
pub fn empirical_inner_product(a: &EmpiricalQuantile, b: &EmpiricalQuantile) -> f64 {
    let (xa, xb) = (a.sorted(), b.sorted());
    let (n, m) = (xa.len(), xb.len());
    let (mut i, mut j) = (0usize, 0usize);
    let mut left = 0.0_f64;
    let mut total = 0.0;
    while i < n && j < m {
        let ra = (i + 1) as f64 / n as f64;
        let rb = (j + 1) as f64 / m as f64;
        let right = ra.min(rb);
        total += xa[i] * xb[j] * (right - left);
        left = right;
        // Compare in integer arithmetic to advance both on shared breakpoints.
        match ((i + 1) * m).cmp(&((j + 1) * n)) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    total
}

/// Weighted combination `shift + Σ_j w_j g_j(s)` of component quantiles.
#[derive(Debug, Clone, PartialEq)]
pub struct Combination {
    components: Vec<QuantileFunction>,
    weights: WeightVector,
    shift: f64,
}

impl Combination {
    pub fn new(components: Vec<QuantileFunction>, weights: WeightVector, shift: f64) -> Result<Self> {
        if components.len() != weights.len() {
            return Err(Error::invalid(format!(
                "{} components but {} weights",
                components.len(),
                weights.len()
            )));
        }
        if !shift.is_finite() {
            return Err(Error::invalid("combination shift must be finite"));
        }
        Ok(Self { components, weights, shift })
    }

    pub fn components(&self) -> &[QuantileFunction] {
        &self.components
    }

    pub fn weights(&self) -> &WeightVector {
        &self.weights
    }

    pub fn shift(&self) -> f64 {
        self.shift
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum QuantileFunction {
    Parametric(Family),
    Empirical(EmpiricalQuantile),
    Combination(Combination),
}

impl QuantileFunction {
    pub fn parametric(family: Family) -> Result<Self> {
        family.validate()?;
        Ok(Self::Parametric(family))
    }

    pub fn normal(mean: f64, sd: f64) -> Result<Self> {
        Self::parametric(Family::Normal { mean, sd })
    }

    pub fn weibull(shape: f64, scale: f64) -> Result<Self> {
        Self::parametric(Family::Weibull { shape, scale })
    }

    pub fn exponential(rate: f64) -> Result<Self> {
        Self::parametric(Family::Exponential { rate })
    }

    pub fn uniform(low: f64, high: f64) -> Result<Self> {
        Self::parametric(Family::Uniform { low, high })
    }

    pub fn point_mass(at: f64) -> Result<Self> {
        Self::parametric(Family::PointMass { at })
    }

    pub fn combination(components: Vec<QuantileFunction>, weights: WeightVector, shift: f64) -> Result<Self> {
        Ok(Self::Combination(Combination::new(components, weights, shift)?))
    }

    /// Value at `s`, which must lie strictly inside `(0, 1)`.
    pub fn evaluate(&self, s: f64) -> Result<f64> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(s));
        }
        Ok(self.value_at(s))
    }

    pub(crate) fn value_at(&self, s: f64) -> f64 {
        match self {
            Self::Parametric(f) => f.quantile(s),
            Self::Empirical(e) => e.value(s),
            Self::Combination(c) => {
                c.shift
                    + c.components
                        .iter()
                        .zip(c.weights.as_slice())
                        .filter(|(_, &w)| w != 0.0)
                        .map(|(q, &w)| w * q.value_at(s))
                        .sum::<f64>()
            }
        }
    }

    /// Values at every grid node; fails on the first non-finite evaluation.
    pub fn values_on(&self, grid: &Grid) -> Result<Vec<f64>> {
        grid.nodes()
            .map(|s| {
                let v = self.value_at(s);
                if v.is_finite() {
                    Ok(v)
                } else {
                    Err(Error::numeric(format!("quantile evaluates to {v} at node s = {s}")))
                }
            })
            .collect()
    }

    /// Grid approximation of the mean, `∫ g(s) ds` over the (trimmed) grid
    /// divided by the grid's coverage.
    pub fn mean_on(&self, grid: &Grid) -> Result<f64> {
        let values = self.values_on(grid)?;
        Ok(values.iter().sum::<f64>() / values.len() as f64)
    }
}

/// Builds the step quantile `g(s) = x_(⌈ns⌉)` of a sample.
pub fn empirical_quantile(sample: &[f64]) -> Result<QuantileFunction> {
    Ok(QuantileFunction::Empirical(EmpiricalQuantile::from_sample(sample)?))
}

/// Free-function form of [`QuantileFunction::evaluate`].
pub fn evaluate(q: &QuantileFunction, s: f64) -> Result<f64> {
    q.evaluate(s)
}

/// Uniform midpoint grid on `(trim, 1 - trim)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Grid {
    nodes: usize,
    trim: f64,
}

impl Default for Grid {
    fn default() -> Self {
        Self { nodes: 1000, trim: 0.0 }
    }
}

impl Grid {
    pub fn new(nodes: usize, trim: f64) -> Result<Self> {
        if nodes < 2 {
            return Err(Error::invalid(format!("grid needs at least 2 nodes, got {nodes}")));
        }
        if !(0.0..0.5).contains(&trim) {
            return Err(Error::invalid(format!("trim {trim} outside [0, 0.5)")));
        }
        Ok(Self { nodes, trim })
    }

    pub fn with_nodes(nodes: usize) -> Result<Self> {
        Self::new(nodes, 0.0)
    }

    pub fn len(&self) -> usize {
        self.nodes
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn trim(&self) -> f64 {
        self.trim
    }

    /// Quadrature weight of each node.
    pub fn step(&self) -> f64 {
        (1.0 - 2.0 * self.trim) / self.nodes as f64
    }

    pub fn node(&self, k: usize) -> f64 {
        self.trim + (k as f64 + 0.5) * self.step()
    }

    pub fn nodes(&self) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.nodes).map(move |k| self.node(k))
    }

    /// Midpoint-rule `∫ a b` from node values.
    pub fn inner(&self, a: &[f64], b: &[f64]) -> f64 {
        debug_assert_eq!(a.len(), b.len());
        self.step() * a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>()
    }
}

/// Quadratic Wasserstein distance `{∫ (g₁ - g₂)²}^{1/2}` on `grid`.
pub fn wasserstein2(q1: &QuantileFunction, q2: &QuantileFunction, grid: &Grid) -> Result<f64> {
    let a = q1.values_on(grid)?;
    let b = q2.values_on(grid)?;
    Ok(wasserstein2_from_values(&a, &b, grid))
}

pub(crate) fn wasserstein2_from_values(a: &[f64], b: &[f64], grid: &Grid) -> f64 {
    let ss: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
    (grid.step() * ss).sqrt()
}

/// Quantile function of the barycenter of `models` under weights `w`.
pub fn barycenter_quantile(models: &[QuantileFunction], w: &WeightVector) -> Result<QuantileFunction> {
    QuantileFunction::combination(models.to_vec(), w.clone(), 0.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn w(v: &[f64]) -> WeightVector {
        WeightVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_observation_is_constant() {
        let q = empirical_quantile(&[3.0]).unwrap();
        for s in [1e-9, 0.3, 0.5, 0.999] {
            assert_eq!(q.evaluate(s).unwrap(), 3.0);
        }
    }

    #[test]
    fn two_point_step() {
        let q = empirical_quantile(&[2.0, 1.0]).unwrap();
        assert_eq!(q.evaluate(0.25).unwrap(), 1.0);
        assert_eq!(q.evaluate(0.5).unwrap(), 1.0);
        assert_eq!(q.evaluate(0.500001).unwrap(), 2.0);
        assert_eq!(q.evaluate(0.99).unwrap(), 2.0);
    }

    #[test]
    fn empirical_rejects_bad_samples() {
        assert!(matches!(empirical_quantile(&[]), Err(Error::InvalidInput(_))));
        assert!(matches!(empirical_quantile(&[1.0, f64::NAN]), Err(Error::InvalidInput(_))));
        assert!(matches!(empirical_quantile(&[f64::INFINITY]), Err(Error::InvalidInput(_))));
    }

    #[test]
    fn order_index_snaps_representation_error() {
        let sample: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = EmpiricalQuantile::from_sample(&sample).unwrap();
        assert_eq!(q.value(0.95), 95.0);
        assert_eq!(q.value(0.07), 7.0);
        assert_eq!(q.value(0.071), 8.0);
    }

    #[test]
    fn parametric_values() {
        let n = QuantileFunction::normal(0.0, 1.0).unwrap();
        assert!(n.evaluate(0.5).unwrap().abs() < 1e-15);
        let e = QuantileFunction::exponential(1.0).unwrap();
        let s = 1.0 - (-1.0f64).exp();
        assert!((e.evaluate(s).unwrap() - 1.0).abs() < 1e-12);
        assert!((e.evaluate(0.3).unwrap() + (0.7f64).ln()).abs() < 1e-14);
        let u = QuantileFunction::uniform(2.0, 4.0).unwrap();
        assert_eq!(u.evaluate(0.25).unwrap(), 2.5);
        // Weibull with shape 1 is the exponential
        let wb = QuantileFunction::weibull(1.0, 2.0).unwrap();
        assert!((wb.evaluate(0.3).unwrap() - 2.0 * e.evaluate(0.3).unwrap()).abs() < 1e-14);
    }

    #[test]
    fn domain_errors() {
        let q = QuantileFunction::point_mass(1.0).unwrap();
        for s in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(matches!(q.evaluate(s), Err(Error::Domain(_))));
        }
    }

    #[test]
    fn invalid_family_parameters() {
        assert!(QuantileFunction::normal(0.0, 0.0).is_err());
        assert!(QuantileFunction::weibull(-1.0, 1.0).is_err());
        assert!(QuantileFunction::exponential(0.0).is_err());
        assert!(QuantileFunction::uniform(1.0, 1.0).is_err());
        assert!(QuantileFunction::point_mass(f64::NAN).is_err());
    }

    #[test]
    fn combination_of_constants() {
        let models = vec![QuantileFunction::point_mass(1.0).unwrap(), QuantileFunction::point_mass(3.0).unwrap()];
        let q = QuantileFunction::combination(models, w(&[0.5, 0.5]), 0.0).unwrap();
        for s in [0.1, 0.5, 0.9] {
            assert_eq!(q.evaluate(s).unwrap(), 2.0);
        }
    }

    #[test]
    fn combination_length_mismatch() {
        let models = vec![QuantileFunction::point_mass(1.0).unwrap()];
        assert!(barycenter_quantile(&models, &w(&[0.5, 0.5])).is_err());
    }

    #[test]
    fn grid_nodes_are_interior_midpoints() {
        let g = Grid::new(4, 0.1).unwrap();
        let nodes: Vec<f64> = g.nodes().collect();
        let expected = [0.2, 0.4, 0.6, 0.8];
        for (a, b) in nodes.iter().zip(expected) {
            assert!((a - b).abs() < 1e-15);
        }
        assert!(Grid::new(1, 0.0).is_err());
        assert!(Grid::new(10, 0.5).is_err());
        assert!(Grid::new(10, -0.1).is_err());
    }

    #[test]
    fn w2_point_masses_and_identity() {
        let grid = Grid::default();
        let a = QuantileFunction::point_mass(-1.5).unwrap();
        let b = QuantileFunction::point_mass(2.0).unwrap();
        assert!((wasserstein2(&a, &b, &grid).unwrap() - 3.5).abs() < 1e-12);
        let n = QuantileFunction::normal(0.0, 1.0).unwrap();
        assert_eq!(wasserstein2(&n, &n, &grid).unwrap(), 0.0);
    }

    #[test]
    fn barycenter_of_point_masses() {
        let models = vec![QuantileFunction::point_mass(0.0).unwrap(), QuantileFunction::point_mass(10.0).unwrap()];
        let q = barycenter_quantile(&models, &w(&[0.3, 0.7])).unwrap();
        assert!((q.evaluate(0.42).unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_weight_reproduces_first_model() {
        let models = vec![
            QuantileFunction::normal(0.5, 2.0).unwrap(),
            QuantileFunction::weibull(1.3, 1.0).unwrap(),
            QuantileFunction::exponential(2.0).unwrap(),
        ];
        let q = barycenter_quantile(&models, &w(&[1.0, 0.0, 0.0])).unwrap();
        let grid = Grid::with_nodes(200).unwrap();
        assert_eq!(q.values_on(&grid).unwrap(), models[0].values_on(&grid).unwrap());
    }

    #[test]
    fn exact_inner_product_of_identical_steps() {
        let a = EmpiricalQuantile::from_sample(&[1.0, 2.0, 3.0]).unwrap();
        // (1 + 4 + 9) / 3
        assert!((empirical_inner_product(&a, &a) - 14.0 / 3.0).abs() < 1e-14);
        let b = EmpiricalQuantile::from_sample(&[0.0, 6.0]).unwrap();
        // pieces: (0,1/3):1*0, (1/3,1/2):2*0, (1/2,2/3):2*6, (2/3,1):3*6
        let expected = 2.0 * 6.0 / 6.0 + 3.0 * 6.0 / 3.0;
        assert!((empirical_inner_product(&a, &b) - expected).abs() < 1e-14);
    }

    #[test]
    fn tail_integral_of_step_function() {
        let sample: Vec<f64> = (1..=100).map(f64::from).collect();
        let q = EmpiricalQuantile::from_sample(&sample).unwrap();
        let tail = q.upper_tail_integral(0.95);
        assert!((tail / 0.05 - 98.0).abs() < 1e-10);
        assert!((q.upper_tail_integral(0.0) - q.mean()).abs() < 1e-10);
    }
}
