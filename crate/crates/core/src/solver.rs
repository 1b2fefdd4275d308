//! Simplex-constrained calibration of barycentric weights.
//!
//! All solvers minimize, over the unit simplex `S_J`,
//!
//! ```text
//! F(w) = ½ W₂²(μ(w), μ₀) + λ (α ‖w‖₁ + (1-α)/2 ‖w‖₂²)
//! ```
//!
//! given the [`GramSystem`] of the model set against the target.
//!
//! - [`solve_pure`]: `λ = 0`, closed form `S̃⁻¹1 / 1ᵀS̃⁻¹1` when interior.
//! - [`solve_ridge`]: `α = 0`, closed form on the active face with an exact
//!   active-set pivot when the unconstrained face solution leaves the simplex.
//! - [`solve_enet`]: the LQA projected-gradient scheme for any `(λ, α)`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gram::GramSystem;

/// Tolerance on `|Σ w - 1|` for a valid weight vector.
pub const SIMPLEX_TOLERANCE: f64 = 1e-12;

/// A point of the unit simplex.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct WeightVector(Vec<f64>);

impl WeightVector {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("weight vector is empty"));
        }
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::invalid(format!("weights must be finite and nonnegative: {w:?}")));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::invalid(format!("weights sum to {sum}, not 1")));
        }
        Ok(Self(w))
    }

    pub fn uniform(j: usize) -> Self {
        assert!(j > 0, "uniform weights need at least one coordinate");
        Self(vec![1.0 / j as f64; j])
    }

    /// All mass on coordinate `i` of `j`.
    pub fn unit(j: usize, i: usize) -> Self {
        assert!(i < j);
        let mut w = vec![0.0; j];
        w[i] = 1.0;
        Self(w)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Indices with strictly positive weight.
    pub fn active_set(&self) -> Vec<usize> {
        self.0.iter().enumerate().filter(|(_, &w)| w > 0.0).map(|(i, _)| i).collect()
    }

    pub fn sup_distance(&self, other: &WeightVector) -> f64 {
        sup_norm_diff(&self.0, &other.0)
    }

    pub fn euclidean_distance(&self, other: &WeightVector) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt()
    }

    /// Normalizes a nonnegative vector with positive mass.
    fn normalized(mut y: Vec<f64>) -> Self {
        let sum: f64 = y.iter().sum();
        y.iter_mut().for_each(|v| *v /= sum);
        Self(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum PenaltyKind {
    Pure,
    Lasso,
    Ridge,
    ElasticNet,
}

/// Elastic-net penalty `λ (α ‖w‖₁ + (1-α)/2 ‖w‖₂²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PenaltyConfig {
    lambda: f64,
    alpha: f64,
}

impl PenaltyConfig {
    pub fn new(lambda: f64, alpha: f64) -> Result<Self> {
        if !(lambda.is_finite() && lambda >= 0.0) {
            return Err(Error::invalid(format!("lambda must be finite and >= 0, got {lambda}")));
        }
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha must lie in [0, 1], got {alpha}")));
        }
        Ok(Self { lambda, alpha })
    }

    pub fn pure() -> Self {
        Self { lambda: 0.0, alpha: 1.0 }
    }

    pub fn lasso(lambda: f64) -> Result<Self> {
        Self::new(lambda, 1.0)
    }

    pub fn ridge(lambda: f64) -> Result<Self> {
        Self::new(lambda, 0.0)
    }

    pub fn elastic_net(lambda: f64, alpha: f64) -> Result<Self> {
        Self::new(lambda, alpha)
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn kind(&self) -> PenaltyKind {
        if self.lambda == 0.0 {
            PenaltyKind::Pure
        } else if self.alpha == 1.0 {
            PenaltyKind::Lasso
        } else if self.alpha == 0.0 {
            PenaltyKind::Ridge
        } else {
            PenaltyKind::ElasticNet
        }
    }

    /// Weight of the L1 term, `λα`.
    pub fn l1(&self) -> f64 {
        self.lambda * self.alpha
    }

    /// Weight of the squared-L2 term, `λ(1-α)`.
    pub fn l2(&self) -> f64 {
        self.lambda * (1.0 - self.alpha)
    }

    pub fn value(&self, w: &[f64]) -> f64 {
        let l1: f64 = w.iter().map(|x| x.abs()).sum();
        let l2: f64 = w.iter().map(|x| x * x).sum();
        self.l1() * l1 + 0.5 * self.l2() * l2
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `η = 1 / (trace(S_G) + max_j d_j)` evaluated at the initial weights.
    Auto,
    Fixed(f64),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverOptions {
    pub step: StepSize,
    /// Convergence threshold on the sup-norm of the weight change.
    pub tol: f64,
    pub max_iter: usize,
    /// Weights below this are left out of the quadratic L1 approximation.
    pub eps_lqa: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self { step: StepSize::Auto, tol: 1e-9, max_iter: 10_000, eps_lqa: 1e-8 }
    }
}

impl SolverOptions {
    pub fn validate(&self) -> Result<()> {
        let step_ok = match self.step {
            StepSize::Auto => true,
            StepSize::Fixed(eta) => eta.is_finite() && eta > 0.0,
        };
        let positive = |x: f64| x.is_finite() && x > 0.0;
        if !step_ok || !positive(self.tol) || self.max_iter == 0 || !positive(self.eps_lqa) {
            return Err(Error::invalid(format!("invalid solver options: {self:?}")));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitResult {
    pub weights: WeightVector,
    pub objective: f64,
    pub iterations: usize,
    pub converged: bool,
    pub active_set: Vec<usize>,
}

impl FitResult {
    fn new(gram: &GramSystem, weights: WeightVector, penalty: &PenaltyConfig, iterations: usize, converged: bool) -> Self {
        let objective = objective_unchecked(gram, &weights, penalty);
        let active_set = weights.active_set();
        Self { weights, objective, iterations, converged, active_set }
    }
}

fn sup_norm_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

/// Truncates negative coordinates to zero and renormalizes by the remaining
/// mass. Zero coordinates stay zero.
pub fn project_simplex(x: &[f64]) -> Result<WeightVector> {
    if x.is_empty() {
        return Err(Error::invalid("cannot project an empty vector"));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::numeric(format!("non-finite coordinate in projection input {x:?}")));
    }
    let y: Vec<f64> = x.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect();
    if y.iter().sum::<f64>() <= 0.0 {
        return Err(Error::DegenerateProjection);
    }
    Ok(WeightVector::normalized(y))
}

/// Level `τ` with `Σ_j (y_j - τ)⁺ = 1`.
///
/// Shifting by `τ` before [`project_simplex`] soft-thresholds `y`, and the
/// composition is the Euclidean projection onto the simplex.
pub fn simplex_threshold(y: &[f64]) -> f64 {
    let mut sorted = y.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut tau = sorted[0] - 1.0;
    for (i, &v) in sorted.iter().enumerate() {
        cumsum += v;
        let t = (cumsum - 1.0) / (i + 1) as f64;
        if v - t > 0.0 {
            tau = t;
        } else {
            break;
        }
    }
    tau
}

fn project_thresholded(y: &[f64]) -> Result<WeightVector> {
    let tau = simplex_threshold(y);
    let shifted: Vec<f64> = y.iter().map(|v| v - tau).collect();
    project_simplex(&shifted)
}

fn check_dim(gram: &GramSystem, w: &WeightVector) -> Result<()> {
    if gram.dim() != w.len() {
        return Err(Error::invalid(format!("{} weights for a {}-model gram system", w.len(), gram.dim())));
    }
    Ok(())
}

/// Penalized calibration objective `½ W₂²(μ(w), μ₀) + λΨ_α(w)`.
///
/// The fit term is computed as `½ wᵀ S̃ w`, which on the simplex equals
/// `½ (wᵀ S_G w - 2 σ_Gᵀ w + σ₀²)` without the cancellation between its
/// terms.
pub fn objective(gram: &GramSystem, w: &WeightVector, penalty: &PenaltyConfig) -> Result<f64> {
    check_dim(gram, w)?;
    Ok(objective_unchecked(gram, w, penalty))
}

fn objective_unchecked(gram: &GramSystem, w: &WeightVector, penalty: &PenaltyConfig) -> f64 {
    0.5 * gram.fit_error(w) + penalty.value(w.as_slice())
}

/// Diagonal of the local quadratic approximation `S_{λ,α}(w₀)`.
///
/// `d_j = λα / |w₀_j| + λ(1-α)` when `w₀_j ≥ ε`, and `λ(1-α)` otherwise.
pub fn lqa_matrix(w0: &[f64], penalty: &PenaltyConfig, eps_lqa: f64) -> DVector<f64> {
    DVector::from_iterator(
        w0.len(),
        w0.iter().map(|&w| {
            let l1 = if w >= eps_lqa { penalty.l1() / w.abs().max(eps_lqa) } else { 0.0 };
            l1 + penalty.l2()
        }),
    )
}

/// Default step size `1 / (trace(S_G) + max_j d_j(w₀))`.
pub fn auto_step(gram: &GramSystem, w0: &[f64], penalty: &PenaltyConfig, eps_lqa: f64) -> f64 {
    let d = lqa_matrix(w0, penalty, eps_lqa);
    let bound = gram.s_g().trace() + d.max();
    if bound > 0.0 {
        1.0 / bound
    } else {
        1.0
    }
}

/// Gradient of the LQA surrogate around `w0`, evaluated at `w`.
///
/// Coordinates excluded from the quadratic approximation carry the exact
/// L1 slope `λα` of the nonnegative orthant instead.
fn surrogate_gradient(gram: &GramSystem, w: &[f64], w0: &[f64], penalty: &PenaltyConfig, eps_lqa: f64) -> Vec<f64> {
    let d = lqa_matrix(w0, penalty, eps_lqa);
    let c = gram.error_correlations(w);
    (0..w.len())
        .map(|j| {
            let frozen = if w0[j] < eps_lqa { penalty.l1() } else { 0.0 };
            c[j] + d[j] * w[j] + frozen
        })
        .collect()
}

/// LQA surrogate `½ wᵀ(S_G + S_{λ,α}(w₀))w - σ_Gᵀw + λα Σ_{frozen} w_j`, up
/// to a constant.
pub fn surrogate_objective(gram: &GramSystem, w: &[f64], w0: &[f64], penalty: &PenaltyConfig, eps_lqa: f64) -> f64 {
    let d = lqa_matrix(w0, penalty, eps_lqa);
    let v = DVector::from_column_slice(w);
    let quad = v.dot(&(gram.s_g() * &v)) + (0..w.len()).map(|j| d[j] * w[j] * w[j]).sum::<f64>();
    let frozen: f64 = (0..w.len()).filter(|&j| w0[j] < eps_lqa).map(|j| penalty.l1() * w[j]).sum();
    0.5 * quad - gram.sigma_g().dot(&v) + frozen
}

/// One projected step on the LQA surrogate at fixed `w0`.
pub fn surrogate_step(
    gram: &GramSystem,
    w: &WeightVector,
    w0: &WeightVector,
    penalty: &PenaltyConfig,
    eta: f64,
    eps_lqa: f64,
) -> Result<WeightVector> {
    let grad = surrogate_gradient(gram, w.as_slice(), w0.as_slice(), penalty, eps_lqa);
    let y: Vec<f64> = w.as_slice().iter().zip(&grad).map(|(x, g)| x - eta * g).collect();
    project_thresholded(&y)
}

/// Unpenalized calibration.
///
/// Uses the closed form `S̃⁻¹1 / 1ᵀS̃⁻¹1` when `S̃` is positive definite and
/// the solution lies in the simplex; otherwise falls back to
/// [`solve_enet`] with `λ = 0`.
pub fn solve_pure(gram: &GramSystem) -> Result<FitResult> {
    solve_pure_with(gram, &SolverOptions::default())
}

pub fn solve_pure_with(gram: &GramSystem, opts: &SolverOptions) -> Result<FitResult> {
    let j = gram.dim();
    let penalty = PenaltyConfig::pure();
    if j == 1 {
        return Ok(FitResult::new(gram, WeightVector::uniform(1), &penalty, 0, true));
    }
    if let Some(w) = pure_closed_form(gram.centered()) {
        return Ok(FitResult::new(gram, w, &penalty, 0, true));
    }
    solve_enet(gram, &penalty, opts)
}

fn pure_closed_form(centered: &DMatrix<f64>) -> Option<WeightVector> {
    let j = centered.nrows();
    let chol = centered.clone().cholesky()?;
    let v = chol.solve(&DVector::from_element(j, 1.0));
    let total = v.sum();
    if total.is_nan() || total <= 0.0 || v.iter().any(|x| !x.is_finite() || *x < 0.0) {
        return None;
    }
    let w = WeightVector::normalized(v.iter().copied().collect());
    // Reject solutions that ill-conditioning has corrupted: the equality
    // constrained optimum has S̃w = μ1.
    let v = DVector::from_column_slice(w.as_slice());
    let grad = centered * &v;
    let mu = v.dot(&grad);
    let scale = centered.amax().max(f64::MIN_POSITIVE);
    if grad.iter().any(|g| (g - mu).abs() > 1e-8 * scale) {
        return None;
    }
    Some(w)
}

/// Ridge calibration over the simplex.
///
/// The face solution is `w = (S_G + λI)⁻¹(σ_G + μ1)` with the multiplier
/// `μ` fixed by `Σ w = 1`. When it has negative coordinates a primal
/// active-set pivot moves them to the boundary until the multipliers of the
/// fixed coordinates are nonnegative.
pub fn solve_ridge(gram: &GramSystem, lambda: f64) -> Result<FitResult> {
    if !(lambda.is_finite() && lambda > 0.0) {
        return Err(Error::invalid(format!("ridge requires lambda > 0, got {lambda}")));
    }
    let penalty = PenaltyConfig::ridge(lambda)?;
    let j = gram.dim();
    let a = gram.s_g() + DMatrix::identity(j, j) * lambda;
    let (w, iterations) = simplex_qp_active_set(&a, gram.sigma_g())?;
    Ok(FitResult::new(gram, w, &penalty, iterations, true))
}

/// Minimizes `½ wᵀ A w - bᵀ w` over the simplex for positive definite `A`.
fn simplex_qp_active_set(a: &DMatrix<f64>, b: &DVector<f64>) -> Result<(WeightVector, usize)> {
    let j = b.len();
    let scale = a.amax().max(b.amax()).max(1.0);
    let mut x = vec![1.0 / j as f64; j];
    let mut fixed = vec![false; j];
    let max_iter = 20 * j + 50;
    for iter in 1..=max_iter {
        let free: Vec<usize> = (0..j).filter(|&i| !fixed[i]).collect();
        let (z_free, mu) = face_minimizer_cholesky(a, b, &free)
            .ok_or_else(|| Error::numeric("singular ridge system on the active face"))?;
        let mut z = vec![0.0; j];
        for (k, &i) in free.iter().enumerate() {
            z[i] = z_free[k];
        }
        let p: Vec<f64> = z.iter().zip(&x).map(|(zi, xi)| zi - xi).collect();
        if p.iter().all(|v| v.abs() <= 1e-15) || z.iter().all(|&v| v >= 0.0) {
            // z is feasible: check the multipliers of the fixed coordinates.
            let zv = DVector::from_column_slice(&z);
            let grad = a * &zv - b;
            let worst = (0..j)
                .filter(|&i| fixed[i])
                .map(|i| (i, grad[i] - mu))
                .min_by(|l, r| l.1.total_cmp(&r.1));
            match worst {
                Some((i, nu)) if nu < -1e-12 * scale => {
                    x = z;
                    fixed[i] = false;
                }
                _ => {
                    let clean: Vec<f64> = z.iter().map(|&v| v.max(0.0)).collect();
                    return Ok((WeightVector::normalized(clean), iter));
                }
            }
            continue;
        }
        // Step toward z until the first free coordinate hits zero.
        let mut step = 1.0;
        let mut blocking = None;
        for &i in &free {
            if p[i] < 0.0 {
                let t = -x[i] / p[i];
                if t < step {
                    step = t;
                    blocking = Some(i);
                }
            }
        }
        for i in 0..j {
            x[i] += step * p[i];
        }
        if let Some(i) = blocking {
            x[i] = 0.0;
            fixed[i] = true;
        }
    }
    Err(Error::numeric("ridge active-set method did not terminate"))
}

/// Equality-constrained minimizer on the face spanned by `free`:
/// `A_FF z - b_F = μ1`, `1ᵀz = 1`, via two Cholesky solves.
fn face_minimizer_cholesky(a: &DMatrix<f64>, b: &DVector<f64>, free: &[usize]) -> Option<(Vec<f64>, f64)> {
    let m = free.len();
    let sub = DMatrix::from_fn(m, m, |r, c| a[(free[r], free[c])]);
    let rhs = DVector::from_iterator(m, free.iter().map(|&i| b[i]));
    let chol = sub.cholesky()?;
    let u = chol.solve(&rhs);
    let v = chol.solve(&DVector::from_element(m, 1.0));
    let mu = (1.0 - u.sum()) / v.sum();
    let z = u + v * mu;
    z.iter().all(|x| x.is_finite()).then(|| (z.iter().copied().collect(), mu))
}

/// Minimizer of `F` over the affine hull of the face `{w_j = 0, j ∉ support}`,
/// from the bordered KKT system. On the face the L1 term is constant, so
/// only the `λ(1-α)` curvature enters. Coordinates may come out negative.
fn face_minimizer(gram: &GramSystem, penalty: &PenaltyConfig, support: &[usize]) -> Option<Vec<f64>> {
    let m = support.len();
    let mut k = DMatrix::zeros(m + 1, m + 1);
    let mut rhs = DVector::zeros(m + 1);
    for (r, &i) in support.iter().enumerate() {
        for (c, &l) in support.iter().enumerate() {
            k[(r, c)] = gram.s_g()[(i, l)];
        }
        k[(r, r)] += penalty.l2();
        k[(r, m)] = -1.0;
        k[(m, r)] = 1.0;
        rhs[r] = gram.sigma_g()[i];
    }
    rhs[m] = 1.0;
    let sol = k.lu().solve(&rhs)?;
    let mut z = vec![0.0; gram.dim()];
    for (r, &i) in support.iter().enumerate() {
        if !sol[r].is_finite() {
            return None;
        }
        z[i] = sol[r];
    }
    Some(z)
}

/// Moves from `w` toward the face minimizer `z` as far as feasibility
/// allows; coordinates that hit zero are set to exactly zero.
fn subspace_step(w: &WeightVector, z: &[f64]) -> WeightVector {
    let x = w.as_slice();
    let mut t: f64 = 1.0;
    for (xi, zi) in x.iter().zip(z) {
        if *zi < 0.0 && *xi > 0.0 {
            t = t.min(xi / (xi - zi));
        }
    }
    let y: Vec<f64> = x
        .iter()
        .zip(z)
        .map(|(xi, zi)| {
            if *xi == 0.0 {
                return 0.0;
            }
            let v = xi + t * (zi - xi);
            if v <= 1e-15 * xi.abs().max(1.0) || (*zi < 0.0 && t == xi / (xi - zi)) {
                0.0
            } else {
                v
            }
        })
        .collect();
    WeightVector::normalized(y)
}

/// Consecutive objective increases treated as divergence.
const DIVERGENCE_WINDOW: usize = 50;

/// Elastic-net calibration by LQA projected gradient.
///
/// Each iteration sets the LQA reference `w₀` to the current iterate, takes
/// the step `w - η((S_G + S_{λ,α}(w₀))w - σ_G)` and maps the result back to
/// the simplex by soft-thresholding followed by [`project_simplex`], which
/// produces exact zeros. Coordinates outside the LQA (below `ε_lqa`) carry
/// the one-sided L1 slope `λα`.
///
/// When two consecutive iterates share a support, the iterate is moved
/// toward the minimizer of the objective on that face, stopping at the
/// first coordinate that reaches zero. Convergence is declared when a
/// gradient step changes the weights by less than `tol` in sup-norm.
pub fn solve_enet(gram: &GramSystem, penalty: &PenaltyConfig, opts: &SolverOptions) -> Result<FitResult> {
    opts.validate()?;
    let j = gram.dim();
    if j == 1 {
        return Ok(FitResult::new(gram, WeightVector::uniform(1), penalty, 1, true));
    }
    let mut w = WeightVector::uniform(j);
    let mut eta = match opts.step {
        StepSize::Auto => auto_step(gram, w.as_slice(), penalty, opts.eps_lqa),
        StepSize::Fixed(eta) => eta,
    };
    let mut current = objective_unchecked(gram, &w, penalty);
    let mut rising = 0usize;

    for k in 1..=opts.max_iter {
        let next = match surrogate_step(gram, &w, &w, penalty, eta, opts.eps_lqa) {
            Ok(next) => next,
            Err(Error::DegenerateProjection) => {
                eta *= 0.5;
                continue;
            }
            Err(e) => return Err(e),
        };
        let change = next.sup_distance(&w);
        let value = objective_unchecked(gram, &next, penalty);
        rising = if value > current * (1.0 + 1e-12) + 1e-300 { rising + 1 } else { 0 };
        if rising >= DIVERGENCE_WINDOW {
            return Err(Error::StepSize { eta, iterations: rising });
        }
        let same_support = next.active_set() == w.active_set();
        w = next;
        current = value;
        if change < opts.tol {
            return Ok(FitResult::new(gram, w, penalty, k, true));
        }
        if same_support && rising == 0 {
            if let Some(z) = face_minimizer(gram, penalty, &w.active_set()) {
                let candidate = subspace_step(&w, &z);
                let value = objective_unchecked(gram, &candidate, penalty);
                if value <= current {
                    w = candidate;
                    current = value;
                }
            }
        }
    }
    log::debug!("solve_enet stopped at max_iter = {} without converging", opts.max_iter);
    Ok(FitResult::new(gram, w, penalty, opts.max_iter, false))
}

/// Dispatches on the penalty kind: closed forms for pure and Ridge, LQA
/// iterations otherwise.
pub fn solve(gram: &GramSystem, penalty: &PenaltyConfig, opts: &SolverOptions) -> Result<FitResult> {
    match penalty.kind() {
        PenaltyKind::Pure => solve_pure_with(gram, opts),
        PenaltyKind::Ridge => solve_ridge(gram, penalty.lambda()),
        PenaltyKind::Lasso | PenaltyKind::ElasticNet => solve_enet(gram, penalty, opts),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktEntry {
    pub index: usize,
    pub weight: f64,
    /// `C_j = ∫ g_j (Σ_k w_k g_k - g_0)`.
    pub correlation: f64,
    /// `|C_j| ≤ λα + slack`; always false when `λα = 0`.
    pub within_threshold: bool,
}

/// Soft-threshold sparsity diagnostics of a fitted weight vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktReport {
    pub threshold: f64,
    pub slack: f64,
    pub entries: Vec<KktEntry>,
    /// Largest spread of the penalized gradient over the active set; zero at
    /// a simplex stationary point.
    pub active_gradient_spread: f64,
    /// Smallest gap `∇F_j - μ` over zero weights (`μ` the active-set mean);
    /// nonnegative at a simplex stationary point.
    pub min_inactive_gap: Option<f64>,
}

impl KktReport {
    pub fn zero_entries(&self) -> impl Iterator<Item = &KktEntry> {
        self.entries.iter().filter(|e| e.weight == 0.0)
    }

    pub fn positive_entries(&self) -> impl Iterator<Item = &KktEntry> {
        self.entries.iter().filter(|e| e.weight > 0.0)
    }

    /// Every zero weight satisfies `|C_j| ≤ λα + slack`.
    pub fn zeros_within_threshold(&self) -> bool {
        self.zero_entries().all(|e| e.within_threshold)
    }
}

/// Compares each error correlation `C_j` with the L1 threshold `λα`.
pub fn kkt_sparsity_check(gram: &GramSystem, result: &FitResult, penalty: &PenaltyConfig, slack: f64) -> KktReport {
    let w = result.weights.as_slice();
    let c = gram.error_correlations(w);
    let threshold = penalty.l1();
    let entries = (0..w.len())
        .map(|j| KktEntry {
            index: j,
            weight: w[j],
            correlation: c[j],
            within_threshold: threshold > 0.0 && c[j].abs() <= threshold + slack,
        })
        .collect();
    let grad: Vec<f64> = (0..w.len()).map(|j| c[j] + penalty.l1() + penalty.l2() * w[j]).collect();
    let active: Vec<usize> = result.weights.active_set();
    let mu = active.iter().map(|&j| grad[j]).sum::<f64>() / active.len() as f64;
    let active_gradient_spread = active.iter().map(|&j| (grad[j] - mu).abs()).fold(0.0, f64::max);
    let min_inactive_gap = (0..w.len()).filter(|&j| w[j] == 0.0).map(|j| grad[j] - mu).reduce(f64::min);
    KktReport { threshold, slack, entries, active_gradient_spread, min_inactive_gap }
}
