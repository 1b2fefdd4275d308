//! Inner-product coefficients of the barycenter calibration problem.
//!
//! For models `g_1..g_J` and target `g_0` the squared distance of the
//! barycenter `Σ w_j g_j` to the target is the quadratic
//! `wᵀ S_G w - 2 σ_Gᵀ w + σ₀²`, with
//! `(S_G)_{jl} = ⟨g_j, g_l⟩`, `(σ_G)_j = ⟨g_j, g_0⟩`, `σ₀² = ⟨g_0, g_0⟩`.
//! On the simplex the same quadratic equals `wᵀ S̃ w` where
//! `S̃_{jl} = ⟨g_j - g_0, g_l - g_0⟩`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};
use crate::quantile::{Grid, QuantileFunction};
use crate::solver::WeightVector;

/// Relative eigenvalue floor below which a matrix is declared indefinite.
pub const PSD_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct GramSystem {
    s_g: DMatrix<f64>,
    sigma_g: DVector<f64>,
    sigma0_sq: f64,
    centered: DMatrix<f64>,
}

impl GramSystem {
    /// Validates and assembles a Gram system from raw coefficients. The
    /// centered matrix is derived from the raw entries.
    pub fn new(s_g: DMatrix<f64>, sigma_g: DVector<f64>, sigma0_sq: f64) -> Result<Self> {
        let j = s_g.nrows();
        if j == 0 || s_g.ncols() != j || sigma_g.len() != j {
            return Err(Error::invalid(format!(
                "gram dimensions disagree: S_G is {}x{}, sigma_G has {}",
                s_g.nrows(),
                s_g.ncols(),
                sigma_g.len()
            )));
        }
        if s_g.iter().chain(sigma_g.iter()).any(|x| !x.is_finite()) || !sigma0_sq.is_finite() {
            return Err(Error::numeric("gram coefficients must be finite"));
        }
        if sigma0_sq < 0.0 {
            return Err(Error::numeric(format!("sigma0^2 = {sigma0_sq} is negative")));
        }
        let scale = s_g.amax().max(1.0);
        for r in 0..j {
            for c in 0..r {
                if (s_g[(r, c)] - s_g[(c, r)]).abs() > 1e-12 * scale {
                    return Err(Error::numeric(format!("S_G is not symmetric at ({r}, {c})")));
                }
            }
        }
        let centered = DMatrix::from_fn(j, j, |r, c| s_g[(r, c)] - sigma_g[r] - sigma_g[c] + sigma0_sq);
        let gram = Self { s_g, sigma_g, sigma0_sq, centered };
        if !is_psd(&gram.s_g) {
            return Err(Error::numeric("S_G is not positive semidefinite"));
        }
        if !is_psd(&gram.centered) {
            return Err(Error::numeric("centered Gram matrix is not positive semidefinite"));
        }
        Ok(gram)
    }

    pub fn dim(&self) -> usize {
        self.sigma_g.len()
    }

    pub fn s_g(&self) -> &DMatrix<f64> {
        &self.s_g
    }

    pub fn sigma_g(&self) -> &DVector<f64> {
        &self.sigma_g
    }

    pub fn sigma0_sq(&self) -> f64 {
        self.sigma0_sq
    }

    pub fn centered(&self) -> &DMatrix<f64> {
        &self.centered
    }

    /// Squared W₂ distance of the barycenter at `w` to the target,
    /// `wᵀ S̃ w`, clamped at zero against rounding.
    pub fn fit_error(&self, w: &WeightVector) -> f64 {
        let v = DVector::from_column_slice(w.as_slice());
        (v.dot(&(&self.centered * &v))).max(0.0)
    }

    /// Error correlations `C = S_G w - σ_G`, i.e.
    /// `C_j = ∫ g_j (Σ_k w_k g_k - g_0)`.
    pub fn error_correlations(&self, w: &[f64]) -> DVector<f64> {
        let v = DVector::from_column_slice(w);
        &self.s_g * v - &self.sigma_g
    }
}

/// Symmetric matrix PSD test with eigenvalue floor `-PSD_TOLERANCE * trace`.
pub fn is_psd(m: &DMatrix<f64>) -> bool {
    let trace = m.trace().abs().max(f64::MIN_POSITIVE);
    let sym = (m + m.transpose()) * 0.5;
    let eig = SymmetricEigen::new(sym);
    eig.eigenvalues.iter().all(|&l| l >= -PSD_TOLERANCE * trace)
}

/// Model quantiles tabulated on a grid, reused across many targets and fits.
#[derive(Debug, Clone)]
pub struct EvaluatedModels {
    grid: Grid,
    values: Vec<Vec<f64>>,
    s_g: DMatrix<f64>,
}

impl EvaluatedModels {
    pub fn new(models: &[QuantileFunction], grid: &Grid) -> Result<Self> {
        if models.is_empty() {
            return Err(Error::invalid("at least one model is required"));
        }
        let values = models.iter().map(|q| q.values_on(grid)).collect::<Result<Vec<_>>>()?;
        Ok(Self::from_values(values, *grid))
    }

    pub fn from_values(values: Vec<Vec<f64>>, grid: Grid) -> Self {
        let j = values.len();
        let mut s_g = DMatrix::zeros(j, j);
        for r in 0..j {
            for c in 0..=r {
                let v = grid.inner(&values[r], &values[c]);
                s_g[(r, c)] = v;
                s_g[(c, r)] = v;
            }
        }
        Self { grid, values, s_g }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    pub fn target_values(&self, target: &QuantileFunction) -> Result<Vec<f64>> {
        target.values_on(&self.grid)
    }

    /// Gram system of these models against a tabulated target.
    pub fn gram(&self, target: &[f64]) -> Result<GramSystem> {
        let sigma = DVector::from_iterator(self.values.len(), self.values.iter().map(|v| self.grid.inner(v, target)));
        let sigma0 = self.grid.inner(target, target);
        GramSystem::new(self.s_g.clone(), sigma, sigma0)
    }

    /// Barycenter values at the grid nodes.
    pub fn combine(&self, w: &WeightVector) -> Vec<f64> {
        let mut out = vec![0.0; self.grid.len()];
        for (vals, &wj) in self.values.iter().zip(w.as_slice()) {
            if wj != 0.0 {
                for (o, v) in out.iter_mut().zip(vals) {
                    *o += wj * v;
                }
            }
        }
        out
    }

    /// Squared W₂ distance from the barycenter at `w` to a tabulated target.
    pub fn w2_squared(&self, w: &WeightVector, target: &[f64]) -> f64 {
        let bary = self.combine(w);
        self.grid.step() * bary.iter().zip(target).map(|(a, b)| (a - b) * (a - b)).sum::<f64>()
    }
}

/// Midpoint-quadrature Gram system of `models` against `target`.
pub fn gram_system(models: &[QuantileFunction], target: &QuantileFunction, grid: &Grid) -> Result<GramSystem> {
    let evaluated = EvaluatedModels::new(models, grid)?;
    let t = evaluated.target_values(target)?;
    evaluated.gram(&t)
}
