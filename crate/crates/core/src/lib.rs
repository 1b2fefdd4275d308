//! Model averaging of one-dimensional probability models through
//! penalized Wasserstein barycenters.
//!
//! On the real line the quadratic Wasserstein distance is the L² distance
//! between quantile functions, and the barycenter of a model set is the
//! weighted average of its quantile functions. Calibrating the barycentric
//! weights to a target therefore reduces to a least-squares problem over the
//! unit simplex, optionally penalized with an elastic-net term.
//!
//! Module map:
//! - [`quantile`]: quantile functions, quadrature grids, W₂ distances.
//! - [`gram`]: inner-product coefficients that define the calibration problem.
//! - [`solver`]: simplex-constrained solvers (pure, Ridge, LQA elastic net).
//! - [`tuning`]: grid search over penalty strength.
//! - [`risk`]: Value-at-Risk and Expected Shortfall.
//! - [`claims`]: claims panels and their CSV ingestion.
//! - [`sequential`]: one-step-ahead claims-distribution forecasting.
//! - [`simharness`]: Monte Carlo benchmark experiments.

pub mod claims;
pub mod error;
pub mod gram;
pub mod quantile;
pub mod risk;
pub mod sequential;
pub mod simharness;
pub mod solver;
pub mod tuning;

pub use error::{Error, Result};
pub use gram::{gram_system, EvaluatedModels, GramSystem};
pub use quantile::{barycenter_quantile, empirical_quantile, wasserstein2, Family, Grid, QuantileFunction};
pub use solver::{FitResult, PenaltyConfig, PenaltyKind, SolverOptions, StepSize, WeightVector};
