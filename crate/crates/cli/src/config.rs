//! TOML run configuration. Every key has a matching command-line flag and
//! flags take precedence.
//!
//! ```toml
//! [grid]
//! nodes = 1000
//! trim = 0.001
//!
//! [penalty]
//! kind = "enet"          # restricts the tuning grid
//! lambda = 0.1
//! alpha = 0.5
//! tune = false
//! lambda_min = 1e-4
//! lambda_max = 10.0
//! lambda_count = 25
//! alpha_step = 0.05
//!
//! [solver]
//! tol = 1e-9
//! max_iter = 10000
//! step = "auto"          # or a number
//! eps_lqa = 1e-8
//!
//! [experiment]
//! family = "normal"
//! shape = 1.0
//! J = 5
//! n = 100
//! B = 200
//! seed = 20240607
//! methods = ["pure", "lasso", "ridge", "enet"]
//! folds = 5
//!
//! [sequential]
//! delta = 0.2            # or "auto"
//! delta_candidates = [0.0, 0.1, 0.2]
//! rho = 0.5
//! warmup = 5
//! zeros = "blank"
//!
//! [risk]
//! levels = [0.9, 0.95, 0.99]
//!
//! [output]
//! dir = "results"
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub grid: GridSection,
    #[serde(default)]
    pub penalty: PenaltySection,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub experiment: ExperimentSection,
    #[serde(default)]
    pub sequential: SequentialSection,
    #[serde(default)]
    pub risk: RiskSection,
    #[serde(default)]
    pub output: OutputSection,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSection {
    pub nodes: Option<usize>,
    pub trim: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PenaltySection {
    pub kind: Option<String>,
    pub lambda: Option<f64>,
    pub alpha: Option<f64>,
    pub tune: Option<bool>,
    pub lambda_min: Option<f64>,
    pub lambda_max: Option<f64>,
    pub lambda_count: Option<usize>,
    pub alpha_step: Option<f64>,
}

/// Fixed step size or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum StepValue {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub tol: Option<f64>,
    pub max_iter: Option<usize>,
    pub step: Option<StepValue>,
    pub eps_lqa: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSection {
    pub family: Option<String>,
    pub shape: Option<f64>,
    #[serde(rename = "J")]
    pub models: Option<usize>,
    #[serde(rename = "n")]
    pub sample_size: Option<usize>,
    #[serde(rename = "B")]
    pub replications: Option<usize>,
    pub seed: Option<u64>,
    pub methods: Option<Vec<String>>,
    pub folds: Option<usize>,
    pub c: Option<f64>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    pub a1: Option<f64>,
    pub b1: Option<f64>,
    pub a2: Option<f64>,
    pub b2: Option<f64>,
}

/// Fixed `δ` or the string `"auto"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum DeltaValue {
    Fixed(f64),
    Named(String),
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SequentialSection {
    pub delta: Option<DeltaValue>,
    pub delta_candidates: Option<Vec<f64>>,
    pub rho: Option<f64>,
    pub warmup: Option<usize>,
    pub zeros: Option<String>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskSection {
    pub levels: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub dir: Option<PathBuf>,
}

impl RunConfig {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        toml::from_str(text).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::Config { path: path.to_path_buf(), message: e.to_string() })?;
        Self::parse(&text, path)
    }
}
