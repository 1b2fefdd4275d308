//! Model spec files and plain sample files.
//!
//! A model spec lists one model per line:
//!
//! ```text
//! normal 0 1
//! weibull 1.5 2
//! exponential 1
//! uniform 0 1
//! pointmass 3
//! sample losses.txt
//! ```
//!
//! Blank lines and text after `#` are ignored. Sample paths are resolved
//! relative to the spec file. A sample file holds numbers separated by
//! whitespace or commas, optionally preceded by a non-numeric header line.

use std::fs;
use std::path::{Path, PathBuf};

use wassmix::{Family, QuantileFunction};

use crate::error::{CliError, Context, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum ModelSpec {
    Parametric(Family),
    Sample(PathBuf),
}

impl ModelSpec {
    pub fn quantile(&self) -> Result<QuantileFunction> {
        match self {
            ModelSpec::Parametric(f) => QuantileFunction::parametric(*f).context("model spec"),
            ModelSpec::Sample(path) => {
                let sample = read_sample(path)?;
                wassmix::empirical_quantile(&sample).context(path.display().to_string())
            }
        }
    }
}

fn strip_comment(line: &str) -> &str {
    line.split('#').next().unwrap_or("").trim()
}

/// Parses a single model line such as `normal 0 1`; `base` resolves
/// relative sample paths.
pub fn parse_model_line(line: &str, base: &Path) -> std::result::Result<ModelSpec, String> {
    let mut tokens = line.split_whitespace();
    let name = tokens.next().ok_or("empty model line")?.to_ascii_lowercase();
    if name == "sample" {
        let rest: Vec<&str> = tokens.collect();
        if rest.is_empty() {
            return Err("`sample` needs a file path".into());
        }
        return Ok(ModelSpec::Sample(base.join(rest.join(" "))));
    }
    let params = tokens
        .map(|t| t.parse::<f64>().map_err(|_| format!("`{t}` is not a number")))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let expect = |n: usize| {
        if params.len() == n {
            Ok(())
        } else {
            Err(format!("`{name}` takes {n} parameter(s), got {}", params.len()))
        }
    };
    let family = match name.as_str() {
        "normal" => {
            expect(2)?;
            Family::Normal { mean: params[0], sd: params[1] }
        }
        "weibull" => {
            expect(2)?;
            Family::Weibull { shape: params[0], scale: params[1] }
        }
        "exponential" => {
            expect(1)?;
            Family::Exponential { rate: params[0] }
        }
        "uniform" => {
            expect(2)?;
            Family::Uniform { low: params[0], high: params[1] }
        }
        "pointmass" => {
            expect(1)?;
            Family::PointMass { at: params[0] }
        }
        other => {
            return Err(format!(
                "unknown model `{other}`; expected normal, weibull, exponential, uniform, pointmass or sample"
            ))
        }
    };
    family.validate().map_err(|e| e.to_string())?;
    Ok(ModelSpec::Parametric(family))
}

pub fn parse_model_spec(text: &str, path: &Path) -> Result<Vec<ModelSpec>> {
    let base = path.parent().unwrap_or(Path::new("."));
    let mut models = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let model = parse_model_line(line, base).map_err(|message| CliError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message,
        })?;
        models.push(model);
    }
    if models.is_empty() {
        return Err(CliError::Parse { path: path.to_path_buf(), line: 0, message: "no models listed".into() });
    }
    Ok(models)
}

pub fn read_model_spec(path: &Path) -> Result<Vec<ModelSpec>> {
    let text = read_to_string(path)?;
    parse_model_spec(&text, path)
}

pub fn parse_sample(text: &str, path: &Path) -> Result<Vec<f64>> {
    let mut values = Vec::new();
    let mut seen_data = false;
    for (i, raw) in text.lines().enumerate() {
        let line = strip_comment(raw);
        if line.is_empty() {
            continue;
        }
        let tokens: Vec<&str> = line.split(|c: char| c == ',' || c.is_whitespace()).filter(|t| !t.is_empty()).collect();
        let parsed: Vec<Option<f64>> = tokens.iter().map(|t| t.parse::<f64>().ok()).collect();
        if !seen_data && parsed.iter().all(Option::is_none) {
            seen_data = true;
            continue;
        }
        seen_data = true;
        for (token, value) in tokens.iter().zip(parsed) {
            match value {
                Some(v) if v.is_finite() => values.push(v),
                _ => {
                    return Err(CliError::Parse {
                        path: path.to_path_buf(),
                        line: i + 1,
                        message: format!("`{token}` is not a finite number"),
                    })
                }
            }
        }
    }
    if values.is_empty() {
        return Err(CliError::Parse { path: path.to_path_buf(), line: 0, message: "sample is empty".into() });
    }
    Ok(values)
}

pub fn read_sample(path: &Path) -> Result<Vec<f64>> {
    let text = read_to_string(path)?;
    parse_sample(&text, path)
}

fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })
}
