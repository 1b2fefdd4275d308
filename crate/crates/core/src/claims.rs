//! Claims panels: per-period loss samples and their `period,loss` CSV form.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

/// Losses observed in one period.
#[derive(Debug, Clone, PartialEq)]
pub struct Period {
    pub label: String,
    pub losses: Vec<f64>,
}

/// Periods in ascending label order, each with at least one positive loss.
#[derive(Debug, Clone, PartialEq)]
pub struct ClaimsPanel {
    periods: Vec<Period>,
}

impl ClaimsPanel {
    /// Groups `(label, loss)` pairs by label. Labels are ordered numerically
    /// when all of them parse as integers, lexicographically otherwise.
    pub fn from_rows<I>(rows: I) -> Result<Self>
    where
        I: IntoIterator<Item = (String, f64)>,
    {
        let mut groups: BTreeMap<String, Vec<f64>> = BTreeMap::new();
        for (label, loss) in rows {
            if !(loss.is_finite() && loss > 0.0) {
                return Err(Error::invalid(format!("loss {loss} in period {label} is not positive")));
            }
            groups.entry(label).or_default().push(loss);
        }
        let mut periods: Vec<Period> = groups.into_iter().map(|(label, losses)| Period { label, losses }).collect();
        if periods.is_empty() {
            return Err(Error::invalid("claims panel has no periods"));
        }
        if periods.iter().all(|p| p.label.trim().parse::<i64>().is_ok()) {
            periods.sort_by_key(|p| p.label.trim().parse::<i64>().expect("checked above"));
        }
        Ok(Self { periods })
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.periods.iter().map(|p| p.label.as_str()).collect()
    }
}

fn format_error(line: Option<usize>, message: impl Into<String>) -> Error {
    Error::Format { line, message: message.into() }
}

/// Parses a `period,loss` CSV stream.
pub fn read_claims<R: Read>(reader: R) -> Result<ClaimsPanel> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).trim(csv::Trim::All).from_reader(reader);
    let mut records = rdr.records();
    let header = match records.next() {
        None => return Err(format_error(None, "empty claims file")),
        Some(r) => r.map_err(|e| format_error(Some(1), e.to_string()))?,
    };
    if header.len() != 2 || &header[0] != "period" || &header[1] != "loss" {
        return Err(format_error(Some(1), "expected header `period,loss`"));
    }
    let mut rows = Vec::new();
    for record in records {
        let record = record.map_err(|e| format_error(e.position().map(|p| p.line() as usize), e.to_string()))?;
        let line = record.position().map(|p| p.line() as usize);
        if record.len() != 2 {
            return Err(format_error(line, format!("expected 2 fields, found {}", record.len())));
        }
        let loss: f64 = record[1]
            .parse()
            .map_err(|_| format_error(line, format!("loss `{}` is not a number", &record[1])))?;
        if !(loss.is_finite() && loss > 0.0) {
            return Err(format_error(line, format!("loss {loss} is not positive")));
        }
        if record[0].is_empty() {
            return Err(format_error(line, "empty period label"));
        }
        rows.push((record[0].to_string(), loss));
    }
    if rows.is_empty() {
        return Err(format_error(None, "claims file has a header but no rows"));
    }
    ClaimsPanel::from_rows(rows)
}

pub fn load_claims(path: impl AsRef<Path>) -> Result<ClaimsPanel> {
    read_claims(File::open(path)?)
}

pub fn write_claims<W: Write>(panel: &ClaimsPanel, writer: W) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(writer);
    let io = |e: csv::Error| Error::Io(e.into());
    wtr.write_record(["period", "loss"]).map_err(io)?;
    for period in panel.periods() {
        for loss in &period.losses {
            wtr.write_record([period.label.as_str(), &loss.to_string()]).map_err(io)?;
        }
    }
    wtr.flush()?;
    Ok(())
}

/// Descriptive statistics of one period's losses.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PeriodSummary {
    pub label: String,
    pub n: usize,
    pub mean: f64,
    /// Sample standard deviation (divisor `n - 1`).
    pub sd: f64,
    /// Moment skewness `m₃ / m₂^{3/2}`.
    pub skewness: f64,
    /// Moment kurtosis `m₄ / m₂²` (not excess).
    pub kurtosis: f64,
    pub median: f64,
    /// `(level, quantile)` pairs, linearly interpolated between order
    /// statistics.
    pub quantiles: Vec<(f64, f64)>,
    pub max: f64,
}

pub const SUMMARY_LEVELS: [f64; 6] = [0.75, 0.90, 0.95, 0.975, 0.99, 0.995];

/// Interpolated sample quantile `x_(⌊h⌋) + (h - ⌊h⌋)(x_(⌊h⌋+1) - x_(⌊h⌋))`
/// with `h = (n - 1) p`, on sorted data.
pub fn interpolated_quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn summarize(period: &Period) -> PeriodSummary {
    let mut x = period.losses.clone();
    x.sort_by(f64::total_cmp);
    let n = x.len();
    let nf = n as f64;
    let mean = x.iter().sum::<f64>() / nf;
    let moment = |k: i32| x.iter().map(|v| (v - mean).powi(k)).sum::<f64>() / nf;
    let (m2, m3, m4) = (moment(2), moment(3), moment(4));
    let sd = if n > 1 { (m2 * nf / (nf - 1.0)).sqrt() } else { 0.0 };
    let (skewness, kurtosis) = if m2 > 0.0 { (m3 / m2.powf(1.5), m4 / (m2 * m2)) } else { (0.0, 0.0) };
    PeriodSummary {
        label: period.label.clone(),
        n,
        mean,
        sd,
        skewness,
        kurtosis,
        median: interpolated_quantile(&x, 0.5),
        quantiles: SUMMARY_LEVELS.iter().map(|&p| (p, interpolated_quantile(&x, p))).collect(),
        max: x[n - 1],
    }
}
