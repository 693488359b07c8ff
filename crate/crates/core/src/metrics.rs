//! Point-forecast error metrics. Multivariate scores average uniformly over channels.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::MultivariateSeries;

/// Denominators below this are treated as zero.
pub const ZERO_TOL: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Mse,
    Smape,
    Mape,
}

impl Metric {
    pub const ALL: [Metric; 3] = [Metric::Mse, Metric::Smape, Metric::Mape];

    pub fn name(self) -> &'static str {
        match self {
            Metric::Mse => "mse",
            Metric::Smape => "smape",
            Metric::Mape => "mape",
        }
    }

    pub fn evaluate(self, truth: &MultivariateSeries, pred: &MultivariateSeries) -> Result<f64> {
        match self {
            Metric::Mse => mse(truth, pred),
            Metric::Smape => smape(truth, pred),
            Metric::Mape => mape(truth, pred),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mse" => Ok(Metric::Mse),
            "smape" => Ok(Metric::Smape),
            "mape" => Ok(Metric::Mape),
            other => Err(Error::InvalidConfig(format!("unknown metric {other:?}"))),
        }
    }
}

fn check_shape(truth: &MultivariateSeries, pred: &MultivariateSeries) -> Result<()> {
    if truth.num_channels() != pred.num_channels() || truth.len() != pred.len() {
        return Err(Error::ShapeMismatch(format!(
            "truth is {}x{}, prediction is {}x{}",
            truth.len(),
            truth.num_channels(),
            pred.len(),
            pred.num_channels()
        )));
    }
    Ok(())
}

fn check_len(truth: &[f64], pred: &[f64]) -> Result<()> {
    if truth.len() != pred.len() || truth.is_empty() {
        return Err(Error::ShapeMismatch(format!(
            "truth has {} points, prediction has {}",
            truth.len(),
            pred.len()
        )));
    }
    Ok(())
}

pub fn mse_1d(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_len(truth, pred)?;
    let sum: f64 = truth.iter().zip(pred).map(|(y, p)| (y - p) * (y - p)).sum();
    Ok(sum / truth.len() as f64)
}

pub fn smape_1d(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_len(truth, pred)?;
    let sum: f64 = truth
        .iter()
        .zip(pred)
        .map(|(y, p)| {
            let denom = y.abs() + p.abs();
            if denom < ZERO_TOL {
                0.0
            } else {
                (y - p).abs() / denom
            }
        })
        .sum();
    Ok(200.0 * sum / truth.len() as f64)
}

/// MAPE over entries with nonzero truth; `None` when every truth entry is zero.
fn mape_terms(truth: &[f64], pred: &[f64]) -> Option<f64> {
    let (sum, count) = truth
        .iter()
        .zip(pred)
        .filter(|(y, _)| y.abs() >= ZERO_TOL)
        .fold((0.0, 0usize), |(s, n), (y, p)| (s + (y - p).abs() / y.abs(), n + 1));
    (count > 0).then(|| 100.0 * sum / count as f64)
}

pub fn mape_1d(truth: &[f64], pred: &[f64]) -> Result<f64> {
    check_len(truth, pred)?;
    mape_terms(truth, pred).ok_or(Error::UndefinedMape)
}

pub fn mse(truth: &MultivariateSeries, pred: &MultivariateSeries) -> Result<f64> {
    check_shape(truth, pred)?;
    let mut total = 0.0;
    for (t, p) in truth.channels().iter().zip(pred.channels()) {
        total += mse_1d(t, p)?;
    }
    Ok(total / truth.num_channels() as f64)
}

pub fn smape(truth: &MultivariateSeries, pred: &MultivariateSeries) -> Result<f64> {
    check_shape(truth, pred)?;
    let mut total = 0.0;
    for (t, p) in truth.channels().iter().zip(pred.channels()) {
        total += smape_1d(t, p)?;
    }
    Ok(total / truth.num_channels() as f64)
}

/// Channels whose truth is entirely zero are left out of the channel average.
pub fn mape(truth: &MultivariateSeries, pred: &MultivariateSeries) -> Result<f64> {
    check_shape(truth, pred)?;
    let scores: Vec<f64> = truth
        .channels()
        .iter()
        .zip(pred.channels())
        .filter_map(|(t, p)| mape_terms(t, p))
        .collect();
    if scores.is_empty() {
        return Err(Error::UndefinedMape);
    }
    Ok(scores.iter().sum::<f64>() / scores.len() as f64)
}
