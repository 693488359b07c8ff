//! Series containers, instance normalization and trimming.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Population standard deviations below this are treated as zero variance.
pub const STD_FLOOR: f64 = 1e-8;

/// A nonempty, finite, univariate sequence of observations.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct TimeSeries(Vec<f64>);

impl TimeSeries {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        check_finite(&values)?;
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for TimeSeries {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for TimeSeries {
    type Error = Error;

    fn try_from(values: Vec<f64>) -> Result<Self> {
        Self::new(values)
    }
}

impl From<TimeSeries> for Vec<f64> {
    fn from(series: TimeSeries) -> Self {
        series.0
    }
}

/// A `T x C` block of observations stored channel-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultivariateSeries {
    channels: Vec<TimeSeries>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    channel_names: Option<Vec<String>>,
}

impl MultivariateSeries {
    pub fn new(channels: Vec<TimeSeries>) -> Result<Self> {
        let Some(first) = channels.first() else {
            return Err(Error::ShapeMismatch("series has no channels".into()));
        };
        let len = first.len();
        if let Some((c, bad)) = channels.iter().enumerate().find(|(_, ch)| ch.len() != len) {
            return Err(Error::ShapeMismatch(format!(
                "channel {c} has length {}, expected {len}",
                bad.len()
            )));
        }
        Ok(Self {
            channels,
            channel_names: None,
        })
    }

    pub fn from_columns(columns: Vec<Vec<f64>>) -> Result<Self> {
        let channels = columns
            .into_iter()
            .map(TimeSeries::new)
            .collect::<Result<Vec<_>>>()?;
        Self::new(channels)
    }

    pub fn with_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.channels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} channel names for {} channels",
                names.len(),
                self.channels.len()
            )));
        }
        self.channel_names = Some(names);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.channels[0].len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn num_channels(&self) -> usize {
        self.channels.len()
    }

    pub fn channels(&self) -> &[TimeSeries] {
        &self.channels
    }

    pub fn channel(&self, c: usize) -> &TimeSeries {
        &self.channels[c]
    }

    pub fn channel_names(&self) -> Option<&[String]> {
        self.channel_names.as_deref()
    }

    /// Display label for channel `c`: its name when known, otherwise the index.
    pub fn channel_label(&self, c: usize) -> String {
        match &self.channel_names {
            Some(names) => names[c].clone(),
            None => c.to_string(),
        }
    }

    /// Applies `f` to every channel, keeping names.
    pub fn map_channels<F>(&self, mut f: F) -> Result<Self>
    where
        F: FnMut(&[f64]) -> Result<Vec<f64>>,
    {
        let columns = self
            .channels
            .iter()
            .map(|c| f(c))
            .collect::<Result<Vec<_>>>()?;
        let out = Self::from_columns(columns)?;
        match &self.channel_names {
            Some(names) => out.with_names(names.clone()),
            None => Ok(out),
        }
    }
}

/// Mean and divisor used by instance normalization.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormStats {
    pub mean: f64,
    /// Divisor actually applied; 1.0 when the window had (near) zero variance.
    pub std: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    pub name: String,
    pub granularity: String,
    pub series: MultivariateSeries,
}

impl Dataset {
    pub fn new(name: impl Into<String>, series: MultivariateSeries) -> Self {
        Self {
            name: name.into(),
            granularity: String::new(),
            series,
        }
    }

    pub fn with_granularity(mut self, granularity: impl Into<String>) -> Self {
        self.granularity = granularity.into();
        self
    }

    /// Keeps the first `fraction` of every channel (at least one observation).
    pub fn head_fraction(&self, fraction: f64) -> Result<Dataset> {
        let keep = ((self.series.len() as f64 * fraction).floor() as usize).max(1);
        let series = self.series.map_channels(|c| Ok(c[..keep].to_vec()))?;
        Ok(Dataset {
            name: self.name.clone(),
            granularity: self.granularity.clone(),
            series,
        })
    }

    /// Splits every channel at `floor(fraction * len)` into a training head
    /// and a held-out tail; both keep the dataset name.
    pub fn split_fraction(&self, fraction: f64) -> Result<(Dataset, Dataset)> {
        let len = self.series.len();
        let cut = (len as f64 * fraction).floor() as usize;
        if cut == 0 || cut >= len {
            return Err(Error::InsufficientHistory {
                needed: 2,
                available: len,
            });
        }
        let part = |range: std::ops::Range<usize>| -> Result<Dataset> {
            Ok(Dataset {
                name: self.name.clone(),
                granularity: self.granularity.clone(),
                series: self.series.map_channels(|c| Ok(c[range.clone()].to_vec()))?,
            })
        };
        Ok((part(0..cut)?, part(cut..len)?))
    }
}

fn check_finite(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::EmptySeries);
    }
    match x.iter().position(|v| !v.is_finite()) {
        Some(index) => Err(Error::NonFinite { index }),
        None => Ok(()),
    }
}

/// Mean and population standard deviation with the zero-variance fallback applied.
pub fn norm_stats(x: &[f64]) -> Result<NormStats> {
    check_finite(x)?;
    let n = x.len() as f64;
    let mean = x.iter().sum::<f64>() / n;
    let var = x.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let std = var.sqrt();
    Ok(NormStats {
        mean,
        std: if std < STD_FLOOR { 1.0 } else { std },
    })
}

/// Standardizes `x` by its own mean and population standard deviation.
pub fn normalize(x: &[f64]) -> Result<(Vec<f64>, NormStats)> {
    let stats = norm_stats(x)?;
    Ok((apply_stats(x, &stats), stats))
}

/// `(x - mean) / std` with externally supplied statistics.
pub fn apply_stats(x: &[f64], stats: &NormStats) -> Vec<f64> {
    x.iter().map(|v| (v - stats.mean) / stats.std).collect()
}

pub fn denormalize(x_norm: &[f64], stats: &NormStats) -> Vec<f64> {
    x_norm.iter().map(|v| stats.std * v + stats.mean).collect()
}

/// The final `n` observations of `x`.
pub fn trim_to_last(x: &[f64], n: usize) -> Result<Vec<f64>> {
    if x.len() < n || x.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: n.max(1),
            available: x.len(),
        });
    }
    Ok(x[x.len() - n..].to_vec())
}

/// The first `n` observations of `x`.
pub fn trim_to_first(x: &[f64], n: usize) -> Result<Vec<f64>> {
    if x.len() < n || x.is_empty() {
        return Err(Error::InsufficientHistory {
            needed: n.max(1),
            available: x.len(),
        });
    }
    Ok(x[..n].to_vec())
}
