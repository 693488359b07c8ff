use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;
use crate::series::{Dataset, MultivariateSeries};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SyntheticKind {
    Sine,
    Sawtooth,
    TrendSine,
    RandomWalk,
    Ar1,
}

impl std::str::FromStr for SyntheticKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s.replace('-', "_").as_str() {
            "sine" => Self::Sine,
            "sawtooth" => Self::Sawtooth,
            "trend_sine" => Self::TrendSine,
            "random_walk" => Self::RandomWalk,
            "ar1" => Self::Ar1,
            other => return Err(Error::InvalidConfig(format!("unknown synthetic kind {other:?}"))),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticFamilySpec {
    pub name: String,
    pub kind: SyntheticKind,
    #[serde(default = "default_period")]
    pub period: usize,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
    #[serde(default)]
    pub noise_std: f64,
    pub length: usize,
    #[serde(default = "default_channels")]
    pub channels: usize,
    #[serde(default)]
    pub seed: u64,
}

fn default_period() -> usize {
    12
}

fn default_amplitude() -> f64 {
    1.0
}

fn default_channels() -> usize {
    1
}

impl SyntheticFamilySpec {
    pub fn new(name: impl Into<String>, kind: SyntheticKind, period: usize, length: usize) -> Self {
        Self {
            name: name.into(),
            kind,
            period,
            amplitude: default_amplitude(),
            noise_std: 0.0,
            length,
            channels: default_channels(),
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.length == 0 || self.channels == 0 || self.period == 0 {
            return Err(Error::InvalidConfig(format!(
                "synthetic family {}: length, channels and period must be >= 1",
                self.name
            )));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) || !self.amplitude.is_finite() {
            return Err(Error::InvalidConfig(format!(
                "synthetic family {}: noise_std must be >= 0 and amplitude finite",
                self.name
            )));
        }
        Ok(())
    }
}

/// AR(1) coefficient of the `ar1` family.
pub const AR1_PHI: f64 = 0.9;
/// Per-step drift of the `trend_sine` family.
pub const TREND_SLOPE: f64 = 0.01;

/// Seeded synthetic dataset; channels are independent draws of the family.
pub fn generate_synthetic(spec: &SyntheticFamilySpec) -> Result<Dataset> {
    spec.validate()?;
    let mut r = rng::seeded(spec.seed);
    let noise = Normal::new(0.0, spec.noise_std).expect("validated noise_std");
    let p = spec.period as f64;
    let a = spec.amplitude;
    let columns = (0..spec.channels)
        .map(|_| {
            let mut eps = || if spec.noise_std > 0.0 { noise.sample(&mut r) } else { 0.0 };
            match spec.kind {
                SyntheticKind::Sine | SyntheticKind::TrendSine => (0..spec.length)
                    .map(|t| {
                        let trend = if spec.kind == SyntheticKind::TrendSine { TREND_SLOPE * t as f64 } else { 0.0 };
                        // phase from t mod period keeps noiseless series exactly periodic
                        let phase = (t % spec.period) as f64 / p;
                        a * (2.0 * std::f64::consts::PI * phase).sin() + trend + eps()
                    })
                    .collect::<Vec<_>>(),
                SyntheticKind::Sawtooth => (0..spec.length)
                    .map(|t| a * ((t % spec.period) as f64 / p) + eps())
                    .collect(),
                SyntheticKind::RandomWalk => {
                    // x[0] = 0 and x[t] sums t increments, so Var x[t] = t * noise_std^2
                    let mut x = 0.0;
                    (0..spec.length)
                        .map(|t| {
                            if t > 0 {
                                x += eps();
                            }
                            x
                        })
                        .collect()
                }
                SyntheticKind::Ar1 => {
                    let stationary = spec.noise_std / (1.0 - AR1_PHI * AR1_PHI).sqrt();
                    let mut x = if stationary > 0.0 {
                        Normal::new(0.0, stationary).expect("finite").sample(&mut r)
                    } else {
                        0.0
                    };
                    let mut out = Vec::with_capacity(spec.length);
                    for t in 0..spec.length {
                        if t > 0 {
                            x = AR1_PHI * x + if spec.noise_std > 0.0 { noise.sample(&mut r) } else { 0.0 };
                        }
                        out.push(x);
                    }
                    out
                }
            }
        })
        .collect();
    let series = MultivariateSeries::from_columns(columns)?;
    Ok(Dataset::new(spec.name.clone(), series).with_granularity("synthetic"))
}

/// Five distinct families used by the default benchmark suite.
pub fn default_families(length: usize, channels: usize, noise_std: f64, seed: u64) -> Vec<SyntheticFamilySpec> {
    let mut r = rng::derived(seed, 5);
    let kinds = [
        ("sine", SyntheticKind::Sine, 12),
        ("sawtooth", SyntheticKind::Sawtooth, 17),
        ("trend_sine", SyntheticKind::TrendSine, 24),
        ("random_walk", SyntheticKind::RandomWalk, 1),
        ("ar1", SyntheticKind::Ar1, 1),
    ];
    kinds
        .into_iter()
        .map(|(name, kind, period)| SyntheticFamilySpec {
            name: name.to_string(),
            kind,
            period,
            amplitude: 1.0,
            noise_std,
            length,
            channels,
            seed: r.random(),
        })
        .collect()
}
