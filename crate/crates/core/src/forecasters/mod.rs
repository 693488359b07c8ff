//! One-variate forecasters: trainable linear and patch-MLP models plus the
//! naive baselines.
//!
//! Every forecaster maps an instance-normalized window of `input_len`
//! observations to `horizon` predictions on the same normalized scale.

mod grad;
mod io;
mod train;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
pub use crate::params::Params;
use crate::rng::Rng;

pub use grad::{loss_and_grad, predict_batch};
pub use io::{load, load_file, save, save_file, FORMAT_VERSION};
pub use train::{extract_windows, train, train_logged, TrainConfig, TrainLog, WindowSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Architecture {
    Linear,
    PatchMlp,
    Last,
    Mean,
    SeasonalNaive,
}

impl Architecture {
    pub fn is_trainable(self) -> bool {
        matches!(self, Architecture::Linear | Architecture::PatchMlp)
    }
}

impl std::str::FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.replace('-', "_").to_ascii_lowercase().as_str() {
            "linear" => Ok(Architecture::Linear),
            "patch_mlp" => Ok(Architecture::PatchMlp),
            "last" => Ok(Architecture::Last),
            "mean" => Ok(Architecture::Mean),
            "seasonal_naive" => Ok(Architecture::SeasonalNaive),
            other => Err(Error::InvalidConfig(format!("unknown architecture {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForecasterSpec {
    pub architecture: Architecture,
    pub input_len: usize,
    pub horizon: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub patch_len: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hidden_dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub season_period: Option<usize>,
}

impl ForecasterSpec {
    pub fn linear(input_len: usize, horizon: usize) -> Self {
        Self::plain(Architecture::Linear, input_len, horizon)
    }

    pub fn patch_mlp(input_len: usize, horizon: usize, patch_len: usize, hidden_dim: usize) -> Self {
        Self {
            patch_len: Some(patch_len),
            hidden_dim: Some(hidden_dim),
            ..Self::plain(Architecture::PatchMlp, input_len, horizon)
        }
    }

    pub fn last(input_len: usize, horizon: usize) -> Self {
        Self::plain(Architecture::Last, input_len, horizon)
    }

    pub fn mean(input_len: usize, horizon: usize) -> Self {
        Self::plain(Architecture::Mean, input_len, horizon)
    }

    pub fn seasonal_naive(input_len: usize, horizon: usize, period: usize) -> Self {
        Self {
            season_period: Some(period),
            ..Self::plain(Architecture::SeasonalNaive, input_len, horizon)
        }
    }

    fn plain(architecture: Architecture, input_len: usize, horizon: usize) -> Self {
        Self {
            architecture,
            input_len,
            horizon,
            patch_len: None,
            hidden_dim: None,
            season_period: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.input_len == 0 || self.horizon == 0 {
            return bad("input_len and horizon must be at least 1".into());
        }
        match self.architecture {
            Architecture::PatchMlp => {
                if self.patch_len.unwrap_or(0) == 0 || self.hidden_dim.unwrap_or(0) == 0 {
                    return bad("patch_mlp needs patch_len >= 1 and hidden_dim >= 1".into());
                }
            }
            Architecture::SeasonalNaive => match self.season_period {
                Some(p) if p >= 1 && p <= self.input_len => {}
                p => {
                    return bad(format!(
                        "seasonal_naive period {p:?} must be in 1..={}",
                        self.input_len
                    ))
                }
            },
            _ => {}
        }
        Ok(())
    }

    /// Number of patches, counting a zero-padded tail patch.
    pub fn num_patches(&self) -> usize {
        let p = self.patch_len.unwrap_or(1).max(1);
        self.input_len.div_ceil(p)
    }
}

/// Trainable parameters; baselines carry none.
#[derive(Debug, Clone, PartialEq)]
pub enum ModelWeights {
    /// `y = w x + b`, `w: horizon x input_len`.
    Linear { w: Array2<f64>, b: Array1<f64> },
    /// `y = out · concat_p relu(embed · patch_p + embed_bias) + out_bias`.
    PatchMlp {
        embed: Array2<f64>,
        embed_bias: Array1<f64>,
        out: Array2<f64>,
        out_bias: Array1<f64>,
    },
    Empty,
}

impl ModelWeights {
    pub fn zeros(spec: &ForecasterSpec) -> Self {
        let (t, h) = (spec.input_len, spec.horizon);
        match spec.architecture {
            Architecture::Linear => ModelWeights::Linear {
                w: Array2::zeros((h, t)),
                b: Array1::zeros(h),
            },
            Architecture::PatchMlp => {
                let pl = spec.patch_len.unwrap_or(1);
                let hid = spec.hidden_dim.unwrap_or(1);
                ModelWeights::PatchMlp {
                    embed: Array2::zeros((hid, pl)),
                    embed_bias: Array1::zeros(hid),
                    out: Array2::zeros((h, hid * spec.num_patches())),
                    out_bias: Array1::zeros(h),
                }
            }
            _ => ModelWeights::Empty,
        }
    }

    /// Uniform in `±1/sqrt(fan_in)` per layer.
    pub fn init(spec: &ForecasterSpec, rng: &mut Rng) -> Self {
        let mut weights = Self::zeros(spec);
        let mut fill = |tensor: &mut dyn Iterator<Item = &mut f64>, fan_in: usize| {
            let a = 1.0 / (fan_in as f64).sqrt();
            for v in tensor {
                *v = rng.random_range(-a..a);
            }
        };
        match &mut weights {
            ModelWeights::Linear { w, b } => {
                let fan_in = w.ncols();
                fill(&mut w.iter_mut(), fan_in);
                fill(&mut b.iter_mut(), fan_in);
            }
            ModelWeights::PatchMlp {
                embed,
                embed_bias,
                out,
                out_bias,
            } => {
                let (e_in, o_in) = (embed.ncols(), out.ncols());
                fill(&mut embed.iter_mut(), e_in);
                fill(&mut embed_bias.iter_mut(), e_in);
                fill(&mut out.iter_mut(), o_in);
                fill(&mut out_bias.iter_mut(), o_in);
            }
            ModelWeights::Empty => {}
        }
        weights
    }

    fn shape_matches(&self, spec: &ForecasterSpec) -> bool {
        let expected = Self::zeros(spec);
        std::mem::discriminant(self) == std::mem::discriminant(&expected)
            && self
                .tensors()
                .iter()
                .zip(expected.tensors())
                .all(|(a, b)| a.len() == b.len())
            && match (self, &expected) {
                (ModelWeights::Linear { w, .. }, ModelWeights::Linear { w: e, .. }) => w.dim() == e.dim(),
                (
                    ModelWeights::PatchMlp { embed, out, .. },
                    ModelWeights::PatchMlp { embed: ee, out: eo, .. },
                ) => embed.dim() == ee.dim() && out.dim() == eo.dim(),
                _ => true,
            }
    }
}

impl Params for ModelWeights {
    fn tensors(&self) -> Vec<&[f64]> {
        match self {
            ModelWeights::Linear { w, b } => vec![slice(w), b.as_slice().unwrap()],
            ModelWeights::PatchMlp {
                embed,
                embed_bias,
                out,
                out_bias,
            } => vec![
                slice(embed),
                embed_bias.as_slice().unwrap(),
                slice(out),
                out_bias.as_slice().unwrap(),
            ],
            ModelWeights::Empty => vec![],
        }
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        match self {
            ModelWeights::Linear { w, b } => {
                vec![w.as_slice_mut().unwrap(), b.as_slice_mut().unwrap()]
            }
            ModelWeights::PatchMlp {
                embed,
                embed_bias,
                out,
                out_bias,
            } => vec![
                embed.as_slice_mut().unwrap(),
                embed_bias.as_slice_mut().unwrap(),
                out.as_slice_mut().unwrap(),
                out_bias.as_slice_mut().unwrap(),
            ],
            ModelWeights::Empty => vec![],
        }
    }
}

fn slice(a: &Array2<f64>) -> &[f64] {
    a.as_slice().expect("weights are stored in standard layout")
}

/// Anything that turns a normalized window into a block of predictions.
pub trait Predict: Send + Sync {
    fn input_len(&self) -> usize;
    fn horizon(&self) -> usize;
    fn predict(&self, window: &[f64]) -> Result<Vec<f64>>;
}

/// A trained or closed-form one-variate forecaster.
#[derive(Debug, Clone, PartialEq)]
pub struct Forecaster {
    spec: ForecasterSpec,
    source_dataset: String,
    weights: ModelWeights,
}

impl Forecaster {
    pub fn new(spec: ForecasterSpec, source_dataset: impl Into<String>, weights: ModelWeights) -> Result<Self> {
        spec.validate()?;
        if !weights.shape_matches(&spec) {
            return Err(Error::ShapeMismatch(format!(
                "weights do not fit a {:?} model with input {} and horizon {}",
                spec.architecture, spec.input_len, spec.horizon
            )));
        }
        if !weights.is_finite() {
            return Err(Error::InvalidConfig("weights contain non-finite values".into()));
        }
        Ok(Self {
            spec,
            source_dataset: source_dataset.into(),
            weights,
        })
    }

    /// A weight-free baseline (`last`, `mean` or `seasonal_naive`).
    pub fn baseline(spec: ForecasterSpec) -> Result<Self> {
        if spec.architecture.is_trainable() {
            return Err(Error::InvalidConfig(format!(
                "{:?} is trainable, not a baseline",
                spec.architecture
            )));
        }
        Self::new(spec, "", ModelWeights::Empty)
    }

    pub fn spec(&self) -> &ForecasterSpec {
        &self.spec
    }

    pub fn source_dataset(&self) -> &str {
        &self.source_dataset
    }

    pub fn weights(&self) -> &ModelWeights {
        &self.weights
    }

    /// Predicts for every row of `windows` (`batch x input_len`).
    pub fn forecast_batch(&self, windows: ArrayView2<f64>) -> Result<Array2<f64>> {
        if windows.ncols() != self.spec.input_len {
            return Err(Error::LengthMismatch {
                expected: self.spec.input_len,
                actual: windows.ncols(),
            });
        }
        let h = self.spec.horizon;
        let t = self.spec.input_len;
        Ok(match self.spec.architecture {
            Architecture::Linear | Architecture::PatchMlp => {
                predict_batch(&self.spec, &self.weights, windows)
            }
            Architecture::Last => {
                let last = windows.column(t - 1);
                Array2::from_shape_fn((windows.nrows(), h), |(r, _)| last[r])
            }
            Architecture::Mean => {
                let means = windows.mean_axis(Axis(1)).expect("input_len >= 1");
                Array2::from_shape_fn((windows.nrows(), h), |(r, _)| means[r])
            }
            Architecture::SeasonalNaive => {
                let p = self.spec.season_period.expect("validated");
                Array2::from_shape_fn((windows.nrows(), h), |(r, i)| windows[[r, t - p + i % p]])
            }
        })
    }
}

impl Predict for Forecaster {
    fn input_len(&self) -> usize {
        self.spec.input_len
    }

    fn horizon(&self) -> usize {
        self.spec.horizon
    }

    fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
        let view = ArrayView2::from_shape((1, window.len()), window)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Ok(self.forecast_batch(view)?.into_raw_vec_and_offset().0)
    }
}
