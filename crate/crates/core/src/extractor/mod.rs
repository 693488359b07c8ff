//! Representation extractor: a masked-reconstruction encoder/decoder whose
//! encoder output embeds a window of `L` normalized observations in `R^d`.

mod io;
mod loss;
mod mask;
mod objective;
mod pca;
mod train;

use std::ops::Deref;

use ndarray::{Array1, Array2, ArrayView2};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::Params;
use crate::rng::Rng;

pub use io::{load, load_file, save, save_file, ExtractorFile, FORMAT_VERSION};
pub use loss::{constraint_loss, cosine, cosine_grad, transferability_loss, AnchorViews};
pub use mask::{mask_series, MaskSpec};
pub use objective::{objective, Objective, ObjectiveBatch};
pub use pca::{pca_project, PcaResult};
pub use train::{
    sample_windows, train_extractor, EpochLog, ExtractorTrainConfig, TrainedExtractor,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractorDims {
    #[serde(rename = "L")]
    pub input_len: usize,
    pub hidden: usize,
    #[serde(rename = "d")]
    pub dim: usize,
}

impl Default for ExtractorDims {
    fn default() -> Self {
        Self {
            input_len: 36,
            hidden: 64,
            dim: 32,
        }
    }
}

impl ExtractorDims {
    pub fn validate(&self) -> Result<()> {
        if self.input_len == 0 || self.hidden == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(format!(
                "extractor dims must be >= 1, got {self:?}"
            )));
        }
        Ok(())
    }
}

/// Encoder `L -> hidden -> d` and mirror decoder `d -> hidden -> L`, ReLU between layers.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorParams {
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
    pub v1: Array2<f64>,
    pub c1: Array1<f64>,
    pub v2: Array2<f64>,
    pub c2: Array1<f64>,
}

impl ExtractorParams {
    pub fn zeros(dims: ExtractorDims) -> Self {
        let ExtractorDims {
            input_len: l,
            hidden: h,
            dim: d,
        } = dims;
        Self {
            w1: Array2::zeros((h, l)),
            b1: Array1::zeros(h),
            w2: Array2::zeros((d, h)),
            b2: Array1::zeros(d),
            v1: Array2::zeros((h, d)),
            c1: Array1::zeros(h),
            v2: Array2::zeros((l, h)),
            c2: Array1::zeros(l),
        }
    }

    /// Uniform in `±1/sqrt(fan_in)` per layer.
    pub fn init(dims: ExtractorDims, rng: &mut Rng) -> Self {
        let mut p = Self::zeros(dims);
        let fans = [
            dims.input_len,
            dims.input_len,
            dims.hidden,
            dims.hidden,
            dims.dim,
            dims.dim,
            dims.hidden,
            dims.hidden,
        ];
        for (tensor, fan_in) in p.tensors_mut().into_iter().zip(fans) {
            let a = 1.0 / (fan_in as f64).sqrt();
            for v in tensor {
                *v = rng.random_range(-a..a);
            }
        }
        p
    }

    pub fn dims(&self) -> ExtractorDims {
        ExtractorDims {
            input_len: self.w1.ncols(),
            hidden: self.w1.nrows(),
            dim: self.w2.nrows(),
        }
    }

    pub fn input_len(&self) -> usize {
        self.w1.ncols()
    }

    pub fn dim(&self) -> usize {
        self.w2.nrows()
    }

    /// Encodes every row of `windows` (`n x L`).
    pub fn encode_batch(&self, windows: ArrayView2<f64>) -> Array2<f64> {
        let hidden = (windows.dot(&self.w1.t()) + &self.b1).mapv(|v| v.max(0.0));
        hidden.dot(&self.w2.t()) + &self.b2
    }

    /// `E(x) = W2 relu(W1 x + b1) + b2` for one normalized window.
    pub fn encode(&self, window: &[f64]) -> Result<Representation> {
        if window.len() != self.input_len() {
            return Err(Error::LengthMismatch {
                expected: self.input_len(),
                actual: window.len(),
            });
        }
        let view = ArrayView2::from_shape((1, window.len()), window)
            .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
        Ok(Representation(self.encode_batch(view).into_raw_vec_and_offset().0))
    }

    /// Decoder output for a batch of codes (`n x d`).
    pub fn decode_batch(&self, codes: ArrayView2<f64>) -> Array2<f64> {
        let hidden = (codes.dot(&self.v1.t()) + &self.c1).mapv(|v| v.max(0.0));
        hidden.dot(&self.v2.t()) + &self.c2
    }
}

impl Params for ExtractorParams {
    fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.w1.as_slice().expect("standard layout"),
            self.b1.as_slice().expect("standard layout"),
            self.w2.as_slice().expect("standard layout"),
            self.b2.as_slice().expect("standard layout"),
            self.v1.as_slice().expect("standard layout"),
            self.c1.as_slice().expect("standard layout"),
            self.v2.as_slice().expect("standard layout"),
            self.c2.as_slice().expect("standard layout"),
        ]
    }

    fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.w1.as_slice_mut().expect("standard layout"),
            self.b1.as_slice_mut().expect("standard layout"),
            self.w2.as_slice_mut().expect("standard layout"),
            self.b2.as_slice_mut().expect("standard layout"),
            self.v1.as_slice_mut().expect("standard layout"),
            self.c1.as_slice_mut().expect("standard layout"),
            self.v2.as_slice_mut().expect("standard layout"),
            self.c2.as_slice_mut().expect("standard layout"),
        ]
    }
}

/// A `d`-dimensional embedding of a window, or the mean embedding of a model's source data.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Representation(pub Vec<f64>);

impl Representation {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Component-wise arithmetic mean; `None` for an empty slice.
    pub fn mean(reprs: &[Representation]) -> Option<Representation> {
        let first = reprs.first()?;
        let mut acc = vec![0.0; first.dim()];
        for r in reprs {
            for (a, v) in acc.iter_mut().zip(&r.0) {
                *a += v;
            }
        }
        let n = reprs.len() as f64;
        Some(Representation(acc.into_iter().map(|v| v / n).collect()))
    }
}

impl Deref for Representation {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}
