use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng as _, RngCore};
use serde::{Deserialize, Serialize};

use super::mask::{mask_series, MaskSpec};
use super::objective::{objective, ObjectiveBatch};
use super::{ExtractorDims, ExtractorParams};
use crate::error::{Error, Result};
use crate::params::Params;
use crate::rng::{self, Rng};
use crate::series::{normalize, Dataset};
use crate::zoo::TransferMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExtractorTrainConfig {
    /// Weight of the contrastive constraint term.
    pub lambda: f64,
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Windows drawn from each dataset per epoch.
    pub windows_per_dataset: usize,
}

impl Default for ExtractorTrainConfig {
    fn default() -> Self {
        Self {
            lambda: 0.5,
            epochs: 30,
            learning_rate: 0.05,
            batch_size: 32,
            seed: 0,
            windows_per_dataset: 64,
        }
    }
}

impl ExtractorTrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda >= 0.0 && self.lambda.is_finite())
            || !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
            || self.epochs == 0
            || self.batch_size == 0
            || self.windows_per_dataset == 0
        {
            return Err(Error::InvalidConfig(format!(
                "lambda must be >= 0, learning_rate > 0 and counts >= 1 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Mean loss components over the mini-batches of one epoch.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub recon: f64,
    pub trans: f64,
    pub constraint: f64,
    pub total: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainedExtractor {
    pub params: ExtractorParams,
    pub log: Vec<EpochLog>,
}

/// `count` instance-normalized windows of length `len`: a channel uniformly,
/// then a start position uniformly.
pub fn sample_windows(data: &Dataset, len: usize, count: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    let t = data.series.len();
    if t < len || len == 0 {
        return Err(Error::InsufficientHistory {
            needed: len,
            available: t,
        });
    }
    let c = data.series.num_channels();
    (0..count)
        .map(|_| {
            let channel = data.series.channel(rng.random_range(0..c));
            let start = rng.random_range(0..=t - len);
            normalize(&channel[start..start + len]).map(|(w, _)| w)
        })
        .collect()
}

/// Transfer targets between every pair of datasets, clipped to `[-1, 1]`.
fn target_table(datasets: &[Dataset], tm: &TransferMatrix) -> Result<Array2<f64>> {
    let n = datasets.len();
    let mut table = Array2::zeros((n, n));
    for (i, a) in datasets.iter().enumerate() {
        for (j, b) in datasets.iter().enumerate() {
            table[[i, j]] = tm.get(&a.name, &b.name)?.clamp(-1.0, 1.0);
        }
    }
    Ok(table)
}

/// Mini-batch SGD on `recon + trans + lambda * constraint`.
///
/// Every epoch draws `windows_per_dataset` fresh windows per dataset, shuffles
/// them and splits them into batches; a trailing batch of one window is merged
/// into the previous batch so every batch has negatives.
pub fn train_extractor(
    datasets: &[Dataset],
    tm: &TransferMatrix,
    dims: ExtractorDims,
    cfg: &ExtractorTrainConfig,
    mask: &MaskSpec,
) -> Result<TrainedExtractor> {
    dims.validate()?;
    cfg.validate()?;
    mask.validate()?;
    if datasets.is_empty() {
        return Err(Error::InvalidConfig("extractor training needs at least one dataset".into()));
    }
    for (i, d) in datasets.iter().enumerate() {
        if datasets[..i].iter().any(|o| o.name == d.name) {
            return Err(Error::InvalidConfig(format!("duplicate dataset name {}", d.name)));
        }
    }
    let targets = target_table(datasets, tm)?;
    let l = dims.input_len;

    let mut rng = rng::seeded(cfg.seed);
    let mut params = ExtractorParams::init(dims, &mut rng);
    let mut log = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        let mut pool: Vec<(usize, Vec<f64>)> = Vec::new();
        for (i, d) in datasets.iter().enumerate() {
            for w in sample_windows(d, l, cfg.windows_per_dataset, &mut rng)? {
                pool.push((i, w));
            }
        }
        pool.shuffle(&mut rng);

        let mut chunks: Vec<&[(usize, Vec<f64>)]> = pool.chunks(cfg.batch_size).collect();
        if chunks.len() >= 2 && chunks.last().is_some_and(|c| c.len() == 1) {
            chunks.pop();
            let n = chunks.len();
            chunks[n - 1] = &pool[(n - 1) * cfg.batch_size..];
        }

        let mut sums = [0.0; 4];
        for chunk in &chunks {
            let b = chunk.len();
            let v = mask.num_views;
            let mut anchors = Array2::zeros((b, l));
            let mut views = Array2::zeros((b * v, l));
            for (s, (_, w)) in chunk.iter().enumerate() {
                anchors.row_mut(s).assign(&ndarray::ArrayView1::from(w.as_slice()));
                let spec = MaskSpec {
                    seed: rng.next_u64(),
                    ..*mask
                };
                for (k, view) in mask_series(w, &spec)?.into_iter().enumerate() {
                    views.row_mut(s * v + k).assign(&ndarray::Array1::from(view));
                }
            }
            let transfer = Array2::from_shape_fn((b, b), |(s, t)| targets[[chunk[s].0, chunk[t].0]]);
            let batch = ObjectiveBatch {
                anchors,
                views,
                num_views: v,
                transfer,
            };
            let (parts, grad) = objective(&params, &batch, cfg.lambda)?;
            if !parts.total.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            params.add_scaled(-cfg.learning_rate, &grad);
            if !params.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            for (acc, x) in sums.iter_mut().zip([parts.recon, parts.trans, parts.constraint, parts.total]) {
                *acc += x;
            }
        }
        let n = chunks.len() as f64;
        let entry = EpochLog {
            epoch,
            recon: sums[0] / n,
            trans: sums[1] / n,
            constraint: sums[2] / n,
            total: sums[3] / n,
        };
        tracing::debug!(?entry, "extractor epoch");
        log.push(entry);
    }
    Ok(TrainedExtractor { params, log })
}
