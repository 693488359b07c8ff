//! Dataset-to-dataset transfer scores `g[i][j] = 1 - MSE` of dataset `i`'s
//! model on dataset `j`'s held-out tail.

use std::path::Path;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{read_file, write_file};
use crate::error::{Error, Result};
use crate::forecasters::{train, Forecaster, ForecasterSpec, TrainConfig};
use crate::series::{norm_stats, normalize, Dataset};

/// Fraction of every channel used for training; the rest is held out.
pub const TRAIN_FRACTION: f64 = 0.8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrix {
    pub datasets: Vec<String>,
    pub g: Vec<Vec<f64>>,
}

impl TransferMatrix {
    pub fn new(datasets: Vec<String>, g: Vec<Vec<f64>>) -> Result<Self> {
        let m = Self { datasets, g };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.datasets.len();
        if self.g.len() != n || self.g.iter().any(|row| row.len() != n) {
            return Err(Error::ShapeMismatch(format!(
                "transfer matrix must be {n}x{n} to match its dataset list"
            )));
        }
        if self.g.iter().flatten().any(|v| !v.is_finite()) {
            return Err(Error::InvalidConfig("transfer matrix has non-finite entries".into()));
        }
        for (i, name) in self.datasets.iter().enumerate() {
            if self.datasets[..i].contains(name) {
                return Err(Error::InvalidConfig(format!("duplicate dataset name {name}")));
            }
        }
        Ok(())
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.datasets.iter().position(|d| d == name)
    }

    /// Score from `from`'s model to `to`'s data.
    pub fn get(&self, from: &str, to: &str) -> Result<f64> {
        match (self.index_of(from), self.index_of(to)) {
            (Some(i), Some(j)) => Ok(self.g[i][j]),
            _ => Err(Error::MissingTransferPair(from.to_string(), to.to_string())),
        }
    }

    pub fn save_file(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut bytes = serde_json::to_vec(self)?;
        bytes.push(b'\n');
        write_file(path.as_ref(), &bytes)
    }

    pub fn load_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let origin = path.display().to_string();
        let m: Self = serde_json::from_slice(&read_file(path)?)
            .map_err(|e| Error::format(&origin, e.to_string()))?;
        m.validate().map_err(|e| Error::format(&origin, e.to_string()))?;
        Ok(m)
    }
}

/// MSE of `model` over every window of `data`, measured in units of each
/// channel's own standard deviation so scores are comparable across datasets
/// of different magnitudes. The model still sees instance-normalized inputs.
pub fn heldout_mse(model: &Forecaster, data: &Dataset) -> Result<f64> {
    let spec = model.spec();
    let span = spec.input_len + spec.horizon;
    let (mut total, mut count) = (0.0, 0usize);
    for channel in data.series.channels() {
        if channel.len() < span {
            continue;
        }
        let scale = norm_stats(channel)?.std;
        let starts = 0..=channel.len() - span;
        let n = starts.clone().count();
        let mut inputs = Array2::zeros((n, spec.input_len));
        let mut stats = Vec::with_capacity(n);
        for (row, start) in starts.clone().enumerate() {
            let (norm, st) = normalize(&channel[start..start + spec.input_len])?;
            inputs.row_mut(row).assign(&ArrayView1::from(&norm[..]));
            stats.push(st);
        }
        let pred = model.forecast_batch(inputs.view())?;
        for ((row, start), st) in starts.enumerate().zip(&stats) {
            let truth = &channel[start + spec.input_len..start + span];
            for (p, t) in pred.row(row).iter().zip(truth) {
                let e = (p * st.std + st.mean - t) / scale;
                total += e * e;
            }
            count += spec.horizon;
        }
    }
    if count == 0 {
        return Err(Error::NoTrainingWindows(format!(
            "held-out part of dataset {} is shorter than input_len + horizon = {span}",
            data.name
        )));
    }
    Ok(total / count as f64)
}

/// Splits every dataset into its training head and held-out tail.
pub fn split_datasets(datasets: &[Dataset]) -> Result<Vec<(Dataset, Dataset)>> {
    datasets
        .iter()
        .map(|d| {
            d.split_fraction(TRAIN_FRACTION)
                .map_err(|e| Error::InvalidConfig(format!("dataset {}: {e}", d.name)))
        })
        .collect()
}

/// One forecaster per dataset, trained on the first 80% of each channel.
pub fn train_on_heads(datasets: &[Dataset], spec: &ForecasterSpec, cfg: &TrainConfig) -> Result<Vec<Forecaster>> {
    split_datasets(datasets)?
        .par_iter()
        .map(|(head, _)| {
            train(spec, head, cfg).map_err(|e| match e {
                Error::TrainingDiverged { epoch } => Error::InvalidConfig(format!(
                    "training on {} diverged at epoch {epoch}",
                    head.name
                )),
                other => other,
            })
        })
        .collect()
}

/// Scores model `i` (trained on dataset `i`) on the held-out tail of every dataset.
pub fn transfer_from_models(models: &[Forecaster], datasets: &[Dataset]) -> Result<TransferMatrix> {
    if models.len() != datasets.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} models for {} datasets",
            models.len(),
            datasets.len()
        )));
    }
    let splits = split_datasets(datasets)?;
    let g = models
        .par_iter()
        .map(|m| {
            splits
                .iter()
                .map(|(_, tail)| heldout_mse(m, tail).map(|mse| 1.0 - mse))
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    TransferMatrix::new(datasets.iter().map(|d| d.name.clone()).collect(), g)
}

/// Trains one forecaster per dataset on the first 80% of each channel and
/// scores it on every dataset's last 20%.
pub fn compute_transfer_matrix(
    datasets: &[Dataset],
    spec: &ForecasterSpec,
    cfg: &TrainConfig,
) -> Result<TransferMatrix> {
    if datasets.len() < 2 {
        return Err(Error::InvalidConfig(format!(
            "transfer matrix needs at least 2 datasets, got {}",
            datasets.len()
        )));
    }
    let models = train_on_heads(datasets, spec, cfg)?;
    transfer_from_models(&models, datasets)
}
