use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{loss_and_grad, Forecaster, ForecasterSpec, ModelWeights, Params};
use crate::error::{Error, Result};
use crate::rng;
use crate::series::{norm_stats, Dataset};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub seed: u64,
    /// Step between consecutive training windows.
    pub stride: usize,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 10,
            learning_rate: 0.001,
            batch_size: 32,
            seed: 0,
            stride: 1,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0
            || self.batch_size == 0
            || self.stride == 0
            || !(self.learning_rate > 0.0 && self.learning_rate.is_finite())
        {
            return Err(Error::InvalidConfig(format!(
                "epochs, batch_size and stride must be >= 1 and learning_rate > 0 (got {self:?})"
            )));
        }
        Ok(())
    }
}

/// Instance-normalized `(window, target)` pairs, one per row. Each target is
/// scaled with the statistics of its own input window.
#[derive(Debug, Clone)]
pub struct WindowSet {
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

impl WindowSet {
    pub fn len(&self) -> usize {
        self.inputs.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Every window of `input_len + horizon` consecutive points in every channel,
/// starting at multiples of `stride`.
pub fn extract_windows(data: &Dataset, input_len: usize, horizon: usize, stride: usize) -> WindowSet {
    let span = input_len + horizon;
    let mut inputs = Vec::new();
    let mut targets = Vec::new();
    let mut n = 0;
    for channel in data.series.channels() {
        if channel.len() < span {
            continue;
        }
        for start in (0..=channel.len() - span).step_by(stride.max(1)) {
            let window = &channel[start..start + input_len];
            let stats = norm_stats(window).expect("series values are finite");
            inputs.extend(window.iter().map(|v| (v - stats.mean) / stats.std));
            targets.extend(
                channel[start + input_len..start + span]
                    .iter()
                    .map(|v| (v - stats.mean) / stats.std),
            );
            n += 1;
        }
    }
    WindowSet {
        inputs: Array2::from_shape_vec((n, input_len), inputs).expect("window shape"),
        targets: Array2::from_shape_vec((n, horizon), targets).expect("target shape"),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainLog {
    /// Mean mini-batch loss of each epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train(spec: &ForecasterSpec, data: &Dataset, cfg: &TrainConfig) -> Result<Forecaster> {
    train_logged(spec, data, cfg).map(|(model, _)| model)
}

/// Mini-batch SGD on the mean squared error of normalized windows.
pub fn train_logged(spec: &ForecasterSpec, data: &Dataset, cfg: &TrainConfig) -> Result<(Forecaster, TrainLog)> {
    spec.validate()?;
    cfg.validate()?;
    if !spec.architecture.is_trainable() {
        return Err(Error::InvalidConfig(format!(
            "{:?} has no trainable weights",
            spec.architecture
        )));
    }
    let windows = extract_windows(data, spec.input_len, spec.horizon, cfg.stride);
    if windows.is_empty() {
        return Err(Error::NoTrainingWindows(format!(
            "dataset {} is shorter than input_len + horizon = {}",
            data.name,
            spec.input_len + spec.horizon
        )));
    }

    let mut rng = rng::seeded(cfg.seed);
    let mut weights = ModelWeights::init(spec, &mut rng);
    let mut order: Vec<usize> = (0..windows.len()).collect();
    let mut epoch_losses = Vec::with_capacity(cfg.epochs);

    for epoch in 1..=cfg.epochs {
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut batches = 0usize;
        for chunk in order.chunks(cfg.batch_size) {
            let inputs = windows.inputs.select(Axis(0), chunk);
            let targets = windows.targets.select(Axis(0), chunk);
            let (loss, grad) = loss_and_grad(spec, &weights, inputs.view(), targets.view());
            if !loss.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            weights.add_scaled(-cfg.learning_rate, &grad);
            if !weights.is_finite() {
                return Err(Error::TrainingDiverged { epoch });
            }
            total += loss;
            batches += 1;
        }
        epoch_losses.push(total / batches as f64);
        tracing::debug!(dataset = %data.name, epoch, loss = total / batches as f64, "forecaster epoch");
    }

    let model = Forecaster::new(spec.clone(), data.name.clone(), weights)?;
    Ok((model, TrainLog { epoch_losses }))
}
