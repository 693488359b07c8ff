//! Zero-shot inference: per-variate model matching, sequential block
//! forecasting and top-k averaging under instance normalization.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::extractor::cosine;
use crate::forecasters::Predict;
use crate::series::{denormalize, normalize, trim_to_first, trim_to_last, MultivariateSeries, NormStats};
use crate::zoo::{ModelEntry, Zoo};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FusionConfig {
    /// Forecast length `H`.
    pub horizon: usize,
    /// Number of best-matching models averaged per block.
    pub top_k: usize,
    /// Channel index to forced model ids, bypassing matching for that channel.
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub overrides: BTreeMap<usize, Vec<String>>,
}

impl FusionConfig {
    pub fn new(horizon: usize, top_k: usize) -> Self {
        Self {
            horizon,
            top_k,
            overrides: BTreeMap::new(),
        }
    }

    pub fn validate(&self, zoo_size: usize) -> Result<()> {
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        if self.top_k == 0 || self.top_k > zoo_size {
            return Err(Error::InvalidConfig(format!(
                "top_k must be between 1 and the zoo size {zoo_size}, got {}",
                self.top_k
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scored {
    pub model_id: String,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SelectionResult {
    /// Every zoo entry, best match first.
    pub ranked: Vec<Scored>,
    /// Models used for the forecast.
    pub chosen: Vec<String>,
}

/// Ranks `entries` by cosine similarity to `repr`, descending. The sort is
/// stable, so ties keep manifest order.
pub fn rank_entries(entries: &[ModelEntry], repr: &[f64]) -> Vec<Scored> {
    let mut ranked: Vec<Scored> = entries
        .iter()
        .map(|e| Scored {
            model_id: e.model_id.clone(),
            score: cosine(&e.representation, repr),
        })
        .collect();
    ranked.sort_by(|a, b| b.score.total_cmp(&a.score));
    ranked
}

/// Encodes the normalized `window` (raw last-`L` history) and ranks the zoo.
pub fn match_variate(zoo: &Zoo, window: &[f64], top_k: usize) -> Result<SelectionResult> {
    let (norm, _) = normalize(window)?;
    let repr = zoo.extractor().encode(&norm)?;
    let ranked = rank_entries(zoo.entries(), &repr);
    let chosen = ranked.iter().take(top_k).map(|s| s.model_id.clone()).collect();
    Ok(SelectionResult { ranked, chosen })
}

/// Forecasts `horizon` steps in `ceil(H/h)` blocks. Each block feeds the
/// last `T` points of the history extended by earlier blocks to every model
/// and averages their outputs.
pub fn sequential_forecast(models: &[&dyn Predict], window: &[f64], horizon: usize) -> Result<Vec<f64>> {
    let first = models
        .first()
        .ok_or_else(|| Error::InvalidConfig("sequential forecast needs at least one model".into()))?;
    let h = first.horizon();
    let t = first.input_len();
    if models.iter().any(|m| m.horizon() != h) {
        return Err(Error::IncompatibleHorizons(models.iter().map(|m| m.horizon()).collect()));
    }
    if let Some(m) = models.iter().find(|m| m.input_len() != window.len()) {
        return Err(Error::LengthMismatch {
            expected: m.input_len(),
            actual: window.len(),
        });
    }
    let blocks = horizon.div_ceil(h);
    let mut history = window.to_vec();
    let mut output = Vec::with_capacity(blocks * h);
    for _ in 0..blocks {
        let input = trim_to_last(&history, t)?;
        let mut block = vec![0.0; h];
        for m in models {
            for (acc, v) in block.iter_mut().zip(m.predict(&input)?) {
                *acc += v;
            }
        }
        let k = models.len() as f64;
        block.iter_mut().for_each(|v| *v /= k);
        history.extend_from_slice(&block);
        output.extend_from_slice(&block);
    }
    trim_to_first(&output, horizon)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelProvenance {
    pub channel: String,
    pub selection: SelectionResult,
    pub top_k: usize,
    pub stats: NormStats,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FusionOutput {
    /// `H x C` forecast on the input's scale.
    pub forecast: MultivariateSeries,
    pub provenance: Vec<ChannelProvenance>,
}

fn forecast_channel(zoo: &Zoo, history: &[f64], c: usize, label: String, cfg: &FusionConfig) -> Result<(Vec<f64>, ChannelProvenance)> {
    let t = zoo.input_len();
    let window = trim_to_last(history, t)?;
    let (norm, stats) = normalize(&window)?;
    let mut selection = match_variate(zoo, &window, cfg.top_k)?;
    if let Some(forced) = cfg.overrides.get(&c) {
        if forced.is_empty() {
            return Err(Error::InvalidConfig(format!("empty override for channel {label}")));
        }
        selection.chosen = forced.clone();
    }
    let models = selection
        .chosen
        .iter()
        .map(|id| {
            zoo.index_of(id)
                .ok_or_else(|| Error::Zoo(format!("unknown model_id {id}")))
                .and_then(|i| zoo.model(i))
        })
        .collect::<Result<Vec<_>>>()?;
    let refs: Vec<&dyn Predict> = models.iter().map(|m| m.as_ref()).collect();
    let pred = sequential_forecast(&refs, &norm, cfg.horizon)?;
    let provenance = ChannelProvenance {
        channel: label,
        top_k: selection.chosen.len(),
        selection,
        stats,
    };
    Ok((denormalize(&pred, &stats), provenance))
}

/// Normalizes, matches and forecasts every channel independently, then
/// restores each channel's scale. Histories longer than the zoo look-back
/// are trimmed to their last `T` points.
pub fn forecast_multivariate(zoo: &Zoo, x: &MultivariateSeries, cfg: &FusionConfig) -> Result<FusionOutput> {
    cfg.validate(zoo.len())?;
    let t = zoo.input_len();
    if x.len() < t {
        return Err(Error::LengthMismatch {
            expected: t,
            actual: x.len(),
        });
    }
    let results = (0..x.num_channels())
        .into_par_iter()
        .map(|c| forecast_channel(zoo, x.channel(c), c, x.channel_label(c), cfg))
        .collect::<Result<Vec<_>>>()?;
    let (columns, provenance): (Vec<_>, Vec<_>) = results.into_iter().unzip();
    let mut forecast = MultivariateSeries::from_columns(columns)?;
    if let Some(names) = x.channel_names() {
        forecast = forecast.with_names(names.to_vec())?;
    }
    Ok(FusionOutput { forecast, provenance })
}

/// Long-format CSV with header `channel,step,value`; steps count from 1.
pub fn forecast_csv(forecast: &MultivariateSeries) -> String {
    let mut out = String::from("channel,step,value\n");
    for c in 0..forecast.num_channels() {
        let label = forecast.channel_label(c);
        for (i, v) in forecast.channel(c).iter().enumerate() {
            out.push_str(&format!("{label},{},{v}\n", i + 1));
        }
    }
    out
}
