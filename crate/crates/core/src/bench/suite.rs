use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::extractor::{train_extractor, ExtractorDims, ExtractorTrainConfig, MaskSpec, TrainedExtractor};
use crate::forecasters::{Forecaster, ForecasterSpec, Predict, TrainConfig};
use crate::series::Dataset;
use crate::zoo::{
    compute_model_representation, split_datasets, train_on_heads, transfer_from_models, ModelEntry, TransferMatrix,
    Zoo, DEFAULT_SAMPLES,
};

/// Everything needed to build an in-memory zoo from a set of datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub ptm: ForecasterSpec,
    pub train: TrainConfig,
    pub dims: ExtractorDims,
    pub extractor: ExtractorTrainConfig,
    pub mask: MaskSpec,
    pub samples: usize,
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            ptm: ForecasterSpec::linear(36, 12),
            train: TrainConfig::default(),
            dims: ExtractorDims::default(),
            extractor: ExtractorTrainConfig {
                epochs: 300,
                learning_rate: 0.2,
                windows_per_dataset: 128,
                ..ExtractorTrainConfig::default()
            },
            mask: MaskSpec::default(),
            samples: DEFAULT_SAMPLES,
            seed: 0,
        }
    }
}

pub struct SuiteZoo {
    pub zoo: Zoo,
    pub models: Vec<Forecaster>,
    pub transfer: TransferMatrix,
    pub extractor: TrainedExtractor,
}

/// One forecaster per dataset, the transfer matrix between them and an
/// extractor, all fitted on the first 80% of every channel; the rest stays
/// unseen for evaluation. Model ids are the dataset names.
pub fn build_suite_zoo(datasets: &[Dataset], cfg: &SuiteConfig) -> Result<SuiteZoo> {
    let models = train_on_heads(datasets, &cfg.ptm, &cfg.train)?;
    let transfer = transfer_from_models(&models, datasets)?;
    let heads: Vec<Dataset> = split_datasets(datasets)?.into_iter().map(|(h, _)| h).collect();
    let extractor = train_extractor(&heads, &transfer, cfg.dims, &cfg.extractor, &cfg.mask)?;
    let entries = heads
        .iter()
        .zip(&models)
        .map(|(head, model)| {
            Ok(ModelEntry {
                model_id: head.name.clone(),
                file: String::new(),
                digest: String::new(),
                source_dataset: head.name.clone(),
                input_len: model.spec().input_len,
                horizon: model.spec().horizon,
                representation: compute_model_representation(&extractor.params, head, cfg.samples, cfg.seed)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let predictors: Vec<Arc<dyn Predict>> = models.iter().map(|m| Arc::new(m.clone()) as Arc<dyn Predict>).collect();
    let zoo = Zoo::from_parts(extractor.params.clone(), entries, predictors)?;
    Ok(SuiteZoo {
        zoo,
        models,
        transfer,
        extractor,
    })
}
