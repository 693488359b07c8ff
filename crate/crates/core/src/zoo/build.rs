use std::path::{Path, PathBuf};

use ndarray::Array2;
use rand::seq::index;
use sha2::{Digest, Sha256};

use super::{ModelEntry, ZooFiles, ZooManifest, EXTRACTOR_FILE, MANIFEST_FILE, MODELS_DIR};
use crate::data::{read_file, write_file};
use crate::error::{Error, Result};
use crate::extractor::{self, ExtractorParams, Representation};
use crate::forecasters;
use crate::rng;
use crate::series::{normalize, Dataset};

/// Default number of source windows averaged into a model representation.
pub const DEFAULT_SAMPLES: usize = 256;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Mean encoding of `sample_count` normalized length-`L` windows of `data`,
/// drawn without replacement over every (channel, start) position. When
/// `sample_count` covers every window, all of them are used.
pub fn compute_model_representation(
    params: &ExtractorParams,
    data: &Dataset,
    sample_count: usize,
    seed: u64,
) -> Result<Representation> {
    let l = params.input_len();
    let t = data.series.len();
    if t < l {
        return Err(Error::NoTrainingWindows(format!(
            "dataset {} has {t} points per channel, fewer than the extractor window L = {l}",
            data.name
        )));
    }
    if sample_count == 0 {
        return Err(Error::InvalidConfig("sample_count must be >= 1".into()));
    }
    let per_channel = t - l + 1;
    let total = per_channel * data.series.num_channels();
    let picks: Vec<usize> = if sample_count >= total {
        (0..total).collect()
    } else {
        let mut v = index::sample(&mut rng::seeded(seed), total, sample_count).into_vec();
        v.sort_unstable();
        v
    };
    let mut windows = Array2::zeros((picks.len(), l));
    for (row, &p) in picks.iter().enumerate() {
        let channel = data.series.channel(p / per_channel);
        let start = p % per_channel;
        let (w, _) = normalize(&channel[start..start + l])?;
        windows.row_mut(row).assign(&ndarray::Array1::from(w));
    }
    let codes = params.encode_batch(windows.view());
    let mean = codes.mean_axis(ndarray::Axis(0)).expect("at least one window");
    Ok(Representation(mean.to_vec()))
}

/// Inputs to [`build_zoo`].
#[derive(Debug, Clone)]
pub struct ZooBuildInput<'a> {
    pub model_files: &'a [PathBuf],
    /// Source datasets, matched to models by `source_dataset` name.
    pub sources: &'a [Dataset],
    pub extractor_file: &'a Path,
    pub samples: usize,
    pub seed: u64,
}

/// A model file's id and raw bytes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModelBytes {
    pub model_id: String,
    pub bytes: Vec<u8>,
}

/// Builds the manifest and every zoo file in memory, keyed by path relative
/// to the zoo directory.
pub fn build_zoo_files(
    models: &[ModelBytes],
    extractor_bytes: &[u8],
    sources: &[Dataset],
    samples: usize,
    seed: u64,
) -> Result<(ZooManifest, ZooFiles)> {
    if models.is_empty() {
        return Err(Error::Zoo("a zoo needs at least one model".into()));
    }
    let ext = extractor::load(extractor_bytes, EXTRACTOR_FILE)?;
    let params = &ext.params;

    let mut entries: Vec<ModelEntry> = Vec::with_capacity(models.len());
    let mut files = ZooFiles::new();
    for m in models {
        let model_id = &m.model_id;
        let entry_err = |message: String| Error::ZooEntry {
            entry: model_id.clone(),
            message,
        };
        if model_id.is_empty() || model_id.contains(['/', '\\']) {
            return Err(entry_err("model_id must be a nonempty file name".into()));
        }
        if entries.iter().any(|e| &e.model_id == model_id) {
            return Err(entry_err("duplicate model_id".into()));
        }
        let model = forecasters::load(&m.bytes, model_id).map_err(|e| entry_err(e.to_string()))?;
        let spec = model.spec();
        if spec.input_len != params.input_len() {
            return Err(entry_err(format!(
                "input_len {} differs from the extractor window L = {}",
                spec.input_len,
                params.input_len()
            )));
        }
        let source = sources
            .iter()
            .find(|d| d.name == model.source_dataset())
            .ok_or_else(|| {
                entry_err(format!(
                    "source dataset {:?} was not supplied",
                    model.source_dataset()
                ))
            })?;
        let representation = compute_model_representation(params, source, samples, seed)
            .map_err(|e| entry_err(e.to_string()))?;
        let file = format!("{MODELS_DIR}/{model_id}.json");
        entries.push(ModelEntry {
            model_id: model_id.clone(),
            file: file.clone(),
            digest: sha256_hex(&m.bytes),
            source_dataset: model.source_dataset().to_string(),
            input_len: spec.input_len,
            horizon: spec.horizon,
            representation,
        });
        files.insert(file, m.bytes.clone());
    }

    let manifest = ZooManifest {
        format_version: super::FORMAT_VERSION,
        extractor: EXTRACTOR_FILE.to_string(),
        extractor_digest: sha256_hex(extractor_bytes),
        entries,
    };
    manifest.validate()?;
    files.insert(EXTRACTOR_FILE.to_string(), extractor_bytes.to_vec());
    files.insert(MANIFEST_FILE.to_string(), manifest.to_bytes());
    Ok((manifest, files))
}

/// Writes every file of a zoo under `dir`.
pub fn write_zoo_files(dir: &Path, files: &ZooFiles) -> Result<()> {
    for (rel, bytes) in files {
        write_file(&dir.join(rel), bytes)?;
    }
    Ok(())
}

/// Reads the manifest of the zoo in `dir` and every file it references.
pub fn read_zoo_files(dir: &Path) -> Result<ZooFiles> {
    let manifest_bytes = read_file(&dir.join(MANIFEST_FILE))?;
    let manifest = ZooManifest::from_bytes(&manifest_bytes, &dir.join(MANIFEST_FILE).display().to_string())?;
    let mut files = ZooFiles::new();
    for rel in std::iter::once(&manifest.extractor).chain(manifest.entries.iter().map(|e| &e.file)) {
        files.insert(rel.clone(), read_file(&dir.join(rel))?);
    }
    files.insert(MANIFEST_FILE.to_string(), manifest_bytes);
    Ok(files)
}

/// Writes a self-contained zoo directory: `zoo.json`, `extractor.json` and
/// `models/<model_id>.json`, where a model's id is its file stem. Rebuilding
/// from the same inputs rewrites the same bytes.
pub fn build_zoo(input: &ZooBuildInput, out_dir: &Path) -> Result<ZooManifest> {
    let models = input
        .model_files
        .iter()
        .map(|path| {
            let model_id = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .ok_or_else(|| Error::Zoo(format!("model path {} has no file name", path.display())))?;
            Ok(ModelBytes {
                model_id,
                bytes: read_file(path)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let extractor_bytes = read_file(input.extractor_file)?;
    let (manifest, files) = build_zoo_files(&models, &extractor_bytes, input.sources, input.samples, input.seed)?;
    write_zoo_files(out_dir, &files)?;
    tracing::info!(dir = %out_dir.display(), models = manifest.entries.len(), "zoo written");
    Ok(manifest)
}
