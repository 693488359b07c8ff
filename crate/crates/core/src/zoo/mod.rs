//! The model zoo: forecasters paired with representations of their source
//! data, plus the transfer scores used to supervise the extractor.

mod build;
mod transfer;

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::data::read_file;
use crate::error::{Error, Result};
use crate::extractor::{self, ExtractorParams, Representation};
use crate::forecasters::{self, Predict};

pub use build::{
    build_zoo, build_zoo_files, compute_model_representation, read_zoo_files, sha256_hex, write_zoo_files,
    ModelBytes, ZooBuildInput, DEFAULT_SAMPLES,
};
pub use transfer::{
    compute_transfer_matrix, heldout_mse, split_datasets, train_on_heads, transfer_from_models, TransferMatrix,
    TRAIN_FRACTION,
};

pub const FORMAT_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "zoo.json";
pub const EXTRACTOR_FILE: &str = "extractor.json";
pub const MODELS_DIR: &str = "models";

/// Zoo file contents keyed by path relative to the zoo directory.
pub type ZooFiles = BTreeMap<String, Vec<u8>>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelEntry {
    pub model_id: String,
    /// Path of the model file, relative to the zoo directory.
    pub file: String,
    /// Hex SHA-256 of the model file.
    pub digest: String,
    pub source_dataset: String,
    pub input_len: usize,
    pub horizon: usize,
    pub representation: Representation,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooManifest {
    pub format_version: u32,
    pub extractor: String,
    pub extractor_digest: String,
    pub entries: Vec<ModelEntry>,
}

impl ZooManifest {
    pub fn validate(&self) -> Result<()> {
        if self.format_version != FORMAT_VERSION {
            return Err(Error::Zoo(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                self.format_version
            )));
        }
        validate_entries(&self.entries)
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("manifest serializes");
        bytes.push(b'\n');
        bytes
    }

    pub fn from_bytes(bytes: &[u8], origin: &str) -> Result<Self> {
        let m: Self = serde_json::from_slice(bytes).map_err(|e| Error::format(origin, e.to_string()))?;
        m.validate()?;
        Ok(m)
    }

    /// Representation dimension shared by every entry.
    pub fn dim(&self) -> usize {
        self.entries[0].representation.dim()
    }
}

fn validate_entries(entries: &[ModelEntry]) -> Result<()> {
    let first = entries
        .first()
        .ok_or_else(|| Error::Zoo("a zoo needs at least one model".into()))?;
    for (i, e) in entries.iter().enumerate() {
        let err = |message: String| Error::ZooEntry {
            entry: e.model_id.clone(),
            message,
        };
        if entries[..i].iter().any(|o| o.model_id == e.model_id) {
            return Err(err("duplicate model_id".into()));
        }
        if e.representation.dim() != first.representation.dim() {
            return Err(err(format!(
                "representation has dimension {}, entry {} has {}",
                e.representation.dim(),
                first.model_id,
                first.representation.dim()
            )));
        }
        if e.representation.iter().any(|v| !v.is_finite()) {
            return Err(err("representation has non-finite values".into()));
        }
        if e.input_len != first.input_len {
            return Err(err(format!(
                "input_len {} differs from entry {} ({})",
                e.input_len, first.model_id, first.input_len
            )));
        }
    }
    Ok(())
}

enum Source {
    File(PathBuf),
    Bytes(Vec<u8>),
    Ready,
}

struct Slot {
    source: Source,
    model: OnceLock<Arc<dyn Predict>>,
}

/// A loaded zoo: manifest, extractor and lazily loaded forecasters. Shared
/// read-only between threads.
pub struct Zoo {
    manifest: ZooManifest,
    extractor: ExtractorParams,
    slots: Vec<Slot>,
    digest: String,
    file_bytes: Option<u64>,
}

impl fmt::Debug for Zoo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Zoo")
            .field("digest", &self.digest)
            .field("models", &self.slots.len())
            .finish()
    }
}

impl Zoo {
    /// Opens a zoo directory, checking the manifest and every file digest.
    /// Forecaster weights are parsed on first use.
    pub fn load(dir: impl AsRef<Path>) -> Result<Zoo> {
        let dir = dir.as_ref();
        Self::open(
            |rel| read_file(&dir.join(rel)),
            |rel| Source::File(dir.join(rel)),
            &dir.display().to_string(),
        )
    }

    /// Opens a zoo held in memory, with the same checks as [`Zoo::load`].
    pub fn from_files(files: &ZooFiles) -> Result<Zoo> {
        let get = |rel: &str| {
            files
                .get(rel)
                .cloned()
                .ok_or_else(|| Error::Zoo(format!("missing file {rel}")))
        };
        Self::open(get, |rel| Source::Bytes(files[rel].clone()), "zoo")
    }

    fn open(
        read: impl Fn(&str) -> Result<Vec<u8>>,
        source: impl Fn(&str) -> Source,
        origin: &str,
    ) -> Result<Zoo> {
        let bytes = read(MANIFEST_FILE)?;
        let manifest = ZooManifest::from_bytes(&bytes, &format!("{origin}/{MANIFEST_FILE}"))?;

        let ext_bytes = read(&manifest.extractor)?;
        let mut total = (bytes.len() + ext_bytes.len()) as u64;
        if sha256_hex(&ext_bytes) != manifest.extractor_digest {
            return Err(Error::Zoo(format!(
                "extractor file {} does not match its digest",
                manifest.extractor
            )));
        }
        let extractor = extractor::load(&ext_bytes, &format!("{origin}/{}", manifest.extractor))?.params;

        let mut slots = Vec::with_capacity(manifest.entries.len());
        for e in &manifest.entries {
            let err = |message: String| Error::ZooEntry {
                entry: e.model_id.clone(),
                message,
            };
            let file_bytes = read(&e.file).map_err(|x| err(x.to_string()))?;
            if sha256_hex(&file_bytes) != e.digest {
                return Err(err(format!("{} does not match its digest", e.file)));
            }
            total += file_bytes.len() as u64;
            slots.push(Slot {
                source: source(&e.file),
                model: OnceLock::new(),
            });
        }
        let zoo = Zoo {
            manifest,
            extractor,
            slots,
            digest: sha256_hex(&bytes),
            file_bytes: Some(total),
        };
        zoo.check_extractor()?;
        Ok(zoo)
    }

    /// An in-memory zoo over ready predictors, one per entry.
    pub fn from_parts(
        extractor: ExtractorParams,
        entries: Vec<ModelEntry>,
        models: Vec<Arc<dyn Predict>>,
    ) -> Result<Zoo> {
        if entries.len() != models.len() {
            return Err(Error::Zoo(format!(
                "{} entries but {} models",
                entries.len(),
                models.len()
            )));
        }
        validate_entries(&entries)?;
        let slots = models
            .into_iter()
            .map(|m| {
                let cell = OnceLock::new();
                let _ = cell.set(m);
                Slot {
                    source: Source::Ready,
                    model: cell,
                }
            })
            .collect();
        let manifest = ZooManifest {
            format_version: FORMAT_VERSION,
            extractor: String::new(),
            extractor_digest: String::new(),
            entries,
        };
        let digest = sha256_hex(&manifest.to_bytes());
        let zoo = Zoo {
            manifest,
            extractor,
            slots,
            digest,
            file_bytes: None,
        };
        zoo.check_extractor()?;
        Ok(zoo)
    }

    fn check_extractor(&self) -> Result<()> {
        if self.extractor.dim() != self.manifest.dim() {
            return Err(Error::Zoo(format!(
                "extractor produces {}-dim representations, entries have {}",
                self.extractor.dim(),
                self.manifest.dim()
            )));
        }
        if self.extractor.input_len() != self.input_len() {
            return Err(Error::Zoo(format!(
                "extractor window L = {} differs from model input_len {}",
                self.extractor.input_len(),
                self.input_len()
            )));
        }
        Ok(())
    }

    pub fn manifest(&self) -> &ZooManifest {
        &self.manifest
    }

    pub fn entries(&self) -> &[ModelEntry] {
        &self.manifest.entries
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn extractor(&self) -> &ExtractorParams {
        &self.extractor
    }

    /// Look-back `T` shared by the extractor and every model.
    pub fn input_len(&self) -> usize {
        self.manifest.entries[0].input_len
    }

    /// SHA-256 of the manifest bytes; identifies the zoo for caching.
    pub fn digest(&self) -> &str {
        &self.digest
    }

    /// Total size of the manifest, extractor and model files; `None` for a
    /// zoo assembled from parts.
    pub fn disk_bytes(&self) -> Option<u64> {
        self.file_bytes
    }

    pub fn index_of(&self, model_id: &str) -> Option<usize> {
        self.entries().iter().position(|e| e.model_id == model_id)
    }

    /// The forecaster of entry `i`, parsed and cached on first use.
    pub fn model(&self, i: usize) -> Result<Arc<dyn Predict>> {
        let slot = &self.slots[i];
        if let Some(m) = slot.model.get() {
            return Ok(m.clone());
        }
        let entry = &self.manifest.entries[i];
        let err = |message: String| Error::ZooEntry {
            entry: entry.model_id.clone(),
            message,
        };
        let model = match &slot.source {
            Source::File(path) => forecasters::load_file(path),
            Source::Bytes(bytes) => forecasters::load(bytes, &entry.file),
            Source::Ready => unreachable!("ready slots are filled at construction"),
        }
        .map_err(|e| err(e.to_string()))?;
        if model.spec().input_len != entry.input_len || model.spec().horizon != entry.horizon {
            return Err(err(format!(
                "model file has input_len {} and horizon {}, manifest says {} and {}",
                model.spec().input_len,
                model.spec().horizon,
                entry.input_len,
                entry.horizon
            )));
        }
        let _ = slot.model.set(Arc::new(model));
        Ok(slot.model.get().expect("just set").clone())
    }
}
