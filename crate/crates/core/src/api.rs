//! Request and response bodies of the HTTP service. Artifacts travel as
//! their file contents so the service never touches the caller's disk.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::bench::{BenchConfig, SyntheticFamilySpec};
use crate::data::{csv_text, parse_any_csv};
use crate::error::{Error, Result};
use crate::extractor::{EpochLog, ExtractorDims, ExtractorTrainConfig, MaskSpec};
use crate::forecasters::{ForecasterSpec, TrainConfig, TrainLog};
use crate::fusion::{ChannelProvenance, FusionConfig};
use crate::metrics::Metric;
use crate::series::Dataset;
use crate::zoo::{TransferMatrix, ZooFiles};

/// A dataset as CSV text, in either layout [`parse_any_csv`] accepts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetPayload {
    pub name: String,
    pub csv: String,
    #[serde(default = "yes")]
    pub has_header: bool,
}

fn yes() -> bool {
    true
}

impl DatasetPayload {
    pub fn from_dataset(d: &Dataset) -> Self {
        Self {
            name: d.name.clone(),
            csv: csv_text(&d.series),
            has_header: true,
        }
    }

    /// Accepts the wide layout and the long forecast layout.
    pub fn parse(&self) -> Result<Dataset> {
        parse_any_csv(&self.csv, self.has_header, &self.name, &self.name)
    }
}

/// Text files keyed by relative path, for zoo directories.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileBundle {
    pub files: BTreeMap<String, String>,
}

impl FileBundle {
    pub fn from_zoo_files(files: &ZooFiles) -> Result<Self> {
        let files = files
            .iter()
            .map(|(k, v)| {
                String::from_utf8(v.clone())
                    .map(|text| (k.clone(), text))
                    .map_err(|_| Error::format(k, "zoo files must be UTF-8 text"))
            })
            .collect::<Result<_>>()?;
        Ok(Self { files })
    }

    pub fn to_zoo_files(&self) -> ZooFiles {
        self.files.iter().map(|(k, v)| (k.clone(), v.clone().into_bytes())).collect()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub version: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthRequest {
    pub family: SyntheticFamilySpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPtmRequest {
    pub dataset: DatasetPayload,
    pub spec: ForecasterSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainPtmResponse {
    /// Contents of the model file.
    pub model: String,
    pub log: TrainLog,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransferMatrixRequest {
    pub datasets: Vec<DatasetPayload>,
    pub spec: ForecasterSpec,
    pub train: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExtractorRequest {
    pub datasets: Vec<DatasetPayload>,
    pub transfer: TransferMatrix,
    pub dims: ExtractorDims,
    pub config: ExtractorTrainConfig,
    pub mask: MaskSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainExtractorResponse {
    /// Contents of the extractor file.
    pub extractor: String,
    pub log: Vec<EpochLog>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedFile {
    pub name: String,
    pub content: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BuildZooRequest {
    /// Model files; `name` becomes the model id.
    pub models: Vec<NamedFile>,
    pub extractor: String,
    /// Source data, matched to models by dataset name.
    pub sources: Vec<DatasetPayload>,
    pub samples: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedRequest {
    pub zoo: FileBundle,
    /// Variates to embed next to the zoo models; every channel's last `L`
    /// points are used.
    #[serde(default)]
    pub inputs: Vec<DatasetPayload>,
    /// Project onto this many principal components.
    #[serde(default)]
    pub pca: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointKind {
    Ptm,
    Variate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddedPoint {
    pub label: String,
    pub kind: PointKind,
    pub vector: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbedResponse {
    /// Raw representations, or PCA coordinates when requested.
    pub points: Vec<EmbeddedPoint>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explained_variance: Option<Vec<f64>>,
}

impl EmbedResponse {
    /// `label,kind,pc1..pck` (or `dim1..dimd` for raw vectors).
    pub fn to_csv(&self) -> String {
        let width = self.points.first().map_or(0, |p| p.vector.len());
        let prefix = if self.explained_variance.is_some() { "pc" } else { "dim" };
        let mut out = String::from("label,kind");
        for i in 1..=width {
            out.push_str(&format!(",{prefix}{i}"));
        }
        out.push('\n');
        for p in &self.points {
            let kind = match p.kind {
                PointKind::Ptm => "ptm",
                PointKind::Variate => "variate",
            };
            out.push_str(&format!("{},{kind}", p.label));
            for v in &p.vector {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastRequest {
    pub zoo: FileBundle,
    pub input: DatasetPayload,
    pub config: FusionConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResponse {
    /// Long-format `channel,step,value` CSV.
    pub csv: String,
    pub provenance: Vec<ChannelProvenance>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateRequest {
    pub truth: DatasetPayload,
    pub pred: DatasetPayload,
    #[serde(default = "all_metrics")]
    pub metrics: Vec<Metric>,
}

fn all_metrics() -> Vec<Metric> {
    Metric::ALL.to_vec()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluateResponse {
    /// `None` where the metric is undefined (MAPE on all-zero truth).
    pub scores: BTreeMap<Metric, Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkRequest {
    pub config: BenchConfig,
    /// When absent, a zoo is fitted on the training heads of the datasets.
    #[serde(default)]
    pub zoo: Option<FileBundle>,
    #[serde(default)]
    pub datasets: Vec<DatasetPayload>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResponse {
    /// Report files by name: `report.json`, `results.csv`, `summary.csv`,
    /// `windows.csv`, `zoo_distribution.csv`.
    pub files: BTreeMap<String, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ErrorBody {
    pub error: String,
}
