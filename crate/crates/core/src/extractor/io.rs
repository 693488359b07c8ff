//! Extractor file: `{format_version, dims: {L, hidden, d}, weights, training_log}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::train::EpochLog;
use super::{ExtractorDims, ExtractorParams};
use crate::data::{read_file, write_file};
use crate::error::{Error, Result};
use crate::tensor::{expect_consumed, take_matrix, take_vector, Tensor, TensorMap};

pub const FORMAT_VERSION: u32 = 1;

/// Trained extractor weights with the log of the run that produced them.
#[derive(Debug, Clone, PartialEq)]
pub struct ExtractorFile {
    pub params: ExtractorParams,
    pub training_log: Vec<EpochLog>,
}

#[derive(Serialize, Deserialize)]
struct RawFile {
    format_version: u32,
    dims: ExtractorDims,
    weights: TensorMap,
    #[serde(default)]
    training_log: Vec<EpochLog>,
}

pub fn save(file: &ExtractorFile) -> Vec<u8> {
    let p = &file.params;
    let mut weights = TensorMap::new();
    weights.insert("W1".into(), Tensor::from(&p.w1));
    weights.insert("b1".into(), Tensor::from(&p.b1));
    weights.insert("W2".into(), Tensor::from(&p.w2));
    weights.insert("b2".into(), Tensor::from(&p.b2));
    weights.insert("V1".into(), Tensor::from(&p.v1));
    weights.insert("c1".into(), Tensor::from(&p.c1));
    weights.insert("V2".into(), Tensor::from(&p.v2));
    weights.insert("c2".into(), Tensor::from(&p.c2));
    let raw = RawFile {
        format_version: FORMAT_VERSION,
        dims: p.dims(),
        weights,
        training_log: file.training_log.clone(),
    };
    let mut bytes = serde_json::to_vec(&raw).expect("extractor serializes");
    bytes.push(b'\n');
    bytes
}

fn params_from_map(dims: ExtractorDims, mut m: TensorMap) -> Result<ExtractorParams, String> {
    let ExtractorDims {
        input_len: l,
        hidden: h,
        dim: d,
    } = dims;
    let params = ExtractorParams {
        w1: take_matrix(&mut m, "W1", h, l)?,
        b1: take_vector(&mut m, "b1", h)?,
        w2: take_matrix(&mut m, "W2", d, h)?,
        b2: take_vector(&mut m, "b2", d)?,
        v1: take_matrix(&mut m, "V1", h, d)?,
        c1: take_vector(&mut m, "c1", h)?,
        v2: take_matrix(&mut m, "V2", l, h)?,
        c2: take_vector(&mut m, "c2", l)?,
    };
    expect_consumed(&m)?;
    Ok(params)
}

pub fn load(bytes: &[u8], origin: &str) -> Result<ExtractorFile> {
    let raw: RawFile =
        serde_json::from_slice(bytes).map_err(|e| Error::format(origin, e.to_string()))?;
    if raw.format_version != FORMAT_VERSION {
        return Err(Error::format(
            origin,
            format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                raw.format_version
            ),
        ));
    }
    raw.dims
        .validate()
        .map_err(|e| Error::format(origin, e.to_string()))?;
    let params = params_from_map(raw.dims, raw.weights).map_err(|m| Error::format(origin, m))?;
    Ok(ExtractorFile {
        params,
        training_log: raw.training_log,
    })
}

pub fn save_file(file: &ExtractorFile, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &save(file))
}

pub fn load_file(path: impl AsRef<Path>) -> Result<ExtractorFile> {
    let path = path.as_ref();
    load(&read_file(path)?, &path.display().to_string())
}
