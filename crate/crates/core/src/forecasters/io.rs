//! Model file: `{format_version, spec, source_dataset, weights: {name: nested arrays}}`.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Architecture, Forecaster, ForecasterSpec, ModelWeights};
use crate::data::{read_file, write_file};
use crate::error::{Error, Result};
use crate::tensor::{expect_consumed, take_matrix, take_vector, Tensor, TensorMap};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format_version: u32,
    spec: ForecasterSpec,
    source_dataset: String,
    weights: TensorMap,
}

fn tensor_map(weights: &ModelWeights) -> TensorMap {
    let mut map = TensorMap::new();
    match weights {
        ModelWeights::Linear { w, b } => {
            map.insert("W".into(), Tensor::from(w));
            map.insert("b".into(), Tensor::from(b));
        }
        ModelWeights::PatchMlp {
            embed,
            embed_bias,
            out,
            out_bias,
        } => {
            map.insert("P_embed".into(), Tensor::from(embed));
            map.insert("p_bias".into(), Tensor::from(embed_bias));
            map.insert("W_out".into(), Tensor::from(out));
            map.insert("b_out".into(), Tensor::from(out_bias));
        }
        ModelWeights::Empty => {}
    }
    map
}

fn weights_from_map(spec: &ForecasterSpec, mut map: TensorMap) -> Result<ModelWeights, String> {
    let (t, h) = (spec.input_len, spec.horizon);
    let weights = match spec.architecture {
        Architecture::Linear => ModelWeights::Linear {
            w: take_matrix(&mut map, "W", h, t)?,
            b: take_vector(&mut map, "b", h)?,
        },
        Architecture::PatchMlp => {
            let pl = spec.patch_len.unwrap_or(0);
            let hid = spec.hidden_dim.unwrap_or(0);
            ModelWeights::PatchMlp {
                embed: take_matrix(&mut map, "P_embed", hid, pl)?,
                embed_bias: take_vector(&mut map, "p_bias", hid)?,
                out: take_matrix(&mut map, "W_out", h, hid * spec.num_patches())?,
                out_bias: take_vector(&mut map, "b_out", h)?,
            }
        }
        _ => ModelWeights::Empty,
    };
    expect_consumed(&map)?;
    Ok(weights)
}

pub fn save(model: &Forecaster) -> Vec<u8> {
    let file = ModelFile {
        format_version: FORMAT_VERSION,
        spec: model.spec.clone(),
        source_dataset: model.source_dataset.clone(),
        weights: tensor_map(&model.weights),
    };
    let mut bytes = serde_json::to_vec(&file).expect("model serializes");
    bytes.push(b'\n');
    bytes
}

/// Parses a model file; `origin` labels error messages.
pub fn load(bytes: &[u8], origin: &str) -> Result<Forecaster> {
    let file: ModelFile =
        serde_json::from_slice(bytes).map_err(|e| Error::format(origin, e.to_string()))?;
    if file.format_version != FORMAT_VERSION {
        return Err(Error::format(
            origin,
            format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                file.format_version
            ),
        ));
    }
    file.spec
        .validate()
        .map_err(|e| Error::format(origin, e.to_string()))?;
    let weights = weights_from_map(&file.spec, file.weights).map_err(|m| {
        Error::format(
            origin,
            format!("{m} for a {:?} model", file.spec.architecture),
        )
    })?;
    Forecaster::new(file.spec, file.source_dataset, weights)
}

pub fn save_file(model: &Forecaster, path: impl AsRef<Path>) -> Result<()> {
    write_file(path.as_ref(), &save(model))
}

pub fn load_file(path: impl AsRef<Path>) -> Result<Forecaster> {
    let path = path.as_ref();
    load(&read_file(path)?, &path.display().to_string())
}
