//! JSON encoding of named weight tensors.

use std::collections::BTreeMap;

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

/// A vector or row-major matrix as nested JSON arrays of doubles.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Tensor {
    Vector(Vec<f64>),
    Matrix(Vec<Vec<f64>>),
}

pub type TensorMap = BTreeMap<String, Tensor>;

impl From<&Array1<f64>> for Tensor {
    fn from(a: &Array1<f64>) -> Self {
        Tensor::Vector(a.to_vec())
    }
}

impl From<&Array2<f64>> for Tensor {
    fn from(a: &Array2<f64>) -> Self {
        Tensor::Matrix(a.rows().into_iter().map(|r| r.to_vec()).collect())
    }
}

/// Removes `name` from `map` as a vector of length `len`.
pub fn take_vector(map: &mut TensorMap, name: &str, len: usize) -> Result<Array1<f64>, String> {
    match map.remove(name) {
        Some(Tensor::Vector(v)) if v.len() == len => finite(name, &v).map(|_| Array1::from(v)),
        Some(Tensor::Vector(v)) => Err(format!("tensor {name} has length {}, expected {len}", v.len())),
        // an empty matrix and an empty vector share the JSON encoding `[]`
        Some(Tensor::Matrix(m)) if m.is_empty() && len == 0 => Ok(Array1::zeros(0)),
        Some(Tensor::Matrix(_)) => Err(format!("tensor {name} should be a vector")),
        None => Err(format!("missing tensor {name}")),
    }
}

/// Removes `name` from `map` as a `rows x cols` matrix.
pub fn take_matrix(
    map: &mut TensorMap,
    name: &str,
    rows: usize,
    cols: usize,
) -> Result<Array2<f64>, String> {
    let m = match map.remove(name) {
        Some(Tensor::Matrix(m)) => m,
        Some(Tensor::Vector(v)) if v.is_empty() => Vec::new(),
        Some(Tensor::Vector(_)) => return Err(format!("tensor {name} should be a matrix")),
        None => return Err(format!("missing tensor {name}")),
    };
    if m.len() != rows || m.iter().any(|r| r.len() != cols) {
        return Err(format!("tensor {name} is not {rows}x{cols}"));
    }
    let flat: Vec<f64> = m.into_iter().flatten().collect();
    finite(name, &flat)?;
    Array2::from_shape_vec((rows, cols), flat).map_err(|e| e.to_string())
}

fn finite(name: &str, v: &[f64]) -> Result<(), String> {
    if v.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(format!("tensor {name} has non-finite entries"))
    }
}

/// Errors when tensors remain that the architecture does not declare.
pub fn expect_consumed(map: &TensorMap) -> Result<(), String> {
    match map.keys().next() {
        Some(extra) => Err(format!("unexpected tensor {extra}")),
        None => Ok(()),
    }
}
