use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MaskSpec {
    /// Fraction of time points zeroed in each view, in `(0, 1)`.
    pub mask_ratio: f64,
    pub num_views: usize,
    pub seed: u64,
}

impl Default for MaskSpec {
    fn default() -> Self {
        Self {
            mask_ratio: 0.25,
            num_views: 3,
            seed: 0,
        }
    }
}

impl MaskSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.mask_ratio > 0.0 && self.mask_ratio < 1.0) || self.num_views == 0 {
            return Err(Error::InvalidConfig(format!(
                "mask_ratio must be in (0, 1) and num_views >= 1, got {self:?}"
            )));
        }
        Ok(())
    }

    /// Positions masked per view for a window of length `len`.
    pub fn masked_count(&self, len: usize) -> usize {
        (self.mask_ratio * len as f64).floor() as usize
    }
}

/// `num_views` copies of `window`, each with `floor(mask_ratio * L)` distinct
/// positions set to 0 (the mean of a normalized window).
pub fn mask_series(window: &[f64], spec: &MaskSpec) -> Result<Vec<Vec<f64>>> {
    spec.validate()?;
    let mut rng = rng::seeded(spec.seed);
    let k = spec.masked_count(window.len());
    Ok((0..spec.num_views)
        .map(|_| {
            let mut view = window.to_vec();
            for i in index::sample(&mut rng, window.len(), k) {
                view[i] = 0.0;
            }
            view
        })
        .collect())
}
