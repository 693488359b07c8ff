use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::synthetic::SyntheticFamilySpec;
use crate::data::read_file;
use crate::error::{Error, Result};
use crate::metrics::Metric;

/// Benchmark settings, read from a TOML file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchConfig {
    pub look_back: usize,
    pub horizons: Vec<usize>,
    pub metrics: Vec<Metric>,
    pub seed: u64,
    pub trials: usize,
    pub top_k: usize,
    /// Zoo directory, relative to the config file.
    pub zoo: Option<PathBuf>,
    /// CSV datasets, relative to the config file.
    pub datasets: Vec<PathBuf>,
    pub has_header: bool,
    /// Tail fraction of every channel reserved for evaluation.
    pub eval_fraction: f64,
    /// Cap on evaluation windows per (dataset, trial, horizon).
    pub max_windows: Option<usize>,
    /// Period of the seasonal naive baseline.
    pub season_period: usize,
    pub synthetic: Vec<SyntheticFamilySpec>,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            look_back: 36,
            horizons: vec![6, 8, 14, 18, 24, 36, 48],
            metrics: Metric::ALL.to_vec(),
            seed: 0,
            trials: 5,
            top_k: 3,
            zoo: None,
            datasets: Vec::new(),
            has_header: true,
            eval_fraction: 0.2,
            max_windows: None,
            season_period: 7,
            synthetic: Vec::new(),
        }
    }
}

impl BenchConfig {
    pub fn validate(&self) -> Result<()> {
        if self.horizons.is_empty() || self.horizons.contains(&0) {
            return Err(Error::InvalidConfig("horizons must be a nonempty list of counts >= 1".into()));
        }
        if self.trials == 0 || self.look_back == 0 || self.top_k == 0 || self.season_period == 0 {
            return Err(Error::InvalidConfig(
                "trials, look_back, top_k and season_period must be >= 1".into(),
            ));
        }
        if self.metrics.is_empty() {
            return Err(Error::InvalidConfig("at least one metric is required".into()));
        }
        if !(self.eval_fraction > 0.0 && self.eval_fraction < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "eval_fraction must be in (0, 1), got {}",
                self.eval_fraction
            )));
        }
        for s in &self.synthetic {
            s.validate()?;
        }
        Ok(())
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| Error::format(origin, e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// Reads a config file and resolves relative paths against its directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let bytes = read_file(path)?;
        let text = String::from_utf8(bytes).map_err(|e| Error::format(path.display(), e.to_string()))?;
        let mut cfg = Self::parse(&text, &path.display().to_string())?;
        let base = path.parent().unwrap_or(Path::new(""));
        cfg.zoo = cfg.zoo.map(|z| base.join(z));
        cfg.datasets = cfg.datasets.iter().map(|d| base.join(d)).collect();
        Ok(cfg)
    }
}
