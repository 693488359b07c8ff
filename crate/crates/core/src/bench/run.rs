use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::BenchConfig;
use crate::data::write_file;
use crate::error::{Error, Result};
use crate::forecasters::{Forecaster, ForecasterSpec, Predict};
use crate::fusion::{forecast_multivariate, FusionConfig};
use crate::metrics::Metric;
use crate::rng;
use crate::series::{Dataset, MultivariateSeries};
use crate::zoo::Zoo;

/// Published reference scores recorded next to matching datasets; never gating.
const REFERENCES: &[(&str, &str, f64)] = &[("ETTh1", "mse", 0.6001)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Seqfusion,
    Last,
    Mean,
    SeasonalNaive,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Seqfusion, Method::Last, Method::Mean, Method::SeasonalNaive];

    pub fn name(self) -> &'static str {
        match self {
            Method::Seqfusion => "seqfusion",
            Method::Last => "last",
            Method::Mean => "mean",
            Method::SeasonalNaive => "seasonal_naive",
        }
    }
}

/// One evaluation window: `look_back` inputs then `horizon` truth values,
/// starting at `start` in every channel.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EvalWindow {
    pub start: usize,
    pub look_back: usize,
    pub horizon: usize,
}

impl EvalWindow {
    pub fn split(&self, data: &MultivariateSeries) -> Result<(MultivariateSeries, MultivariateSeries)> {
        let mid = self.start + self.look_back;
        let end = mid + self.horizon;
        let input = data.map_channels(|c| Ok(c[self.start..mid].to_vec()))?;
        let truth = data.map_channels(|c| Ok(c[mid..end].to_vec()))?;
        Ok((input, truth))
    }
}

/// Non-overlapping windows inside the last `eval_fraction` of the series.
/// `offset` shifts the first window within the slack left over after packing.
pub fn eval_windows(len: usize, look_back: usize, horizon: usize, eval_fraction: f64, offset: usize) -> Vec<EvalWindow> {
    let region_start = len - (len as f64 * eval_fraction).floor() as usize;
    let region = len - region_start;
    let span = look_back + horizon;
    let count = region / span;
    if count == 0 {
        return Vec::new();
    }
    let slack = region - count * span;
    let first = region_start + offset.min(slack);
    (0..count)
        .map(|i| EvalWindow {
            start: first + i * span,
            look_back,
            horizon,
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRecord {
    pub dataset: String,
    pub trial: usize,
    pub horizon: usize,
    pub window: usize,
    pub start: usize,
    pub method: String,
    /// Metric values in `BenchConfig::metrics` order; `None` where undefined.
    pub values: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub dataset: String,
    pub method: String,
    pub horizon: usize,
    pub metric: Metric,
    /// Mean over every window of every trial.
    pub mean: f64,
    /// Population standard deviation of the per-trial means.
    pub trial_std: f64,
    pub windows: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub dataset: String,
    pub method: String,
    pub metric: Metric,
    /// Uniform mean of the per-horizon means.
    pub mean: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ZooPerformance {
    pub dataset: String,
    pub horizon: usize,
    pub model_id: String,
    pub mse: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub dataset: String,
    pub metric: String,
    pub published: f64,
    pub measured: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub metrics: Vec<Metric>,
    pub results: Vec<ResultRow>,
    pub summary: Vec<SummaryRow>,
    pub zoo_distribution: Vec<ZooPerformance>,
    pub zoo_bytes: Option<u64>,
    pub references: Vec<Reference>,
    pub skipped: Vec<String>,
    #[serde(skip)]
    pub windows: Vec<WindowRecord>,
}

struct Job<'a> {
    data: &'a Dataset,
    trial: usize,
    index: usize,
    window: EvalWindow,
}

fn baseline_forecast(method: Method, cfg: &BenchConfig, input: &MultivariateSeries, h: usize) -> Result<MultivariateSeries> {
    let t = cfg.look_back;
    let spec = match method {
        Method::Last => ForecasterSpec::last(t, h),
        Method::Mean => ForecasterSpec::mean(t, h),
        Method::SeasonalNaive => ForecasterSpec::seasonal_naive(t, h, cfg.season_period),
        Method::Seqfusion => unreachable!("not a baseline"),
    };
    let model = Forecaster::baseline(spec)?;
    input.map_channels(|c| model.predict(c))
}

fn score(metrics: &[Metric], truth: &MultivariateSeries, pred: &MultivariateSeries) -> Result<Vec<Option<f64>>> {
    metrics
        .iter()
        .map(|m| match m.evaluate(truth, pred) {
            Ok(v) => Ok(Some(v)),
            Err(Error::UndefinedMape) => Ok(None),
            Err(e) => Err(e),
        })
        .collect()
}

fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Evaluates the zoo and the baselines on non-overlapping tail windows of
/// every dataset, for every trial and horizon. Metrics are on raw scale.
pub fn run_benchmark(cfg: &BenchConfig, zoo: &Zoo, datasets: &[Dataset]) -> Result<Report> {
    cfg.validate()?;
    if zoo.input_len() != cfg.look_back {
        return Err(Error::LengthMismatch {
            expected: zoo.input_len(),
            actual: cfg.look_back,
        });
    }
    for (i, d) in datasets.iter().enumerate() {
        if datasets[..i].iter().any(|x| x.name == d.name) {
            return Err(Error::InvalidConfig(format!("duplicate dataset name {}", d.name)));
        }
    }
    let top_k = cfg.top_k.min(zoo.len());
    let mut skipped = Vec::new();
    let mut jobs = Vec::new();
    for data in datasets {
        for trial in 0..cfg.trials {
            let mut r = rng::derived(cfg.seed, trial as u64);
            for &h in &cfg.horizons {
                let offset = r.random_range(0..cfg.look_back + h);
                let mut windows = eval_windows(data.series.len(), cfg.look_back, h, cfg.eval_fraction, offset);
                if let Some(cap) = cfg.max_windows {
                    windows.truncate(cap);
                }
                if windows.is_empty() {
                    if trial == 0 {
                        tracing::warn!(dataset = %data.name, horizon = h, "evaluation tail too short, horizon skipped");
                        skipped.push(format!("{}: horizon {h}", data.name));
                    }
                    continue;
                }
                for (index, window) in windows.into_iter().enumerate() {
                    jobs.push(Job {
                        data,
                        trial,
                        index,
                        window,
                    });
                }
            }
        }
    }

    let per_job = jobs
        .par_iter()
        .map(|job| -> Result<(Vec<WindowRecord>, Vec<(usize, f64)>)> {
            let (input, truth) = job.window.split(&job.data.series)?;
            let h = job.window.horizon;
            let mut records = Vec::with_capacity(Method::ALL.len());
            for method in Method::ALL {
                let pred = match method {
                    Method::Seqfusion => forecast_multivariate(zoo, &input, &FusionConfig::new(h, top_k))?.forecast,
                    _ => baseline_forecast(method, cfg, &input, h)?,
                };
                records.push(WindowRecord {
                    dataset: job.data.name.clone(),
                    trial: job.trial,
                    horizon: h,
                    window: job.index,
                    start: job.window.start,
                    method: method.name().to_string(),
                    values: score(&cfg.metrics, &truth, &pred)?,
                });
            }
            let mut alone = Vec::with_capacity(zoo.len());
            for (m, entry) in zoo.entries().iter().enumerate() {
                let mut fc = FusionConfig::new(h, 1);
                for c in 0..input.num_channels() {
                    fc.overrides.insert(c, vec![entry.model_id.clone()]);
                }
                let pred = forecast_multivariate(zoo, &input, &fc)?.forecast;
                alone.push((m, Metric::Mse.evaluate(&truth, &pred)?));
            }
            Ok((records, alone))
        })
        .collect::<Result<Vec<_>>>()?;

    // aggregation runs sequentially in job order so the bytes are reproducible
    type Key = (String, String, usize, usize);
    let mut by_trial: BTreeMap<(Key, usize), Vec<f64>> = BTreeMap::new();
    let mut all: BTreeMap<Key, Vec<f64>> = BTreeMap::new();
    let mut dist: BTreeMap<(String, usize, usize), Vec<f64>> = BTreeMap::new();
    let mut windows = Vec::new();
    for (job, (records, alone)) in jobs.iter().zip(per_job) {
        for rec in &records {
            for (mi, v) in rec.values.iter().enumerate() {
                if let Some(v) = v {
                    let key = (rec.dataset.clone(), rec.method.clone(), rec.horizon, mi);
                    all.entry(key.clone()).or_default().push(*v);
                    by_trial.entry((key, rec.trial)).or_default().push(*v);
                }
            }
        }
        for (m, v) in alone {
            dist.entry((job.data.name.clone(), job.window.horizon, m)).or_default().push(v);
        }
        windows.extend(records);
    }

    let order = |name: &str| datasets.iter().position(|d| d.name == name).unwrap_or(usize::MAX);
    let method_rank = |name: &str| Method::ALL.iter().position(|m| m.name() == name).unwrap_or(usize::MAX);
    let mut keys: Vec<&Key> = all.keys().collect();
    keys.sort_by_key(|(d, m, h, mi)| (order(d), method_rank(m), *h, *mi));

    let mut results = Vec::new();
    for key in keys {
        let values = &all[key];
        let trial_means: Vec<f64> = (0..cfg.trials)
            .filter_map(|t| by_trial.get(&(key.clone(), t)).map(|v| mean(v)))
            .collect();
        let tm = mean(&trial_means);
        let var = trial_means.iter().map(|x| (x - tm) * (x - tm)).sum::<f64>() / trial_means.len() as f64;
        results.push(ResultRow {
            dataset: key.0.clone(),
            method: key.1.clone(),
            horizon: key.2,
            metric: cfg.metrics[key.3],
            mean: mean(values),
            trial_std: var.sqrt(),
            windows: values.len(),
        });
    }

    let mut summary: Vec<SummaryRow> = Vec::new();
    for row in &results {
        if summary
            .iter()
            .any(|s| s.dataset == row.dataset && s.method == row.method && s.metric == row.metric)
        {
            continue;
        }
        let per_h: Vec<f64> = results
            .iter()
            .filter(|r| r.dataset == row.dataset && r.method == row.method && r.metric == row.metric)
            .map(|r| r.mean)
            .collect();
        summary.push(SummaryRow {
            dataset: row.dataset.clone(),
            method: row.method.clone(),
            metric: row.metric,
            mean: mean(&per_h),
        });
    }

    let mut zoo_distribution: Vec<ZooPerformance> = dist
        .into_iter()
        .map(|((dataset, horizon, m), v)| ZooPerformance {
            dataset,
            horizon,
            model_id: zoo.entries()[m].model_id.clone(),
            mse: mean(&v),
        })
        .collect();
    zoo_distribution.sort_by_key(|z| (order(&z.dataset), z.horizon, zoo.index_of(&z.model_id)));

    let references = REFERENCES
        .iter()
        .filter(|(d, _, _)| datasets.iter().any(|x| x.name == *d))
        .map(|(d, metric, published)| Reference {
            dataset: d.to_string(),
            metric: metric.to_string(),
            published: *published,
            measured: summary
                .iter()
                .find(|s| s.dataset == *d && s.method == "seqfusion" && s.metric.name() == *metric)
                .map(|s| s.mean),
        })
        .collect();

    Ok(Report {
        metrics: cfg.metrics.clone(),
        results,
        summary,
        zoo_distribution,
        zoo_bytes: zoo.disk_bytes(),
        references,
        skipped,
        windows,
    })
}

fn cell(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl Report {
    pub fn windows_csv(&self) -> String {
        let mut out = String::from("dataset,trial,horizon,window,start,method");
        for m in &self.metrics {
            out.push(',');
            out.push_str(m.name());
        }
        out.push('\n');
        for w in &self.windows {
            let _ = write!(out, "{},{},{},{},{},{}", w.dataset, w.trial, w.horizon, w.window, w.start, w.method);
            for v in &w.values {
                out.push(',');
                out.push_str(&cell(*v));
            }
            out.push('\n');
        }
        out
    }

    pub fn results_csv(&self) -> String {
        let mut out = String::from("dataset,method,horizon,metric,mean,trial_std,windows\n");
        for r in &self.results {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{}",
                r.dataset,
                r.method,
                r.horizon,
                r.metric.name(),
                r.mean,
                r.trial_std,
                r.windows
            );
        }
        out
    }

    pub fn summary_csv(&self) -> String {
        let mut out = String::from("dataset,method,metric,mean\n");
        for s in &self.summary {
            let _ = writeln!(out, "{},{},{},{}", s.dataset, s.method, s.metric.name(), s.mean);
        }
        out
    }

    pub fn zoo_distribution_csv(&self) -> String {
        let mut out = String::from("dataset,horizon,model_id,mse\n");
        for z in &self.zoo_distribution {
            let _ = writeln!(out, "{},{},{},{}", z.dataset, z.horizon, z.model_id, z.mse);
        }
        out
    }

    pub fn to_json(&self) -> Vec<u8> {
        let mut bytes = serde_json::to_vec_pretty(self).expect("report serializes");
        bytes.push(b'\n');
        bytes
    }

    /// Writes `report.json`, `results.csv`, `summary.csv`, `windows.csv` and
    /// `zoo_distribution.csv` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<()> {
        write_file(&dir.join("report.json"), &self.to_json())?;
        write_file(&dir.join("results.csv"), self.results_csv().as_bytes())?;
        write_file(&dir.join("summary.csv"), self.summary_csv().as_bytes())?;
        write_file(&dir.join("windows.csv"), self.windows_csv().as_bytes())?;
        write_file(&dir.join("zoo_distribution.csv"), self.zoo_distribution_csv().as_bytes())
    }
}
