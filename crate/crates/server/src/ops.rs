//! The operations behind each route, as plain blocking functions.

use std::collections::BTreeMap;

use seqfusion_core::api::*;
use seqfusion_core::bench::{build_suite_zoo, generate_synthetic, run_benchmark, SuiteConfig};
use seqfusion_core::error::{Error, Result};
use seqfusion_core::extractor::{self, pca_project, train_extractor, ExtractorFile, Representation};
use seqfusion_core::forecasters::{self, train_logged, ForecasterSpec};
use seqfusion_core::fusion::{forecast_csv, forecast_multivariate};
use seqfusion_core::metrics::Metric;
use seqfusion_core::series::{normalize, trim_to_last, Dataset};
use seqfusion_core::zoo::{build_zoo_files, compute_transfer_matrix, ModelBytes, TransferMatrix, Zoo, TRAIN_FRACTION};

fn text(bytes: Vec<u8>) -> String {
    String::from_utf8(bytes).expect("artifact writers emit UTF-8")
}

fn parse_all(payloads: &[DatasetPayload]) -> Result<Vec<Dataset>> {
    payloads.iter().map(DatasetPayload::parse).collect()
}

pub fn synth(req: SynthRequest) -> Result<DatasetPayload> {
    Ok(DatasetPayload::from_dataset(&generate_synthetic(&req.family)?))
}

pub fn train_ptm(req: TrainPtmRequest) -> Result<TrainPtmResponse> {
    let data = req.dataset.parse()?;
    let (model, log) = train_logged(&req.spec, &data, &req.train)?;
    Ok(TrainPtmResponse {
        model: text(forecasters::save(&model)),
        log,
    })
}

pub fn transfer_matrix(req: TransferMatrixRequest) -> Result<TransferMatrix> {
    compute_transfer_matrix(&parse_all(&req.datasets)?, &req.spec, &req.train)
}

pub fn train_extractor_op(req: TrainExtractorRequest) -> Result<TrainExtractorResponse> {
    let data = parse_all(&req.datasets)?;
    let trained = train_extractor(&data, &req.transfer, req.dims, &req.config, &req.mask)?;
    let file = ExtractorFile {
        params: trained.params,
        training_log: trained.log.clone(),
    };
    Ok(TrainExtractorResponse {
        extractor: text(extractor::save(&file)),
        log: trained.log,
    })
}

pub fn build_zoo(req: BuildZooRequest) -> Result<FileBundle> {
    let models: Vec<ModelBytes> = req
        .models
        .into_iter()
        .map(|f| ModelBytes {
            model_id: f.name,
            bytes: f.content.into_bytes(),
        })
        .collect();
    let sources = parse_all(&req.sources)?;
    let (_, files) = build_zoo_files(&models, req.extractor.as_bytes(), &sources, req.samples, req.seed)?;
    FileBundle::from_zoo_files(&files)
}

pub fn embed(zoo: &Zoo, req: &EmbedRequest) -> Result<EmbedResponse> {
    let mut labels = Vec::new();
    let mut reprs: Vec<Representation> = Vec::new();
    for e in zoo.entries() {
        labels.push((e.model_id.clone(), PointKind::Ptm));
        reprs.push(e.representation.clone());
    }
    let l = zoo.extractor().input_len();
    for data in parse_all(&req.inputs)? {
        for c in 0..data.series.num_channels() {
            let window = trim_to_last(data.series.channel(c), l)?;
            let (norm, _) = normalize(&window)?;
            labels.push((format!("{}/{}", data.name, data.series.channel_label(c)), PointKind::Variate));
            reprs.push(zoo.extractor().encode(&norm)?);
        }
    }
    let (vectors, explained_variance) = match req.pca {
        Some(k) => {
            let p = pca_project(&reprs, k)?;
            (p.points, Some(p.explained_variance))
        }
        None => (reprs.into_iter().map(|r| r.0).collect(), None),
    };
    let points = labels
        .into_iter()
        .zip(vectors)
        .map(|((label, kind), vector)| EmbeddedPoint { label, kind, vector })
        .collect();
    Ok(EmbedResponse {
        points,
        explained_variance,
    })
}

pub fn forecast(zoo: &Zoo, req: &ForecastRequest) -> Result<ForecastResponse> {
    let input = req.input.parse()?;
    let out = forecast_multivariate(zoo, &input.series, &req.config)?;
    Ok(ForecastResponse {
        csv: forecast_csv(&out.forecast),
        provenance: out.provenance,
    })
}

pub fn evaluate(req: EvaluateRequest) -> Result<EvaluateResponse> {
    let truth = req.truth.parse()?;
    let pred = req.pred.parse()?;
    let mut scores = BTreeMap::new();
    for m in req.metrics {
        let v = match m.evaluate(&truth.series, &pred.series) {
            Ok(v) => Some(v),
            Err(Error::UndefinedMape) if m == Metric::Mape => None,
            Err(e) => return Err(e),
        };
        scores.insert(m, v);
    }
    Ok(EvaluateResponse { scores })
}

/// Runs the benchmark on the given datasets plus the configured synthetic
/// families. Without a zoo, one linear model per dataset and an extractor
/// are fitted on the training heads first.
pub fn benchmark(zoo: Option<&Zoo>, req: &BenchmarkRequest) -> Result<BenchmarkResponse> {
    let cfg = &req.config;
    if cfg.zoo.is_some() || !cfg.datasets.is_empty() {
        return Err(Error::InvalidConfig(
            "zoo and dataset paths must be resolved by the client and sent as content".into(),
        ));
    }
    let mut datasets = parse_all(&req.datasets)?;
    for spec in &cfg.synthetic {
        datasets.push(generate_synthetic(spec)?);
    }
    let fitted;
    let zoo = match zoo {
        Some(z) => z,
        None => {
            if cfg.eval_fraction > 1.0 - TRAIN_FRACTION + 1e-12 {
                return Err(Error::InvalidConfig(format!(
                    "eval_fraction {} would overlap the training heads of the fitted zoo (at most {:.2})",
                    cfg.eval_fraction,
                    1.0 - TRAIN_FRACTION
                )));
            }
            let mut suite = SuiteConfig {
                ptm: ForecasterSpec::linear(cfg.look_back, SuiteConfig::default().ptm.horizon),
                seed: cfg.seed,
                ..SuiteConfig::default()
            };
            suite.train.seed = cfg.seed;
            suite.extractor.seed = cfg.seed;
            fitted = build_suite_zoo(&datasets, &suite)?;
            &fitted.zoo
        }
    };
    let report = run_benchmark(cfg, zoo, &datasets)?;
    let files = [
        ("report.json", text(report.to_json())),
        ("results.csv", report.results_csv()),
        ("summary.csv", report.summary_csv()),
        ("windows.csv", report.windows_csv()),
        ("zoo_distribution.csv", report.zoo_distribution_csv()),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    Ok(BenchmarkResponse { files })
}
