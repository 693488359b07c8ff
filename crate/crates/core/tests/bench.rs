mod common;

use std::collections::BTreeMap;
use std::sync::Arc;

use common::fixtures::entry;
use seqfusion_core::bench::{generate_synthetic, run_benchmark, BenchConfig, SyntheticFamilySpec, SyntheticKind};
use seqfusion_core::extractor::{ExtractorDims, ExtractorParams};
use seqfusion_core::forecasters::{Forecaster, ForecasterSpec, Predict};
use seqfusion_core::metrics::Metric;
use seqfusion_core::rng;
use seqfusion_core::series::Dataset;
use seqfusion_core::zoo::Zoo;

fn last_zoo(t: usize) -> Zoo {
    let last: Arc<dyn Predict> = Arc::new(Forecaster::baseline(ForecasterSpec::last(t, 12)).unwrap());
    let dims = ExtractorDims {
        input_len: t,
        hidden: 6,
        dim: 3,
    };
    Zoo::from_parts(
        ExtractorParams::init(dims, &mut rng::seeded(0)),
        vec![entry("last", t, 12, vec![1.0, 0.0, 0.0])],
        vec![last],
    )
    .unwrap()
}

fn sine7(len: usize) -> Dataset {
    let mut spec = SyntheticFamilySpec::new("sine7", SyntheticKind::Sine, 7, len);
    spec.channels = 2;
    spec.amplitude = 3.0;
    generate_synthetic(&spec).unwrap()
}

fn config() -> BenchConfig {
    BenchConfig {
        horizons: vec![6, 12, 24],
        trials: 3,
        seed: 4,
        ..BenchConfig::default()
    }
}

#[test]
fn random_walk_variance_grows_linearly() {
    let sigma: f64 = 0.5;
    let steps = [50, 200];
    let mut sums = [0.0; 2];
    let runs = 1000;
    for seed in 0..runs {
        let spec = SyntheticFamilySpec {
            noise_std: sigma,
            seed,
            ..SyntheticFamilySpec::new("rw", SyntheticKind::RandomWalk, 1, 201)
        };
        let x = generate_synthetic(&spec).unwrap();
        for (s, &t) in sums.iter_mut().zip(&steps) {
            *s += x.series.channel(0)[t].powi(2);
        }
    }
    for (s, &t) in sums.iter().zip(&steps) {
        let var = s / runs as f64;
        let expected = t as f64 * sigma * sigma;
        assert!((var - expected).abs() <= 0.1 * expected, "step {t}: {var} vs {expected}");
    }
}

#[test]
fn last_only_zoo_matches_the_last_baseline_and_seasonal_naive_is_exact() {
    let report = run_benchmark(&config(), &last_zoo(36), &[sine7(800)]).unwrap();
    let get = |method: &str, h: usize, metric: Metric| {
        report
            .results
            .iter()
            .find(|r| r.method == method && r.horizon == h && r.metric == metric)
            .unwrap()
            .mean
    };
    for h in [6, 12, 24] {
        assert_eq!(get("seasonal_naive", h, Metric::Mse), 0.0);
        let (s, l) = (get("seqfusion", h, Metric::Mse), get("last", h, Metric::Mse));
        assert!((s - l).abs() <= 1e-12 * l, "H = {h}: {s} vs {l}");
        assert!(l > 0.1);
    }
}

#[test]
fn report_means_match_a_recount_of_the_window_csv() {
    let mut other = sine7(600);
    other.name = "short".into();
    let report = run_benchmark(&config(), &last_zoo(36), &[sine7(800), other]).unwrap();
    let csv = report.windows_csv();
    let mut reader = csv::Reader::from_reader(csv.as_bytes());
    let headers = reader.headers().unwrap().clone();
    let col = |name: &str| headers.iter().position(|h| h == name).unwrap();
    let mut sums: BTreeMap<(String, String, usize, String), (f64, usize)> = BTreeMap::new();
    for rec in reader.records() {
        let rec = rec.unwrap();
        for metric in Metric::ALL {
            let cell = &rec[col(metric.name())];
            if cell.is_empty() {
                continue;
            }
            let key = (
                rec[col("dataset")].to_string(),
                rec[col("method")].to_string(),
                rec[col("horizon")].parse().unwrap(),
                metric.name().to_string(),
            );
            let e = sums.entry(key).or_default();
            e.0 += cell.parse::<f64>().unwrap();
            e.1 += 1;
        }
    }
    assert_eq!(sums.len(), report.results.len());
    for r in &report.results {
        let (s, n) = sums[&(r.dataset.clone(), r.method.clone(), r.horizon, r.metric.name().to_string())];
        assert_eq!(n, r.windows);
        assert!((s / n as f64 - r.mean).abs() <= 1e-9 * r.mean.abs().max(1.0));
    }
}

#[test]
fn same_config_gives_identical_bytes() {
    let data = [sine7(700)];
    let a = run_benchmark(&config(), &last_zoo(36), &data).unwrap();
    let b = run_benchmark(&config(), &last_zoo(36), &data).unwrap();
    assert_eq!(a.to_json(), b.to_json());
    assert_eq!(a.windows_csv(), b.windows_csv());
}

#[test]
fn short_tails_skip_the_horizon() {
    let cfg = BenchConfig {
        horizons: vec![12, 48],
        ..config()
    };
    let report = run_benchmark(&cfg, &last_zoo(36), &[sine7(400)]).unwrap();
    assert_eq!(report.skipped, vec!["sine7: horizon 48".to_string()]);
    assert!(report.results.iter().all(|r| r.horizon == 12));
}

#[test]
fn duplicate_dataset_names_are_rejected() {
    let err = run_benchmark(&config(), &last_zoo(36), &[sine7(800), sine7(600)]).unwrap_err();
    assert!(err.to_string().contains("duplicate dataset name sine7"));
}

#[test]
fn look_back_must_match_the_zoo() {
    let cfg = BenchConfig {
        look_back: 24,
        ..config()
    };
    assert!(run_benchmark(&cfg, &last_zoo(36), &[sine7(800)]).is_err());
}
