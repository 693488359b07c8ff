//! Independent oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

use rand::Rng;
use seqfusion_core::rng;

pub const FD_STEP: f64 = 1e-5;
pub const FD_REL_TOL: f64 = 1e-4;
/// Gradient magnitudes below this are compared on an absolute scale.
pub const FD_FLOOR: f64 = 1e-6;

/// Central finite difference of `f` at `params` along every coordinate.
pub fn numeric_grad(f: &dyn Fn(&[f64]) -> f64, params: &[f64]) -> Vec<f64> {
    let mut x = params.to_vec();
    (0..x.len())
        .map(|i| {
            let orig = x[i];
            x[i] = orig + FD_STEP;
            let up = f(&x);
            x[i] = orig - FD_STEP;
            let down = f(&x);
            x[i] = orig;
            (up - down) / (2.0 * FD_STEP)
        })
        .collect()
}

pub fn rel_err(a: f64, n: f64) -> f64 {
    (a - n).abs() / a.abs().max(n.abs()).max(FD_FLOOR)
}

/// Largest relative error between analytic and numeric gradients.
pub fn max_rel_err(analytic: &[f64], numeric: &[f64]) -> f64 {
    assert_eq!(analytic.len(), numeric.len());
    analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| rel_err(*a, *n))
        .fold(0.0, f64::max)
}

pub fn uniform_vec(r: &mut rng::Rng, n: usize, a: f64) -> Vec<f64> {
    (0..n).map(|_| r.random_range(-a..a)).collect()
}

pub fn sine(len: usize, period: f64, phase: f64) -> Vec<f64> {
    (0..len)
        .map(|t| (2.0 * std::f64::consts::PI * t as f64 / period + phase).sin())
        .collect()
}

/// Cosine similarity written out directly (zero-norm pairs score 0).
pub fn cosine_ref(u: &[f64], v: &[f64]) -> f64 {
    let mut dot = 0.0;
    let mut nu = 0.0;
    let mut nv = 0.0;
    for i in 0..u.len() {
        dot += u[i] * v[i];
        nu += u[i] * u[i];
        nv += v[i] * v[i];
    }
    if nu == 0.0 || nv == 0.0 {
        0.0
    } else {
        dot / (nu.sqrt() * nv.sqrt())
    }
}

/// Plain nested-loop matrix-vector product `m x + b`, `m` row-major `rows x x.len()`.
pub fn affine_ref(m: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let cols = x.len();
    (0..b.len())
        .map(|r| {
            let mut acc = b[r];
            for c in 0..cols {
                acc += m[r * cols + c] * x[c];
            }
            acc
        })
        .collect()
}

pub fn mse_ref(truth: &[Vec<f64>], pred: &[Vec<f64>]) -> f64 {
    let mut total = 0.0;
    let mut n = 0;
    for c in 0..truth.len() {
        for i in 0..truth[c].len() {
            total += (truth[c][i] - pred[c][i]).powi(2);
            n += 1;
        }
    }
    total / n as f64
}

pub fn smape_ref(truth: &[Vec<f64>], pred: &[Vec<f64>]) -> f64 {
    let mut per_channel = Vec::new();
    for c in 0..truth.len() {
        let mut s = 0.0;
        for i in 0..truth[c].len() {
            let d = truth[c][i].abs() + pred[c][i].abs();
            if d >= 1e-8 {
                s += (truth[c][i] - pred[c][i]).abs() / d;
            }
        }
        per_channel.push(200.0 * s / truth[c].len() as f64);
    }
    per_channel.iter().sum::<f64>() / per_channel.len() as f64
}

pub fn mape_ref(truth: &[Vec<f64>], pred: &[Vec<f64>]) -> f64 {
    let mut per_channel = Vec::new();
    for c in 0..truth.len() {
        let mut s = 0.0;
        let mut n = 0;
        for i in 0..truth[c].len() {
            if truth[c][i].abs() >= 1e-8 {
                s += (truth[c][i] - pred[c][i]).abs() / truth[c][i].abs();
                n += 1;
            }
        }
        if n > 0 {
            per_channel.push(100.0 * s / n as f64);
        }
    }
    per_channel.iter().sum::<f64>() / per_channel.len() as f64
}

use ndarray::Array2;
use seqfusion_core::forecasters::{loss_and_grad, ForecasterSpec, ModelWeights};
use seqfusion_core::params::Params;

/// Pre-activation margin below which a random instance is redrawn; finite
/// differences across a ReLU kink do not estimate the one-sided derivative.
pub const KINK_MARGIN: f64 = 1e-3;

pub struct ForecasterInstance {
    pub spec: ForecasterSpec,
    pub weights: ModelWeights,
    pub inputs: Array2<f64>,
    pub targets: Array2<f64>,
}

fn patch_preactivations_ref(spec: &ForecasterSpec, flat: &[f64], x: &[f64]) -> Vec<f64> {
    let pl = spec.patch_len.unwrap();
    let hid = spec.hidden_dim.unwrap();
    let embed = &flat[..hid * pl];
    let bias = &flat[hid * pl..hid * pl + hid];
    let mut out = Vec::new();
    for p in 0..spec.num_patches() {
        let patch: Vec<f64> = (0..pl).map(|i| x.get(p * pl + i).copied().unwrap_or(0.0)).collect();
        out.extend(affine_ref(embed, bias, &patch));
    }
    out
}

/// Random small instance; patch-MLP instances avoid ReLU kinks by `KINK_MARGIN`.
pub fn random_forecaster_instance(patch: bool, seed: u64) -> ForecasterInstance {
    let mut r = rng::derived(seed, 77);
    loop {
        let t = r.random_range(2..=20);
        let h = r.random_range(1..=6);
        let b = r.random_range(1..=6);
        let spec = if patch {
            ForecasterSpec::patch_mlp(t, h, r.random_range(1..=t), r.random_range(1..=6))
        } else {
            ForecasterSpec::linear(t, h)
        };
        let mut weights = ModelWeights::zeros(&spec);
        let flat = uniform_vec(&mut r, weights.num_params(), 1.0);
        weights.set_flat(&flat);
        let inputs = Array2::from_shape_vec((b, t), uniform_vec(&mut r, b * t, 2.0)).unwrap();
        let targets = Array2::from_shape_vec((b, h), uniform_vec(&mut r, b * h, 2.0)).unwrap();
        if patch {
            let near_kink = inputs.rows().into_iter().any(|row| {
                patch_preactivations_ref(&spec, &flat, row.as_slice().unwrap())
                    .iter()
                    .any(|a| a.abs() < KINK_MARGIN)
            });
            if near_kink {
                continue;
            }
        }
        return ForecasterInstance {
            spec,
            weights,
            inputs,
            targets,
        };
    }
}

/// Max relative error of the analytic forecaster gradient against central differences.
pub fn forecaster_grad_error(inst: &ForecasterInstance) -> f64 {
    let (_, grad) = loss_and_grad(&inst.spec, &inst.weights, inst.inputs.view(), inst.targets.view());
    let f = |flat: &[f64]| {
        let mut w = inst.weights.clone();
        w.set_flat(flat);
        loss_and_grad(&inst.spec, &w, inst.inputs.view(), inst.targets.view()).0
    };
    let numeric = numeric_grad(&f, &inst.weights.to_flat());
    max_rel_err(&grad.to_flat(), &numeric)
}

use seqfusion_core::extractor::{mask_series, objective, ExtractorDims, ExtractorParams, MaskSpec, ObjectiveBatch};

/// Straight-line encoder `W2 relu(W1 x + b1) + b2`.
pub fn encode_ref(p: &ExtractorParams, x: &[f64]) -> Vec<f64> {
    let hidden: Vec<f64> = affine_ref(p.w1.as_slice().unwrap(), p.b1.as_slice().unwrap(), x)
        .into_iter()
        .map(|v| v.max(0.0))
        .collect();
    affine_ref(p.w2.as_slice().unwrap(), p.b2.as_slice().unwrap(), &hidden)
}

/// Contrastive constraint by explicit loops: each (anchor, view) pair
/// contributes `-log(exp(cos(a, v)) / sum_t exp(cos(a, anchor_t)))`.
pub fn constraint_ref(anchors: &[Vec<f64>], views: &[Vec<Vec<f64>>]) -> f64 {
    let mut total = 0.0;
    let mut pairs = 0;
    for s in 0..anchors.len() {
        let mut denom = 0.0;
        for t in 0..anchors.len() {
            denom += cosine_ref(&anchors[s], &anchors[t]).exp();
        }
        for v in &views[s] {
            total -= (cosine_ref(&anchors[s], v).exp() / denom).ln();
            pairs += 1;
        }
    }
    total / pairs as f64
}

pub struct ExtractorInstance {
    pub params: ExtractorParams,
    pub batch: ObjectiveBatch,
    pub lambda: f64,
}

/// Random instance with `L=8, d=4, B=4`, redrawn while any ReLU input lies
/// within `KINK_MARGIN` of zero.
pub fn random_extractor_instance(seed: u64) -> ExtractorInstance {
    let mut r = rng::derived(seed, 91);
    let dims = ExtractorDims {
        input_len: 8,
        hidden: 6,
        dim: 4,
    };
    let (b, v) = (4, 2);
    loop {
        let mut params = ExtractorParams::zeros(dims);
        params.set_flat(&uniform_vec(&mut r, params.num_params(), 1.0));
        let mut anchors = Array2::zeros((b, 8));
        let mut views = Array2::zeros((b * v, 8));
        for s in 0..b {
            let w = uniform_vec(&mut r, 8, 2.0);
            let spec = MaskSpec {
                mask_ratio: 0.25,
                num_views: v,
                seed: r.random(),
            };
            for (k, view) in mask_series(&w, &spec).unwrap().into_iter().enumerate() {
                views.row_mut(s * v + k).assign(&ndarray::Array1::from(view));
            }
            anchors.row_mut(s).assign(&ndarray::Array1::from(w));
        }
        let transfer = Array2::from_shape_vec((b, b), uniform_vec(&mut r, b * b, 1.0)).unwrap();
        let lambda = r.random_range(0.0..1.0);

        let w1 = params.w1.as_slice().unwrap();
        let b1 = params.b1.as_slice().unwrap();
        let v1 = params.v1.as_slice().unwrap();
        let c1 = params.c1.as_slice().unwrap();
        let near_kink = |pre: &[f64]| pre.iter().any(|a| a.abs() < KINK_MARGIN);
        let mut kink = false;
        for row in anchors.rows().into_iter().chain(views.rows()) {
            kink |= near_kink(&affine_ref(w1, b1, row.as_slice().unwrap()));
        }
        for row in views.rows() {
            let code = encode_ref(&params, row.as_slice().unwrap());
            kink |= near_kink(&affine_ref(v1, c1, &code));
        }
        if kink {
            continue;
        }
        return ExtractorInstance {
            params,
            batch: ObjectiveBatch {
                anchors,
                views,
                num_views: v,
                transfer,
            },
            lambda,
        };
    }
}

/// Max relative error of the combined-objective gradient against central differences.
pub fn extractor_grad_error(inst: &ExtractorInstance) -> f64 {
    let (_, grad) = objective(&inst.params, &inst.batch, inst.lambda).unwrap();
    let f = |flat: &[f64]| {
        let mut p = inst.params.clone();
        p.set_flat(flat);
        objective(&p, &inst.batch, inst.lambda).unwrap().0.total
    };
    let numeric = numeric_grad(&f, &inst.params.to_flat());
    max_rel_err(&grad.to_flat(), &numeric)
}

/// Mean and population standard deviation with two plain loops.
pub fn norm_ref(x: &[f64]) -> (f64, f64) {
    let mut sum = 0.0;
    for v in x {
        sum += v;
    }
    let mean = sum / x.len() as f64;
    let mut ss = 0.0;
    for v in x {
        ss += (v - mean) * (v - mean);
    }
    let std = (ss / x.len() as f64).sqrt();
    (mean, if std < 1e-8 { 1.0 } else { std })
}

/// Random `(truth, pred)` channel lists; some entries are exactly zero so the
/// skip rules of smape and mape get exercised.
pub fn random_metric_instance(seed: u64) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut r = rng::seeded(seed);
    let channels = r.random_range(1..5);
    let horizon = r.random_range(1..25);
    let draw = |r: &mut rng::Rng| {
        if r.random_bool(0.1) {
            0.0
        } else {
            r.random_range(-10.0..10.0)
        }
    };
    let truth: Vec<Vec<f64>> = (0..channels).map(|_| (0..horizon).map(|_| draw(&mut r)).collect()).collect();
    let pred = truth
        .iter()
        .map(|ch| ch.iter().map(|&t| if t == 0.0 && r.random_bool(0.5) { 0.0 } else { draw(&mut r) }).collect())
        .collect();
    (truth, pred)
}

/// Largest deviation of the library metrics and normalization from the
/// reference loops over `n` random instances.
pub fn metric_oracle_error(n: u64) -> f64 {
    use seqfusion_core::metrics::{mape, mse, smape};
    use seqfusion_core::series::{denormalize, normalize, MultivariateSeries};

    let mut worst: f64 = 0.0;
    for seed in 0..n {
        let (truth, pred) = random_metric_instance(seed);
        let t = MultivariateSeries::from_columns(truth.clone()).unwrap();
        let p = MultivariateSeries::from_columns(pred.clone()).unwrap();
        worst = worst.max((mse(&t, &p).unwrap() - mse_ref(&truth, &pred)).abs());
        worst = worst.max((smape(&t, &p).unwrap() - smape_ref(&truth, &pred)).abs());
        let has_nonzero = truth.iter().flatten().any(|v| v.abs() >= 1e-8);
        if has_nonzero {
            worst = worst.max((mape(&t, &p).unwrap() - mape_ref(&truth, &pred)).abs());
        }

        let x = &truth[0];
        let (mean, std) = norm_ref(x);
        let (z, stats) = normalize(x).unwrap();
        worst = worst.max((stats.mean - mean).abs()).max((stats.std - std).abs());
        for (zi, xi) in z.iter().zip(x) {
            worst = worst.max((zi - (xi - mean) / std).abs());
        }
        for (back, xi) in denormalize(&z, &stats).iter().zip(x) {
            worst = worst.max((back - xi).abs());
        }
    }
    worst
}

pub mod studies;

pub mod fixtures {
    use std::sync::atomic::{AtomicUsize, Ordering};
    use std::sync::Arc;

    use rand::Rng;
    use seqfusion_core::error::Result;
    use seqfusion_core::extractor::{ExtractorDims, ExtractorParams, Representation};
    use seqfusion_core::forecasters::{Forecaster, ForecasterSpec, ModelWeights, Predict};
    use seqfusion_core::fusion::{forecast_multivariate, FusionConfig};
    use seqfusion_core::rng;
    use seqfusion_core::series::MultivariateSeries;
    use seqfusion_core::zoo::{ModelEntry, Zoo};

    pub fn entry(id: &str, input_len: usize, horizon: usize, repr: Vec<f64>) -> ModelEntry {
        ModelEntry {
            model_id: id.to_string(),
            file: String::new(),
            digest: String::new(),
            source_dataset: id.to_string(),
            input_len,
            horizon,
            representation: Representation(repr),
        }
    }

    /// `n` randomly initialized linear models with random representations.
    pub fn random_zoo(seed: u64, n: usize, t: usize, h: usize) -> Zoo {
        let mut r = rng::seeded(seed);
        let dims = ExtractorDims {
            input_len: t,
            hidden: 10,
            dim: 6,
        };
        let extractor = ExtractorParams::init(dims, &mut r);
        let spec = ForecasterSpec::linear(t, h);
        let mut entries = Vec::new();
        let mut models: Vec<Arc<dyn Predict>> = Vec::new();
        for i in 0..n {
            let id = format!("m{i}");
            let repr = (0..dims.dim).map(|_| r.random_range(-1.0..1.0)).collect();
            entries.push(entry(&id, t, h, repr));
            let w = ModelWeights::init(&spec, &mut r);
            models.push(Arc::new(Forecaster::new(spec.clone(), id, w).unwrap()));
        }
        Zoo::from_parts(extractor, entries, models).unwrap()
    }

    pub fn random_series(seed: u64, len: usize, channels: usize) -> MultivariateSeries {
        let mut r = rng::seeded(seed);
        let cols = (0..channels)
            .map(|c| {
                let phase = r.random_range(0.0..6.0);
                (0..len)
                    .map(|t| (t as f64 / (3.0 + c as f64) + phase).sin() + r.random_range(-0.3..0.3))
                    .collect()
            })
            .collect();
        MultivariateSeries::from_columns(cols).unwrap()
    }

    /// Worst relative deviation of `forecast(aX + b)` from `a forecast(X) + b`
    /// and whether every ranked list was unchanged, over `n` random `(a, b)`.
    pub fn equivariance_check(n: u64) -> (f64, bool) {
        let zoo = random_zoo(11, 5, 16, 4);
        let cfg = FusionConfig::new(10, 3);
        let x = random_series(12, 40, 3);
        let base = forecast_multivariate(&zoo, &x, &cfg).unwrap();
        let mut r = rng::seeded(13);
        let mut worst: f64 = 0.0;
        let mut same_ranking = true;
        for _ in 0..n {
            let a: f64 = 10f64.powf(r.random_range(-3.0..3.0));
            let b: f64 = r.random_range(-1e3..1e3);
            let y = x.map_channels(|ch| Ok(ch.iter().map(|v| a * v + b).collect())).unwrap();
            let out = forecast_multivariate(&zoo, &y, &cfg).unwrap();
            for c in 0..x.num_channels() {
                for (p, q) in out.forecast.channel(c).iter().zip(base.forecast.channel(c).iter()) {
                    let expected = a * q + b;
                    worst = worst.max((p - expected).abs() / expected.abs().max(a.abs()).max(1e-12));
                }
                let ids = |o: &seqfusion_core::fusion::FusionOutput| {
                    o.provenance[c].selection.ranked.iter().map(|s| s.model_id.clone()).collect::<Vec<_>>()
                };
                same_ranking &= ids(&out) == ids(&base);
            }
        }
        (worst, same_ranking)
    }

    /// Predicts zeros and counts calls.
    pub struct Counting {
        pub t: usize,
        pub h: usize,
        pub calls: AtomicUsize,
    }

    impl Predict for Counting {
        fn input_len(&self) -> usize {
            self.t
        }

        fn horizon(&self) -> usize {
            self.h
        }

        fn predict(&self, window: &[f64]) -> Result<Vec<f64>> {
            assert_eq!(window.len(), self.t);
            self.calls.fetch_add(1, Ordering::SeqCst);
            Ok(vec![0.0; self.h])
        }
    }

    pub const STUB_CHANNELS: usize = 2;

    /// `(H, total calls of each model)` for a two-model zoo of counting stubs
    /// with `h = 12`, forecasting [`STUB_CHANNELS`] channels.
    pub fn block_counts(horizons: &[usize]) -> Vec<(usize, Vec<usize>)> {
        let (t, h, channels) = (36, 12, STUB_CHANNELS);
        horizons
            .iter()
            .map(|&horizon| {
                let stubs: Vec<Arc<Counting>> = (0..2)
                    .map(|_| {
                        Arc::new(Counting {
                            t,
                            h,
                            calls: AtomicUsize::new(0),
                        })
                    })
                    .collect();
                let extractor = ExtractorParams::init(
                    ExtractorDims {
                        input_len: t,
                        hidden: 4,
                        dim: 3,
                    },
                    &mut rng::seeded(1),
                );
                let entries = vec![entry("a", t, h, vec![1.0, 0.0, 0.0]), entry("b", t, h, vec![0.0, 1.0, 0.0])];
                let models = stubs.iter().map(|s| s.clone() as Arc<dyn Predict>).collect();
                let zoo = Zoo::from_parts(extractor, entries, models).unwrap();
                let x = random_series(3, t, channels);
                let out = forecast_multivariate(&zoo, &x, &FusionConfig::new(horizon, 2)).unwrap();
                assert_eq!(out.forecast.len(), horizon);
                (horizon, stubs.iter().map(|s| s.calls.load(Ordering::SeqCst)).collect())
            })
            .collect()
    }
}
