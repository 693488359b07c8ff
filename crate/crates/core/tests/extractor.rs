mod common;

use common::*;
use nalgebra::{DMatrix, SymmetricEigen};
use rand::Rng;
use seqfusion_core::extractor::{
    constraint_loss, pca_project, train_extractor, transferability_loss, AnchorViews, ExtractorDims,
    ExtractorParams, ExtractorTrainConfig, MaskSpec, Representation,
};
use seqfusion_core::params::Params;
use seqfusion_core::rng;
use seqfusion_core::zoo::TransferMatrix;
use seqfusion_core::{Dataset, MultivariateSeries};

#[test]
fn encode_matches_matrix_oracle() {
    let mut r = rng::seeded(3);
    for seed in 0..20 {
        let p = ExtractorParams::init(ExtractorDims::default(), &mut rng::seeded(seed));
        let x = uniform_vec(&mut r, 36, 2.0);
        let got = p.encode(&x).unwrap();
        for (a, b) in got.iter().zip(encode_ref(&p, &x)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}

fn random_group(r: &mut rng::Rng, b: usize, v: usize, d: usize) -> Vec<AnchorViews> {
    (0..b)
        .map(|_| AnchorViews {
            anchor: uniform_vec(r, d, 1.0),
            views: (0..v).map(|_| uniform_vec(r, d, 1.0)).collect(),
        })
        .collect()
}

#[test]
fn constraint_matches_reference_loop() {
    let mut r = rng::seeded(8);
    for _ in 0..50 {
        let (b, v, d) = (r.random_range(2..8), r.random_range(1..4), r.random_range(1..10));
        let batch = random_group(&mut r, b, v, d);
        let anchors: Vec<_> = batch.iter().map(|g| g.anchor.clone()).collect();
        let views: Vec<_> = batch.iter().map(|g| g.views.clone()).collect();
        let got = constraint_loss(&batch).unwrap();
        assert!((got - constraint_ref(&anchors, &views)).abs() < 1e-9);
    }
}

fn random_rotation(r: &mut rng::Rng, d: usize) -> DMatrix<f64> {
    let m = DMatrix::from_fn(d, d, |_, _| r.random_range(-1.0..1.0));
    m.qr().q()
}

#[test]
fn constraint_is_rotation_invariant() {
    let mut r = rng::seeded(12);
    for _ in 0..20 {
        let d = r.random_range(2..7);
        let batch = random_group(&mut r, 4, 2, d);
        let q = random_rotation(&mut r, d);
        let rotate = |x: &Vec<f64>| (&q * nalgebra::DVector::from_column_slice(x)).as_slice().to_vec();
        let rotated: Vec<AnchorViews> = batch
            .iter()
            .map(|g| AnchorViews {
                anchor: rotate(&g.anchor),
                views: g.views.iter().map(rotate).collect(),
            })
            .collect();
        let a = constraint_loss(&batch).unwrap();
        let b = constraint_loss(&rotated).unwrap();
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn transferability_matches_reference_loop() {
    let mut r = rng::seeded(21);
    for _ in 0..50 {
        let n = r.random_range(1..10);
        let d = r.random_range(1..6);
        let data: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..n)
            .map(|_| (uniform_vec(&mut r, d, 1.0), uniform_vec(&mut r, d, 1.0), r.random_range(-1.0..1.0)))
            .collect();
        let pairs: Vec<(&[f64], &[f64], f64)> = data.iter().map(|(a, b, g)| (&a[..], &b[..], *g)).collect();
        let mut expected = 0.0;
        for (a, b, g) in &data {
            expected += (g - cosine_ref(a, b)).powi(2);
        }
        expected /= n as f64;
        let got = transferability_loss(&pairs);
        assert!(got >= 0.0);
        assert!((got - expected).abs() < 1e-9);
    }
}

#[test]
fn transferability_zero_iff_exact_fit() {
    let a = [1.0, 0.0];
    let b = [0.6, 0.8];
    assert_eq!(transferability_loss(&[(&a, &b, 0.6)]), 0.0);
    assert!(transferability_loss(&[(&a, &b, 0.5)]) > 0.0);
}

#[test]
fn combined_objective_gradient_matches_finite_differences() {
    for seed in 0..20 {
        let inst = random_extractor_instance(seed);
        let err = extractor_grad_error(&inst);
        assert!(err < FD_REL_TOL, "seed {seed}: {err:e}");
    }
}

#[test]
fn pca_matches_dense_eigensolver() {
    let mut r = rng::seeded(5);
    for trial in 0..10 {
        let d = r.random_range(2..6);
        let n = r.random_range(10..40);
        // distinct per-axis scales keep the eigenvalues well separated
        let scales: Vec<f64> = (0..d).map(|i| 3.0 / (1.0 + i as f64 * 1.5)).collect();
        let q = random_rotation(&mut r, d);
        let reprs: Vec<Representation> = (0..n)
            .map(|_| {
                let z = nalgebra::DVector::from_fn(d, |i, _| scales[i] * r.random_range(-1.0..1.0));
                Representation((&q * z).as_slice().to_vec())
            })
            .collect();
        let k = d.min(3);
        let out = pca_project(&reprs, k).unwrap();

        let data = DMatrix::from_fn(n, d, |i, j| reprs[i][j]);
        let mean = data.row_mean();
        let centered = DMatrix::from_fn(n, d, |i, j| data[(i, j)] - mean[j]);
        let cov = centered.transpose() * &centered / (n as f64 - 1.0);
        let mut eig: Vec<f64> = SymmetricEigen::new(cov).eigenvalues.iter().copied().collect();
        eig.sort_by(|a, b| b.partial_cmp(a).unwrap());
        for c in 0..k {
            assert!(
                (out.explained_variance[c] - eig[c]).abs() < 1e-6,
                "trial {trial} component {c}: {} vs {}",
                out.explained_variance[c],
                eig[c]
            );
        }
        for comp in &out.components {
            let pivot = comp.iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
            assert!(pivot > 0.0);
        }
    }
}

fn sine_dataset(name: &str, period: f64, len: usize) -> Dataset {
    let cols = (0..2).map(|c| sine(len, period, c as f64)).collect();
    Dataset::new(name, MultivariateSeries::from_columns(cols).unwrap())
}

fn small_dims() -> ExtractorDims {
    ExtractorDims {
        input_len: 16,
        hidden: 16,
        dim: 8,
    }
}

#[test]
fn single_dataset_reconstruction_run_decreases_loss() {
    let data = vec![sine_dataset("s", 10.0, 200)];
    let tm = TransferMatrix::new(vec!["s".into()], vec![vec![1.0]]).unwrap();
    let cfg = ExtractorTrainConfig {
        lambda: 0.0,
        epochs: 20,
        learning_rate: 0.05,
        batch_size: 16,
        seed: 4,
        windows_per_dataset: 64,
    };
    let out = train_extractor(&data, &tm, small_dims(), &cfg, &MaskSpec::default()).unwrap();
    let first = out.log.first().unwrap();
    let last = out.log.last().unwrap();
    assert_eq!(out.log.len(), 20);
    assert!(last.recon < first.recon, "{first:?} -> {last:?}");
    assert!(out.log.iter().all(|e| e.constraint == 0.0 || cfg.lambda == 0.0));
}

#[test]
fn extractor_training_is_deterministic() {
    let data = vec![sine_dataset("a", 10.0, 120), sine_dataset("b", 7.0, 120)];
    let tm = TransferMatrix::new(vec!["a".into(), "b".into()], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let cfg = ExtractorTrainConfig {
        epochs: 3,
        ..ExtractorTrainConfig::default()
    };
    let run = || train_extractor(&data, &tm, small_dims(), &cfg, &MaskSpec::default()).unwrap();
    let (a, b) = (run(), run());
    let bits = |p: &ExtractorParams| p.to_flat().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
    assert_eq!(bits(&a.params), bits(&b.params));
    assert_eq!(a.log, b.log);
}

#[test]
fn missing_transfer_pair_is_named() {
    let data = vec![sine_dataset("a", 10.0, 120), sine_dataset("c", 7.0, 120)];
    let tm = TransferMatrix::new(vec!["a".into(), "b".into()], vec![vec![0.9, 0.1], vec![0.2, 0.8]]).unwrap();
    let err = train_extractor(&data, &tm, small_dims(), &ExtractorTrainConfig::default(), &MaskSpec::default())
        .unwrap_err();
    let msg = err.to_string();
    assert!(msg.contains('a') && msg.contains('c'), "{msg}");
}

#[test]
fn windows_of_one_family_embed_closer_than_windows_of_different_families() {
    use seqfusion_core::bench::{build_suite_zoo, default_families, generate_synthetic, SuiteConfig};
    use seqfusion_core::extractor::cosine;
    use seqfusion_core::series::normalize;

    let families: Vec<Dataset> = default_families(1200, 2, 0.1, 3)
        .iter()
        .filter(|f| ["sine", "sawtooth", "random_walk"].contains(&f.name.as_str()))
        .map(|f| generate_synthetic(f).unwrap())
        .collect();
    assert_eq!(families.len(), 3);
    let suite = build_suite_zoo(&families, &SuiteConfig::default()).unwrap();
    let params = &suite.extractor.params;

    let mut r = rng::seeded(8);
    let reprs: Vec<Vec<Vec<f64>>> = families
        .iter()
        .map(|d| {
            let (_, tail) = d.split_fraction(0.8).unwrap();
            (0..30)
                .map(|_| {
                    let ch = tail.series.channel(r.random_range(0..2));
                    let s = r.random_range(0..=ch.len() - 36);
                    params.encode(&normalize(&ch[s..s + 36]).unwrap().0).unwrap().0
                })
                .collect()
        })
        .collect();
    let (mut within, mut nw, mut across, mut na) = (0.0, 0.0, 0.0, 0.0);
    for (fa, a) in reprs.iter().enumerate() {
        for (fb, b) in reprs.iter().enumerate() {
            for (i, u) in a.iter().enumerate() {
                for (j, v) in b.iter().enumerate() {
                    if fa == fb && i == j {
                        continue;
                    }
                    let s = cosine(u, v);
                    if fa == fb {
                        within += s;
                        nw += 1.0;
                    } else {
                        across += s;
                        na += 1.0;
                    }
                }
            }
        }
    }
    assert!(within / nw > across / na, "within {} across {}", within / nw, across / na);
}
