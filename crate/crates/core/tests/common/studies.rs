//! End-to-end experiments on the five synthetic families, shared by the
//! acceptance harness.

use rand::Rng;
use seqfusion_core::bench::{build_suite_zoo, default_families, eval_windows, generate_synthetic, SuiteConfig, SuiteZoo};
use seqfusion_core::forecasters::{train, Forecaster, ForecasterSpec, Predict};
use seqfusion_core::fusion::{forecast_multivariate, match_variate, FusionConfig};
use seqfusion_core::metrics::mse_1d;
use seqfusion_core::rng;
use seqfusion_core::series::{denormalize, normalize, Dataset, MultivariateSeries};

pub const LENGTH: usize = 2400;
pub const CHANNELS: usize = 4;
pub const NOISE: f64 = 0.1;
pub const T: usize = 36;
pub const H: usize = 12;
pub const WINDOWS_PER_FAMILY: usize = 100;
/// Models per family in the aggregation zoo.
pub const REPLICAS: u64 = 3;

pub fn families(seed: u64) -> Vec<Dataset> {
    default_families(LENGTH, CHANNELS, NOISE, seed)
        .iter()
        .map(|f| generate_synthetic(f).unwrap())
        .collect()
}

pub fn suite_with(data: &[Dataset], seed: u64, base: &SuiteConfig) -> SuiteZoo {
    let mut cfg = SuiteConfig {
        seed,
        ..base.clone()
    };
    cfg.train.seed = seed;
    cfg.extractor.seed = seed;
    build_suite_zoo(data, &cfg).unwrap()
}

#[derive(Debug, Default, Clone, Copy)]
pub struct SelectionTally {
    pub windows: usize,
    pub top1: usize,
    pub beats_median: usize,
}

impl SelectionTally {
    pub fn add(&mut self, other: SelectionTally) {
        self.windows += other.windows;
        self.top1 += other.top1;
        self.beats_median += other.beats_median;
    }

    pub fn top1_rate(&self) -> f64 {
        self.top1 as f64 / self.windows as f64
    }

    pub fn median_rate(&self) -> f64 {
        self.beats_median as f64 / self.windows as f64
    }
}

fn raw_mse(model: &Forecaster, input: &[f64], truth: &[f64]) -> f64 {
    let (norm, stats) = normalize(input).unwrap();
    mse_1d(truth, &denormalize(&model.predict(&norm).unwrap(), &stats)).unwrap()
}

/// The synthetic families of one seed and the zoo fitted on their heads.
pub struct Study {
    pub seed: u64,
    pub data: Vec<Dataset>,
    pub suite: SuiteZoo,
}

pub fn study(seed: u64) -> Study {
    study_with(seed, &SuiteConfig::default())
}

pub fn study_with(seed: u64, base: &SuiteConfig) -> Study {
    study_on(seed, families(seed), base)
}

/// `REPLICAS` independently seeded datasets of every family, one model each.
/// Extractor windows per dataset shrink by the same factor so an epoch sees
/// as many windows as with one dataset per family.
pub fn replicated_study(seed: u64) -> Study {
    let mut data = Vec::new();
    for r in 0..REPLICAS {
        for mut f in default_families(LENGTH, CHANNELS, NOISE, seed * REPLICAS + r) {
            f.name = format!("{}_{r}", f.name);
            data.push(generate_synthetic(&f).unwrap());
        }
    }
    let mut base = SuiteConfig::default();
    base.extractor.windows_per_dataset /= REPLICAS as usize;
    study_on(seed, data, &base)
}

pub fn study_on(seed: u64, data: Vec<Dataset>, base: &SuiteConfig) -> Study {
    let suite = suite_with(&data, seed, base);
    Study { seed, data, suite }
}

/// Random held-out windows per family: does top-1 matching pick the model of
/// the window's own family, and does the pick forecast at least as well as
/// the zoo median?
pub fn selection(st: &Study) -> SelectionTally {
    let s = &st.suite;
    let mut r = rng::derived(st.seed, 77);
    let mut tally = SelectionTally::default();
    for (family, d) in st.data.iter().enumerate() {
        let (_, tail) = d.split_fraction(0.8).unwrap();
        for _ in 0..WINDOWS_PER_FAMILY {
            let ch = tail.series.channel(r.random_range(0..CHANNELS));
            let start = r.random_range(0..=ch.len() - (T + H));
            let (input, truth) = ch[start..start + T + H].split_at(T);
            let chosen = match_variate(&s.zoo, input, 1).unwrap().chosen.remove(0);
            let chosen = s.zoo.index_of(&chosen).unwrap();
            let mut mses: Vec<f64> = s.models.iter().map(|m| raw_mse(m, input, truth)).collect();
            let picked = mses[chosen];
            mses.sort_by(f64::total_cmp);
            tally.windows += 1;
            tally.top1 += usize::from(chosen == family);
            tally.beats_median += usize::from(picked <= mses[mses.len() / 2]);
        }
    }
    tally
}

/// Every non-overlapping tail window of every family for the benchmark
/// horizons, as `(input, truth)` pairs over all channels.
fn tail_windows(data: &[Dataset], seed: u64) -> Vec<(MultivariateSeries, MultivariateSeries)> {
    let mut r = rng::derived(seed, 78);
    let mut out = Vec::new();
    for d in data {
        for h in [12, 24, 48] {
            let offset = r.random_range(0..T + h);
            for w in eval_windows(d.series.len(), T, h, 0.2, offset) {
                out.push(w.split(&d.series).unwrap());
            }
        }
    }
    out
}

fn mean_mse(zoo_forecast: impl Fn(&MultivariateSeries, usize) -> MultivariateSeries, windows: &[(MultivariateSeries, MultivariateSeries)]) -> f64 {
    let total: f64 = windows
        .iter()
        .map(|(input, truth)| seqfusion_core::metrics::mse(truth, &zoo_forecast(input, truth.len())).unwrap())
        .sum();
    total / windows.len() as f64
}

/// Mean raw-scale MSE over the tail windows with `top_k = 1` and `top_k = 3`.
pub fn aggregation(st: &Study) -> (f64, f64) {
    let windows = tail_windows(&st.data, st.seed);
    let run = |k: usize| {
        mean_mse(
            |input, h| forecast_multivariate(&st.suite.zoo, input, &FusionConfig::new(h, k)).unwrap().forecast,
            &windows,
        )
    };
    (run(1), run(3))
}

/// Mean MSE of top-1 selection and of a single linear model trained on every
/// family's training head at once, over the same tail windows.
pub fn specialized_vs_pooled(st: &Study) -> (f64, f64) {
    let heads: Vec<Vec<f64>> = st
        .data
        .iter()
        .flat_map(|d| {
            let (head, _) = d.split_fraction(0.8).unwrap();
            head.series.channels().iter().map(|c| c.to_vec()).collect::<Vec<_>>()
        })
        .collect();
    let pooled_data = Dataset::new("pooled", MultivariateSeries::from_columns(heads).unwrap());
    let mut cfg = SuiteConfig::default().train;
    cfg.seed = st.seed;
    let pooled = train(&ForecasterSpec::linear(T, H), &pooled_data, &cfg).unwrap();
    let windows = tail_windows(&st.data, st.seed);
    let selected = mean_mse(
        |input, h| forecast_multivariate(&st.suite.zoo, input, &FusionConfig::new(h, 1)).unwrap().forecast,
        &windows,
    );
    let general = mean_mse(
        |input, h| {
            input
                .map_channels(|c| {
                    let (norm, stats) = normalize(c).unwrap();
                    let pred = seqfusion_core::fusion::sequential_forecast(&[&pooled as &dyn Predict], &norm, h)?;
                    Ok(denormalize(&pred, &stats))
                })
                .unwrap()
        },
        &windows,
    );
    (selected, general)
}
