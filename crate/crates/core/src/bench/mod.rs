//! Synthetic data, benchmark configuration and the zero-shot evaluation harness.

mod config;
mod run;
mod suite;
mod synthetic;

pub use config::BenchConfig;
pub use run::{
    eval_windows, run_benchmark, EvalWindow, Method, Reference, Report, ResultRow, SummaryRow, WindowRecord,
    ZooPerformance,
};
pub use suite::{build_suite_zoo, SuiteConfig, SuiteZoo};
pub use synthetic::{default_families, generate_synthetic, SyntheticFamilySpec, SyntheticKind, AR1_PHI, TREND_SLOPE};
