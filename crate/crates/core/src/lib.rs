//! Zero-shot forecasting with a zoo of small pre-trained forecasters.
//!
//! A target series is standardized per channel, matched to the zoo models
//! whose source data embeds closest to it, and forecast block by block with
//! the selected models before the scale is restored.

pub mod api;
pub mod bench;
pub mod data;
pub mod error;
pub mod extractor;
pub mod forecasters;
pub mod fusion;
pub mod metrics;
pub mod rng;
pub mod series;
pub mod params;
mod tensor;
pub mod zoo;

pub use error::{Error, Result};
pub use series::{Dataset, MultivariateSeries, NormStats, TimeSeries};
