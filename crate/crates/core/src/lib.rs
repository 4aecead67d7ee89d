//! Time-delay estimation of directed influence between two time series using
//! lag-specific effective transfer entropy.
//!
//! The pipeline per bootstrap replicate is
//! decompose → Markov bootstrap → normalize → symbolic encode → effective TE
//! argmax over lags. Collecting the argmax lag over `B` replicates yields a
//! [`LagSample`] whose mean is the delay estimate and whose variance measures
//! confidence in the causal link.
//!
//! This crate is `no_std` and only needs `alloc`. File formats, parallel
//! drivers, and the CLI live in the `lagte` crate.
#![no_std]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod bootstrap;
pub mod config;
pub mod entropy;
mod error;
pub mod estimator;
pub mod preprocess;
pub mod rng;
pub mod sample;
pub mod series;
pub mod simulate;
pub mod stats;

pub use bootstrap::{fit_markov, sample_bootstrap_series, MarkovModel};
pub use config::{NormMethod, PipelineConfig, Window};
pub use entropy::{
    best_lag, effective_transfer_entropy, shannon_entropy, transfer_entropy, LagTEProfile,
};
pub use error::{Error, Result};
pub use estimator::{
    estimate_delay, estimate_delay_detailed, grid_search, grid_search_with, DelayEstimate,
    Diagnostics, GridCell, GridSearchResult, PreparedPair, ReplicateOutcome,
};
pub use preprocess::{
    decompose, encode, normalize, window_percentiles, Decomposition, SymbolSeries, WindowStats,
};
pub use rng::{derive_replicate_rng, ReplicateRng, StreamTag};
pub use sample::{functionals, mean_interval, LagSample};
pub use series::SpeedSeries;
pub use simulate::{generate_pair, mae, SimSpec};
