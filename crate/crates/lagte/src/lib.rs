//! Std companion to `lagte-core`: parallel estimation, speed-data IO, road
//! network path analysis, simulation batches, and report emission.

pub mod batch;
mod error;
pub mod io;
pub mod network;
pub mod parallel;
pub mod report;

pub use error::{Error, Result};
pub use lagte_core as core;
