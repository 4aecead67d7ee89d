//! Rayon-backed drivers. Replicates are independent given their derived RNG
//! streams, so results match the sequential core functions bit for bit.

use rayon::prelude::*;

use lagte_core::estimator::PreparedPair;
use lagte_core::{DelayEstimate, GridSearchResult, LagSample, PipelineConfig, SpeedSeries, Window};

pub fn estimate_delay_detailed(
    source: &SpeedSeries,
    target: &SpeedSeries,
    config: &PipelineConfig,
) -> lagte_core::Result<DelayEstimate> {
    let pair = PreparedPair::new(source, target, config)?;
    let outcomes = (0..config.boot_reps)
        .into_par_iter()
        .map(|b| pair.replicate(b))
        .collect::<lagte_core::Result<Vec<_>>>()?;
    pair.assemble(outcomes)
}

pub fn estimate_delay(
    source: &SpeedSeries,
    target: &SpeedSeries,
    config: &PipelineConfig,
) -> lagte_core::Result<LagSample> {
    estimate_delay_detailed(source, target, config).map(|e| e.sample)
}

pub fn grid_search(
    source: &SpeedSeries,
    target: &SpeedSeries,
    base: &PipelineConfig,
    len_grid: &[usize],
    window_grid: &[Window],
) -> lagte_core::Result<GridSearchResult> {
    lagte_core::grid_search_with(source, target, base, len_grid, window_grid, estimate_delay)
}
