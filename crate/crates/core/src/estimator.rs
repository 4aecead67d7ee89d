//! Bootstrap delay estimation and variance-minimizing grid search.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::bootstrap::{fit_markov, sample_bootstrap_series, MarkovModel};
use crate::config::{PipelineConfig, Window};
use crate::entropy::best_lag;
use crate::error::{Error, Result};
use crate::preprocess::{decompose, encode, normalize, Decomposition};
use crate::rng::{derive_replicate_rng, StreamTag};
use crate::sample::LagSample;
use crate::series::SpeedSeries;

/// Trend and fitted residual chain of one input series. Fitting is
/// deterministic, so it happens once and is shared by every replicate.
#[derive(Debug, Clone)]
struct FittedSeries {
    decomposition: Decomposition,
    model: MarkovModel,
}

impl FittedSeries {
    fn fit(series: &SpeedSeries, config: &PipelineConfig) -> Result<Self> {
        let decomposition = decompose(series.values(), config.trend_order)?;
        let model = fit_markov(&decomposition.residual, config.residual_states)?;
        Ok(FittedSeries {
            decomposition,
            model,
        })
    }
}

/// Result of one bootstrap replicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ReplicateOutcome {
    pub lag: usize,
    /// No lag had positive effective TE.
    pub flat: bool,
    pub restarts: usize,
    pub collapsed_bins: usize,
    pub degenerate_encodings: usize,
}

/// Source/target pair with both series fitted, ready to run replicates.
#[derive(Debug, Clone)]
pub struct PreparedPair {
    source: FittedSeries,
    target: FittedSeries,
    config: PipelineConfig,
}

impl PreparedPair {
    /// Validates the configuration against the pair and fits both series.
    pub fn new(
        source: &SpeedSeries,
        target: &SpeedSeries,
        config: &PipelineConfig,
    ) -> Result<Self> {
        if source.len() != target.len() {
            return Err(Error::invalid(
                "target",
                alloc::format!(
                    "source has {} samples but target has {}",
                    source.len(),
                    target.len()
                ),
            ));
        }
        config.validate_for_len(source.len())?;
        Ok(PreparedPair {
            source: FittedSeries::fit(source, config)?,
            target: FittedSeries::fit(target, config)?,
            config: config.clone(),
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.config
    }

    /// Residual state counts actually used for `(source, target)`.
    pub fn residual_states(&self) -> (usize, usize) {
        (self.source.model.n_states(), self.target.model.n_states())
    }

    /// Runs replicate `index`: bootstrap both series, normalize, encode, and
    /// take the argmax-ETE lag. Depends only on `(seed, index)`.
    pub fn replicate(&self, index: usize) -> Result<ReplicateOutcome> {
        let c = &self.config;
        let b = index as u64;
        let mut src_rng = derive_replicate_rng(c.seed, b, StreamTag::SourceBootstrap);
        let mut tgt_rng = derive_replicate_rng(c.seed, b, StreamTag::TargetBootstrap);
        let mut shuffle_rng = derive_replicate_rng(c.seed, b, StreamTag::Shuffle);

        let src = sample_bootstrap_series(
            &self.source.model,
            &self.source.decomposition.trend,
            &mut src_rng,
        )?;
        let tgt = sample_bootstrap_series(
            &self.target.model,
            &self.target.decomposition.trend,
            &mut tgt_rng,
        )?;
        let src_sym = encode(
            &normalize(&src.values, c.norm_method, c.window),
            c.encode_bins,
            &c.encode_quantiles,
        )?;
        let tgt_sym = encode(
            &normalize(&tgt.values, c.norm_method, c.window),
            c.encode_bins,
            &c.encode_quantiles,
        )?;
        let (lag, profile) = best_lag(&src_sym, &tgt_sym, c, &mut shuffle_rng)?;
        Ok(ReplicateOutcome {
            lag,
            flat: profile.is_flat(),
            restarts: src.restarts + tgt.restarts,
            collapsed_bins: src_sym.collapsed_bins() + tgt_sym.collapsed_bins(),
            degenerate_encodings: usize::from(src_sym.is_degenerate())
                + usize::from(tgt_sym.is_degenerate()),
        })
    }

    /// Collects replicate outcomes (in replicate order) into an estimate.
    pub fn assemble(&self, outcomes: Vec<ReplicateOutcome>) -> Result<DelayEstimate> {
        let (source_states, target_states) = self.residual_states();
        let mut diagnostics = Diagnostics {
            source_states,
            target_states,
            ..Diagnostics::default()
        };
        let mut lags = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            lags.push(o.lag);
            diagnostics.flat_profiles += usize::from(o.flat);
            diagnostics.bootstrap_restarts += o.restarts;
            diagnostics.collapsed_bins += o.collapsed_bins;
            diagnostics.degenerate_encodings += o.degenerate_encodings;
        }
        Ok(DelayEstimate {
            sample: LagSample::from_lags(lags)?,
            diagnostics,
        })
    }
}

/// Counters surfaced alongside a [`LagSample`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Diagnostics {
    pub source_states: usize,
    pub target_states: usize,
    pub flat_profiles: usize,
    pub bootstrap_restarts: usize,
    pub collapsed_bins: usize,
    pub degenerate_encodings: usize,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DelayEstimate {
    pub sample: LagSample,
    pub diagnostics: Diagnostics,
}

/// Runs all `B` replicates sequentially.
pub fn estimate_delay_detailed(
    source: &SpeedSeries,
    target: &SpeedSeries,
    config: &PipelineConfig,
) -> Result<DelayEstimate> {
    let pair = PreparedPair::new(source, target, config)?;
    let outcomes = (0..config.boot_reps)
        .map(|b| pair.replicate(b))
        .collect::<Result<Vec<_>>>()?;
    pair.assemble(outcomes)
}

/// Bootstrap sample of the delay from `source` to `target`, in sample periods.
pub fn estimate_delay(
    source: &SpeedSeries,
    target: &SpeedSeries,
    config: &PipelineConfig,
) -> Result<LagSample> {
    estimate_delay_detailed(source, target, config).map(|e| e.sample)
}

/// One `(L, w)` cell of a grid search.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridCell {
    pub len: usize,
    pub window: Window,
    /// `sigma2_hat / B`, absent when the cell was skipped.
    pub score: Option<f64>,
    pub sample: Option<LagSample>,
    pub skipped: Option<String>,
}

impl GridCell {
    fn tie_key(&self) -> (usize, usize) {
        let w = match self.window {
            Window::Full => self.len,
            Window::Samples(w) => w,
        };
        (w, self.len)
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GridSearchResult {
    pub cells: Vec<GridCell>,
    /// Index into `cells` of the minimum-score cell.
    pub best: usize,
}

impl GridSearchResult {
    pub fn best_cell(&self) -> &GridCell {
        &self.cells[self.best]
    }

    pub fn best_pair(&self) -> (usize, Window) {
        let c = self.best_cell();
        (c.len, c.window)
    }
}

/// Grid search over `(L, w)` with a caller-supplied estimator.
///
/// Each cell keeps the `L` most recent samples of both series and sets the
/// window to `w`. Cells whose estimation fails are recorded as skipped. The
/// winner minimizes `sigma2_hat / B`; ties go to smaller `w`, then smaller `L`
/// (`full` counts as `w = L`).
pub fn grid_search_with<F>(
    source: &SpeedSeries,
    target: &SpeedSeries,
    base: &PipelineConfig,
    len_grid: &[usize],
    window_grid: &[Window],
    mut estimate: F,
) -> Result<GridSearchResult>
where
    F: FnMut(&SpeedSeries, &SpeedSeries, &PipelineConfig) -> Result<LagSample>,
{
    if len_grid.is_empty() {
        return Err(Error::invalid("len_grid", "grid is empty"));
    }
    if window_grid.is_empty() {
        return Err(Error::invalid("window_grid", "grid is empty"));
    }
    let mut cells = Vec::with_capacity(len_grid.len() * window_grid.len());
    for &len in len_grid {
        for &window in window_grid {
            let mut config = base.clone();
            config.window = window;
            let run = source
                .most_recent(len)
                .and_then(|s| target.most_recent(len).map(|t| (s, t)))
                .and_then(|(s, t)| estimate(&s, &t, &config));
            cells.push(match run {
                Ok(sample) => GridCell {
                    len,
                    window,
                    score: Some(sample.score()),
                    sample: Some(sample),
                    skipped: None,
                },
                Err(e) => {
                    log::warn!("grid cell (L={len}, w={window}) skipped: {e}");
                    GridCell {
                        len,
                        window,
                        score: None,
                        sample: None,
                        skipped: Some(e.to_string()),
                    }
                }
            });
        }
    }
    let mut best: Option<usize> = None;
    for (i, cell) in cells.iter().enumerate() {
        let Some(score) = cell.score else { continue };
        best = match best {
            None => Some(i),
            Some(j) => {
                let incumbent = cells[j].score.unwrap_or(f64::INFINITY);
                if score < incumbent || (score == incumbent && cell.tie_key() < cells[j].tie_key())
                {
                    Some(i)
                } else {
                    Some(j)
                }
            }
        };
    }
    match best {
        Some(best) => Ok(GridSearchResult { cells, best }),
        None => Err(Error::invalid("len_grid", "every grid cell failed")),
    }
}

/// Grid search using the sequential [`estimate_delay`].
pub fn grid_search(
    source: &SpeedSeries,
    target: &SpeedSeries,
    base: &PipelineConfig,
    len_grid: &[usize],
    window_grid: &[Window],
) -> Result<GridSearchResult> {
    grid_search_with(source, target, base, len_grid, window_grid, estimate_delay)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn ramp(len: usize) -> SpeedSeries {
        SpeedSeries::new((0..len).map(|i| 50.0 + ((i * 13) % 7) as f64).collect()).unwrap()
    }

    fn fake(
        lags: Vec<usize>,
    ) -> impl FnMut(&SpeedSeries, &SpeedSeries, &PipelineConfig) -> Result<LagSample> {
        move |_, _, _| LagSample::from_lags(lags.clone())
    }

    #[test]
    fn rejects_mismatched_or_short_inputs() {
        let config = PipelineConfig::default();
        let err = estimate_delay(&ramp(100), &ramp(99), &config).unwrap_err();
        assert_eq!(err.param(), "target");
        let err = estimate_delay(&ramp(20), &ramp(20), &config).unwrap_err();
        assert_eq!(err.param(), "lag_max");
        let mut bad = config.clone();
        bad.encode_bins = 1;
        assert_eq!(
            estimate_delay(&ramp(100), &ramp(100), &bad)
                .unwrap_err()
                .param(),
            "encode_bins"
        );
    }

    #[test]
    fn lags_within_range_and_deterministic() {
        let config = PipelineConfig {
            boot_reps: 5,
            shuffle_reps: 5,
            lag_max: 10,
            ..PipelineConfig::default()
        };
        let a = estimate_delay(&ramp(80), &ramp(80), &config).unwrap();
        let b = estimate_delay(&ramp(80), &ramp(80), &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lags.len(), 5);
        assert!(a.lags.iter().all(|&l| (1..=10).contains(&l)));
    }

    #[test]
    fn single_cell_grid() {
        let r = grid_search_with(
            &ramp(60),
            &ramp(60),
            &PipelineConfig::default(),
            &[60],
            &[Window::Samples(20)],
            fake(vec![9, 11]),
        )
        .unwrap();
        assert_eq!(r.best, 0);
        assert_eq!(r.best_pair(), (60, Window::Samples(20)));
    }

    #[test]
    fn equal_scores_prefer_smaller_window_then_length() {
        let windows = [Window::Samples(30), Window::Full, Window::Samples(10)];
        let r = grid_search_with(
            &ramp(60),
            &ramp(60),
            &PipelineConfig::default(),
            &[60, 40],
            &windows,
            fake(vec![9, 11]),
        )
        .unwrap();
        assert_eq!(r.cells.len(), 6);
        assert_eq!(r.best_pair(), (40, Window::Samples(10)));
    }

    #[test]
    fn failing_cells_are_skipped() {
        let r = grid_search_with(
            &ramp(60),
            &ramp(60),
            &PipelineConfig::default(),
            &[80, 60],
            &[Window::Samples(20)],
            fake(vec![10]),
        )
        .unwrap();
        assert!(r.cells[0].skipped.is_some());
        assert_eq!(r.best, 1);
        let err = grid_search_with(
            &ramp(60),
            &ramp(60),
            &PipelineConfig::default(),
            &[80],
            &[Window::Samples(20)],
            fake(vec![10]),
        );
        assert!(err.is_err());
        assert!(grid_search(
            &ramp(60),
            &ramp(60),
            &PipelineConfig::default(),
            &[],
            &[Window::Full]
        )
        .is_err());
    }
}
