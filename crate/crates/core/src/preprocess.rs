//! Trend/residual decomposition, windowed normalization, and symbolic encoding.

use alloc::vec::Vec;

use crate::config::{validate_quantiles, NormMethod, Window};
use crate::error::{Error, Result};
use crate::stats::{mean, normal_cdf, percentile_sorted, sorted_copy};

/// Split of a series into a one-sided moving-average trend and its residual.
#[derive(Debug, Clone, PartialEq)]
pub struct Decomposition {
    pub trend: Vec<f64>,
    pub residual: Vec<f64>,
    pub order: usize,
}

/// Decomposes `values` into `trend + residual` with a one-sided moving average
/// of order `m`. The first `m - 1` samples average over the available prefix.
pub fn decompose(values: &[f64], m: usize) -> Result<Decomposition> {
    if m == 0 {
        return Err(Error::invalid("trend_order", "must be at least 1"));
    }
    if values.is_empty() {
        return Err(Error::invalid("values", "series is empty"));
    }
    let mut trend = Vec::with_capacity(values.len());
    let mut residual = Vec::with_capacity(values.len());
    for t in 0..values.len() {
        let start = (t + 1).saturating_sub(m);
        let window = &values[start..=t];
        let tr = window.iter().sum::<f64>() / window.len() as f64;
        trend.push(tr);
        residual.push(exact_residual(values[t], tr));
    }
    Ok(Decomposition {
        trend,
        residual,
        order: m,
    })
}

/// `x - trend`, nudged by a few ulps so that `trend + r` rounds back to `x`
/// whenever such an `r` is representable.
fn exact_residual(x: f64, trend: f64) -> f64 {
    let mut r = x - trend;
    for _ in 0..4 {
        let back = trend + r;
        if back == x {
            break;
        }
        r = if back < x { next_up(r) } else { next_down(r) };
    }
    r
}

fn next_up(x: f64) -> f64 {
    if x == 0.0 {
        return f64::from_bits(1);
    }
    let bits = x.to_bits();
    f64::from_bits(if x > 0.0 { bits + 1 } else { bits - 1 })
}

fn next_down(x: f64) -> f64 {
    -next_up(-x)
}

/// 25th/50th/75th percentiles of a window.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowStats {
    pub f25: f64,
    pub f50: f64,
    pub f75: f64,
}

impl WindowStats {
    fn of_sorted(sorted: &[f64]) -> Self {
        WindowStats {
            f25: percentile_sorted(sorted, 0.25),
            f50: percentile_sorted(sorted, 0.50),
            f75: percentile_sorted(sorted, 0.75),
        }
    }
}

/// Window of `values` ending at index `t` (0-based, inclusive).
fn window_slice(values: &[f64], t: usize, window: Window) -> &[f64] {
    match window {
        Window::Full => values,
        Window::Samples(w) => &values[(t + 1).saturating_sub(w.max(1))..=t],
    }
}

/// Percentiles of the last `min(t + 1, w)` samples ending at index `t`
/// (0-based), with linear interpolation between order statistics.
///
/// Panics if `t` is out of bounds.
pub fn window_percentiles(values: &[f64], t: usize, window: Window) -> WindowStats {
    WindowStats::of_sorted(&sorted_copy(window_slice(values, t, window)))
}

/// Normalizes `values` point by point against its forefront window.
///
/// Degenerate spreads (zero IQR, zero standard deviation, zero maximum) map to
/// the neutral value of each method: `0.5` for nonlinear, `0` otherwise.
/// Min-max is `x / max(window)`; no minimum is subtracted.
pub fn normalize(values: &[f64], method: NormMethod, window: Window) -> Vec<f64> {
    if method == NormMethod::None {
        return values.to_vec();
    }
    if window == Window::Full {
        let transform = PointTransform::fit(values, method);
        return values.iter().map(|&x| transform.apply(x)).collect();
    }
    (0..values.len())
        .map(|t| PointTransform::fit(window_slice(values, t, window), method).apply(values[t]))
        .collect()
}

enum PointTransform {
    Identity,
    Scale { max: f64 },
    Standardize { mean: f64, std: f64 },
    Nonlinear(WindowStats),
}

impl PointTransform {
    fn fit(window: &[f64], method: NormMethod) -> Self {
        match method {
            NormMethod::None => PointTransform::Identity,
            NormMethod::MinMax => PointTransform::Scale {
                max: window.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            },
            NormMethod::ZScore => {
                let mu = mean(window);
                let var =
                    window.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / window.len() as f64;
                PointTransform::Standardize {
                    mean: mu,
                    std: libm::sqrt(var),
                }
            }
            NormMethod::Nonlinear => {
                PointTransform::Nonlinear(WindowStats::of_sorted(&sorted_copy(window)))
            }
        }
    }

    fn apply(&self, x: f64) -> f64 {
        match *self {
            PointTransform::Identity => x,
            PointTransform::Scale { max } => {
                if max == 0.0 {
                    0.0
                } else {
                    x / max
                }
            }
            PointTransform::Standardize { mean, std } => {
                if std == 0.0 {
                    0.0
                } else {
                    (x - mean) / std
                }
            }
            PointTransform::Nonlinear(s) => {
                let iqr = s.f75 - s.f25;
                let z = if iqr > 0.0 {
                    0.5 * (x - s.f50) / iqr
                } else {
                    0.0
                };
                // Keep the output inside the open unit interval when Φ saturates.
                normal_cdf(z).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
            }
        }
    }
}

/// A symbol sequence over the alphabet `1..=n`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolSeries {
    symbols: Vec<u16>,
    n: usize,
    bounds: Vec<f64>,
    collapsed_bins: usize,
    degenerate: bool,
}

impl SymbolSeries {
    /// Wraps already-discrete symbols. Every symbol must lie in `1..=n`.
    pub fn from_symbols(symbols: Vec<u16>, n: usize) -> Result<Self> {
        if n == 0 || n > u16::MAX as usize {
            return Err(Error::invalid("n", "alphabet size out of range"));
        }
        if let Some(i) = symbols.iter().position(|&s| s == 0 || s as usize > n) {
            return Err(Error::invalid(
                "symbols",
                alloc::format!("symbol at index {i} outside 1..={n}"),
            ));
        }
        Ok(SymbolSeries {
            symbols,
            n,
            bounds: Vec::new(),
            collapsed_bins: 0,
            degenerate: false,
        })
    }

    pub fn symbols(&self) -> &[u16] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    /// Alphabet size after any empty bins were collapsed.
    pub fn n(&self) -> usize {
        self.n
    }

    /// Bin bounds `q1 < … < q(n-1)`; empty for series built from raw symbols.
    pub fn bounds(&self) -> &[f64] {
        &self.bounds
    }

    /// Number of bins dropped because two quantile bounds coincided.
    pub fn collapsed_bins(&self) -> usize {
        self.collapsed_bins
    }

    /// True when every input value was equal.
    pub fn is_degenerate(&self) -> bool {
        self.degenerate
    }

    /// Symbol for `x` under this series' bounds.
    pub fn symbol_for(&self, x: f64) -> u16 {
        assign_symbol(&self.bounds, x)
    }
}

fn assign_symbol(bounds: &[f64], x: f64) -> u16 {
    let k = bounds.len();
    if k == 0 || x <= bounds[0] {
        1
    } else if x >= bounds[k - 1] {
        (k + 1) as u16
    } else {
        1 + bounds.iter().filter(|&&q| q < x).count() as u16
    }
}

/// Encodes `values` into `n` symbols using empirical-quantile bin bounds.
///
/// Values `<= q1` map to 1, values `>= q(n-1)` map to `n`, and values strictly
/// between consecutive bounds map to the bin in between. Coinciding bounds
/// collapse the empty bin, so the returned alphabet may be smaller than `n`.
pub fn encode(values: &[f64], n: usize, quantile_probs: &[f64]) -> Result<SymbolSeries> {
    if n < 2 {
        return Err(Error::invalid("encode_bins", "need at least 2 bins"));
    }
    if n > u16::MAX as usize {
        return Err(Error::invalid("encode_bins", "too many bins"));
    }
    validate_quantiles(n, quantile_probs)?;
    if values.is_empty() {
        return Err(Error::invalid("values", "series is empty"));
    }
    let sorted = sorted_copy(values);
    let mut bounds: Vec<f64> = quantile_probs
        .iter()
        .map(|&p| percentile_sorted(&sorted, p))
        .collect();
    bounds.dedup();
    let collapsed_bins = n - 1 - bounds.len();
    let degenerate = sorted[0] == sorted[sorted.len() - 1];
    if degenerate {
        log::warn!("encoding a constant series; every value maps to symbol 1");
    } else if collapsed_bins > 0 {
        log::warn!("{collapsed_bins} empty encoding bin(s) collapsed on low-variance data");
    }
    let symbols = values.iter().map(|&x| assign_symbol(&bounds, x)).collect();
    Ok(SymbolSeries {
        symbols,
        n: bounds.len() + 1,
        bounds,
        collapsed_bins,
        degenerate,
    })
}
