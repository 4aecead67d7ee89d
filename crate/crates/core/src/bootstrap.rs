//! Finite-state Markov-chain bootstrap of a residual series.
//!
//! Residuals are discretized into equal-frequency states. The fitted chain is
//! walked to produce a new state path, and each state is materialized as a
//! uniform draw from the residuals originally observed in that state.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{Error, Result};
use crate::stats::sorted_copy;

/// Fitted first-order chain over discretized residuals.
#[derive(Debug, Clone, PartialEq)]
pub struct MarkovModel {
    /// `[min, max]` of the residuals assigned to each state.
    intervals: Vec<(f64, f64)>,
    pi_hat: Vec<f64>,
    /// Row-major `n × n` transition matrix.
    p_hat: Vec<f64>,
    unreachable: Vec<bool>,
    pools: Vec<Vec<f64>>,
    requested_states: usize,
    pi_cumulative: Vec<f64>,
    p_cumulative: Vec<f64>,
}

impl MarkovModel {
    /// Effective number of states, possibly fewer than requested.
    pub fn n_states(&self) -> usize {
        self.pi_hat.len()
    }

    pub fn requested_states(&self) -> usize {
        self.requested_states
    }

    pub fn intervals(&self) -> &[(f64, f64)] {
        &self.intervals
    }

    pub fn pi_hat(&self) -> &[f64] {
        &self.pi_hat
    }

    /// Row `i` of the transition matrix. All zeros when the row is unreachable.
    pub fn p_row(&self, i: usize) -> &[f64] {
        let n = self.n_states();
        &self.p_hat[i * n..(i + 1) * n]
    }

    /// True for a state never left during the observed path (seen only at the end).
    pub fn is_unreachable(&self, i: usize) -> bool {
        self.unreachable[i]
    }

    pub fn pool(&self, i: usize) -> &[f64] {
        &self.pools[i]
    }

    /// State of an observed residual value, by interval lookup.
    pub fn state_of(&self, value: f64) -> Option<usize> {
        self.intervals
            .iter()
            .position(|&(lo, hi)| lo <= value && value <= hi)
    }

    fn from_path(states: &[usize], values: &[f64], n: usize, requested_states: usize) -> Self {
        let len = states.len();
        let mut pools = vec![Vec::new(); n];
        for (&s, &v) in states.iter().zip(values) {
            pools[s].push(v);
        }
        let pi_hat: Vec<f64> = pools.iter().map(|p| p.len() as f64 / len as f64).collect();

        let mut counts = vec![0usize; n * n];
        let mut visits = vec![0usize; n];
        for pair in states.windows(2) {
            counts[pair[0] * n + pair[1]] += 1;
            visits[pair[0]] += 1;
        }
        let mut p_hat = vec![0.0; n * n];
        let mut unreachable = vec![false; n];
        for i in 0..n {
            if visits[i] == 0 {
                unreachable[i] = true;
                continue;
            }
            for j in 0..n {
                p_hat[i * n + j] = counts[i * n + j] as f64 / visits[i] as f64;
            }
        }
        let intervals = pools
            .iter()
            .map(|p| {
                let lo = p.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                (lo, hi)
            })
            .collect();
        let pi_cumulative = cumulative(&pi_hat);
        let p_cumulative = p_hat.chunks(n).flat_map(cumulative).collect();
        MarkovModel {
            intervals,
            pi_hat,
            p_hat,
            unreachable,
            pools,
            requested_states,
            pi_cumulative,
            p_cumulative,
        }
    }

    fn draw_initial<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        draw(&self.pi_cumulative, rng)
    }

    fn draw_next<R: Rng + ?Sized>(&self, from: usize, rng: &mut R) -> usize {
        let n = self.n_states();
        draw(&self.p_cumulative[from * n..(from + 1) * n], rng)
    }
}

fn cumulative(weights: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    weights
        .iter()
        .map(|w| {
            acc += w;
            acc
        })
        .collect()
}

/// Inverse-CDF draw from a cumulative table; rounding slack at the top goes to
/// the last state with positive mass.
fn draw<R: Rng + ?Sized>(cumulative: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.random::<f64>() * cumulative[cumulative.len() - 1];
    match cumulative.iter().position(|&c| u < c) {
        Some(i) => i,
        None => {
            let mut i = cumulative.len() - 1;
            while i > 0 && cumulative[i] == cumulative[i - 1] {
                i -= 1;
            }
            i
        }
    }
}

/// Fits an `n_states` chain to `residuals` using equal-frequency bins.
///
/// When there are fewer distinct residual values than requested states, the
/// state count drops to the number of distinct values. Ties can also merge
/// bins; the model only keeps occupied states.
pub fn fit_markov(residuals: &[f64], n_states: usize) -> Result<MarkovModel> {
    if residuals.len() < 2 {
        return Err(Error::SeriesTooShort {
            param: "residuals",
            needed: 2,
            got: residuals.len(),
        });
    }
    if n_states == 0 {
        return Err(Error::invalid("residual_states", "must be at least 1"));
    }
    if let Some(i) = residuals.iter().position(|v| !v.is_finite()) {
        return Err(Error::invalid(
            "residuals",
            alloc::format!("non-finite value at index {i}"),
        ));
    }
    let sorted = sorted_copy(residuals);
    let len = sorted.len();
    let mut distinct = sorted.clone();
    distinct.dedup();
    let n = if n_states > distinct.len() {
        log::warn!(
            "requested {n_states} residual states but only {} distinct values; reducing",
            distinct.len()
        );
        distinct.len()
    } else {
        n_states
    };

    // A value's state follows the rank of its first occurrence, so ties share a state.
    let raw: Vec<usize> = residuals
        .iter()
        .map(|&v| sorted.partition_point(|&s| s < v) * n / len)
        .collect();

    // Relabel to occupied states only, preserving order.
    let mut occupied = vec![false; n];
    for &s in &raw {
        occupied[s] = true;
    }
    let mut label = vec![usize::MAX; occupied.len()];
    let mut next = 0;
    for (i, &o) in occupied.iter().enumerate() {
        if o {
            label[i] = next;
            next += 1;
        }
    }
    let states: Vec<usize> = raw.iter().map(|&s| label[s]).collect();
    Ok(MarkovModel::from_path(&states, residuals, next, n_states))
}

/// A simulated state path plus the number of unreachable-state restarts.
#[derive(Debug, Clone, PartialEq)]
pub struct StatePath {
    pub states: Vec<usize>,
    pub restarts: usize,
}

/// Walks the fitted chain for `len` steps starting from a draw of `pi_hat`.
///
/// Reaching a state with no observed outgoing transition redraws that step
/// from `pi_hat` and counts a restart.
pub fn sample_state_path<R: Rng + ?Sized>(
    model: &MarkovModel,
    len: usize,
    rng: &mut R,
) -> StatePath {
    let mut states = Vec::with_capacity(len);
    let mut restarts = 0;
    if len == 0 {
        return StatePath { states, restarts };
    }
    let mut current = model.draw_initial(rng);
    states.push(current);
    for _ in 1..len {
        current = if model.unreachable[current] {
            restarts += 1;
            model.draw_initial(rng)
        } else {
            model.draw_next(current, rng)
        };
        states.push(current);
    }
    StatePath { states, restarts }
}

/// One bootstrap series `trend + R*`.
#[derive(Debug, Clone, PartialEq)]
pub struct BootstrapSeries {
    pub values: Vec<f64>,
    pub restarts: usize,
}

/// Generates `trend[t] + R*[t]` where `R*` is a walk of `model` materialized by
/// uniform draws from each state's residual pool.
pub fn sample_bootstrap_series<R: Rng + ?Sized>(
    model: &MarkovModel,
    trend: &[f64],
    rng: &mut R,
) -> Result<BootstrapSeries> {
    if trend.is_empty() {
        return Err(Error::invalid("trend", "trend is empty"));
    }
    let path = sample_state_path(model, trend.len(), rng);
    let values = path
        .states
        .iter()
        .zip(trend)
        .map(|(&s, &tr)| {
            let pool = &model.pools[s];
            tr + pool[rng.random_range(0..pool.len())]
        })
        .collect();
    Ok(BootstrapSeries {
        values,
        restarts: path.restarts,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::derive_replicate_rng;

    #[test]
    fn two_state_counting() {
        let m = fit_markov(&[-1.0, -1.0, 1.0, 1.0], 2).unwrap();
        assert_eq!(m.n_states(), 2);
        assert_eq!(m.pi_hat(), &[0.5, 0.5]);
        assert_eq!(m.p_row(0), &[0.5, 0.5]);
        assert_eq!(m.p_row(1), &[0.0, 1.0]);
    }

    #[test]
    fn alternating_path() {
        let m = fit_markov(&[0.0, 1.0, 0.0, 1.0, 0.0, 1.0], 2).unwrap();
        assert_eq!(m.p_row(0), &[0.0, 1.0]);
        assert_eq!(m.p_row(1), &[1.0, 0.0]);
    }

    #[test]
    fn constant_residuals_single_state() {
        let m = fit_markov(&[0.25; 12], 10).unwrap();
        assert_eq!(m.n_states(), 1);
        assert_eq!(m.p_row(0), &[1.0]);
        assert_eq!(m.requested_states(), 10);
        let trend: Vec<f64> = (0..12).map(f64::from).collect();
        let out = sample_bootstrap_series(&m, &trend, &mut derive_replicate_rng(0, 0, 0)).unwrap();
        let expected: Vec<f64> = trend.iter().map(|t| t + 0.25).collect();
        assert_eq!(out.values, expected);
    }

    #[test]
    fn state_count_reduced_to_distinct() {
        let m = fit_markov(&[1.0, 2.0, 1.0, 3.0, 2.0], 10).unwrap();
        assert_eq!(m.n_states(), 3);
    }

    #[test]
    fn equal_frequency_bins() {
        let x: Vec<f64> = (0..100).map(|i| ((i * 37) % 100) as f64).collect();
        let m = fit_markov(&x, 4).unwrap();
        assert_eq!(m.n_states(), 4);
        for i in 0..4 {
            assert_eq!(m.pool(i).len(), 25);
        }
    }

    #[test]
    fn terminal_only_state_is_unreachable_and_restarts() {
        // State of value 9 is only seen at the last step.
        let m = fit_markov(&[0.0, 1.0, 0.0, 1.0, 9.0], 3).unwrap();
        let top = m.state_of(9.0).unwrap();
        assert!(m.is_unreachable(top));
        assert!(m.p_row(top).iter().all(|&p| p == 0.0));
        let mut rng = derive_replicate_rng(3, 0, 0);
        let path = sample_state_path(&m, 5000, &mut rng);
        let visits = path.states.iter().filter(|&&s| s == top).count();
        assert!(visits > 0);
        // Every visit that is not the final step forces a restart.
        let non_final = path.states[..path.states.len() - 1]
            .iter()
            .filter(|&&s| s == top)
            .count();
        assert_eq!(path.restarts, non_final);
    }

    #[test]
    fn fit_rejects_bad_input() {
        assert!(fit_markov(&[1.0], 2).is_err());
        assert!(fit_markov(&[1.0, 2.0], 0).is_err());
    }

    #[test]
    fn sampling_is_deterministic_and_from_pool() {
        let x: Vec<f64> = (0..50)
            .map(|i| ((i * 7919) % 31) as f64 / 7.0 - 2.0)
            .collect();
        let m = fit_markov(&x, 5).unwrap();
        let trend = vec![0.0; 200];
        let a = sample_bootstrap_series(&m, &trend, &mut derive_replicate_rng(9, 1, 0)).unwrap();
        let b = sample_bootstrap_series(&m, &trend, &mut derive_replicate_rng(9, 1, 0)).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.values.len(), 200);
        assert!(a.values.iter().all(|v| x.contains(v)));
        assert!(sample_bootstrap_series(&m, &[], &mut derive_replicate_rng(9, 1, 0)).is_err());
    }
}
