//! Shannon entropy, plug-in lag-specific transfer entropy, and its
//! shuffle-corrected (effective) variant.
//!
//! Histories are one step long on both sides: the target's own past is
//! `i(t-1)` and the source contributes `j(t-u)`.

use alloc::vec;
use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::Rng;

use crate::config::PipelineConfig;
use crate::error::{Error, Result};
use crate::preprocess::SymbolSeries;

/// Entropy in bits of a probability vector, with `0 · log 0 = 0`.
pub fn shannon_entropy(probabilities: &[f64]) -> Result<f64> {
    if probabilities.iter().any(|&p| !(p.is_finite() && p >= 0.0)) {
        return Err(Error::invalid(
            "probabilities",
            "entries must be finite and nonnegative",
        ));
    }
    let total: f64 = probabilities.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid("probabilities", "entries must sum to 1"));
    }
    Ok(probabilities
        .iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p * libm::log2(p))
        .fold(0.0, |acc, x| acc + x))
}

/// Reusable count tables for repeated TE evaluations on one alphabet pair.
struct TeCounter {
    nt: usize,
    ns: usize,
    /// `(i_t, i_{t-1}, j_{t-u})`
    triple: Vec<u32>,
    /// `(i_t, i_{t-1})`
    current_past: Vec<u32>,
    /// `(i_{t-1}, j_{t-u})`
    past_source: Vec<u32>,
    /// `i_{t-1}`
    past: Vec<u32>,
}

impl TeCounter {
    fn new(nt: usize, ns: usize) -> Self {
        TeCounter {
            nt,
            ns,
            triple: vec![0; nt * nt * ns],
            current_past: vec![0; nt * nt],
            past_source: vec![0; nt * ns],
            past: vec![0; nt],
        }
    }

    /// Plug-in TE in bits. `u` must satisfy `1 <= u <= len - 2`.
    fn evaluate(&mut self, source: &[u16], target: &[u16], u: usize) -> f64 {
        let (nt, ns) = (self.nt, self.ns);
        self.triple.fill(0);
        self.current_past.fill(0);
        self.past_source.fill(0);
        self.past.fill(0);

        let start = u.max(1);
        for t in start..target.len() {
            let a = target[t] as usize - 1;
            let b = target[t - 1] as usize - 1;
            let c = source[t - u] as usize - 1;
            self.triple[(a * nt + b) * ns + c] += 1;
            self.current_past[a * nt + b] += 1;
            self.past_source[b * ns + c] += 1;
            self.past[b] += 1;
        }
        let total = (target.len() - start) as f64;

        let mut te = 0.0;
        for a in 0..nt {
            for b in 0..nt {
                let ab = self.current_past[a * nt + b];
                if ab == 0 {
                    continue;
                }
                for c in 0..ns {
                    let abc = self.triple[(a * nt + b) * ns + c];
                    if abc == 0 {
                        continue;
                    }
                    let num = abc as f64 * self.past[b] as f64;
                    let den = ab as f64 * self.past_source[b * ns + c] as f64;
                    te += abc as f64 / total * libm::log2(num / den);
                }
            }
        }
        // A plug-in conditional mutual information is nonnegative; drop rounding dust.
        te.max(0.0)
    }
}

fn check_pair(source: &SymbolSeries, target: &SymbolSeries, u: usize) -> Result<()> {
    if source.len() != target.len() {
        return Err(Error::invalid("source", "source and target lengths differ"));
    }
    if u == 0 {
        return Err(Error::invalid("lag", "lag must be at least 1"));
    }
    if target.len() < 2 || u > target.len() - 2 {
        return Err(Error::SeriesTooShort {
            param: "lag",
            needed: u + 2,
            got: target.len(),
        });
    }
    Ok(())
}

/// Plug-in transfer entropy `J → I` at source lag `u`, in bits.
///
/// All probabilities come from one pass of triple counts over
/// `t = max(1, u) .. L` (0-based), so the result is a true empirical
/// conditional mutual information.
pub fn transfer_entropy(source: &SymbolSeries, target: &SymbolSeries, u: usize) -> Result<f64> {
    check_pair(source, target, u)?;
    Ok(TeCounter::new(target.n(), source.n()).evaluate(source.symbols(), target.symbols(), u))
}

/// Effective transfer entropy and its parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EffectiveTe {
    pub ete: f64,
    pub te: f64,
    pub shuffle_mean: f64,
}

/// Effective TE with a caller-supplied permutation of the source symbols.
///
/// `permute` receives a fresh copy of the source symbols for each of the
/// `shuffles` repetitions.
pub fn effective_transfer_entropy_with<F>(
    source: &SymbolSeries,
    target: &SymbolSeries,
    u: usize,
    shuffles: usize,
    permute: F,
) -> Result<EffectiveTe>
where
    F: FnMut(&mut [u16]),
{
    check_pair(source, target, u)?;
    if shuffles == 0 {
        return Err(Error::invalid("shuffle_reps", "must be at least 1"));
    }
    let mut counter = TeCounter::new(target.n(), source.n());
    let mut buffer = source.symbols().to_vec();
    Ok(ete_inner(
        &mut counter,
        source.symbols(),
        target.symbols(),
        u,
        shuffles,
        &mut buffer,
        permute,
    ))
}

fn ete_inner<F>(
    counter: &mut TeCounter,
    source: &[u16],
    target: &[u16],
    u: usize,
    shuffles: usize,
    buffer: &mut [u16],
    mut permute: F,
) -> EffectiveTe
where
    F: FnMut(&mut [u16]),
{
    let te = counter.evaluate(source, target, u);
    let mut acc = 0.0;
    for _ in 0..shuffles {
        buffer.copy_from_slice(source);
        permute(buffer);
        acc += counter.evaluate(buffer, target, u);
    }
    let shuffle_mean = acc / shuffles as f64;
    EffectiveTe {
        ete: te - shuffle_mean,
        te,
        shuffle_mean,
    }
}

/// Effective TE: plug-in TE minus the mean TE over `shuffles` uniform
/// permutations of the source.
pub fn effective_transfer_entropy<R: Rng + ?Sized>(
    source: &SymbolSeries,
    target: &SymbolSeries,
    u: usize,
    shuffles: usize,
    rng: &mut R,
) -> Result<EffectiveTe> {
    effective_transfer_entropy_with(source, target, u, shuffles, |s| s.shuffle(rng))
}

/// Per-lag TE, shuffle mean, and effective TE.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LagTEProfile {
    pub lags: Vec<usize>,
    pub te: Vec<f64>,
    pub ete: Vec<f64>,
    pub shuffle_mean: Vec<f64>,
}

impl LagTEProfile {
    /// Lag with the largest effective TE; ties go to the smallest lag.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for i in 1..self.ete.len() {
            if self.ete[i] > self.ete[best] {
                best = i;
            }
        }
        self.lags[best]
    }

    /// True when no lag carries positive effective TE.
    pub fn is_flat(&self) -> bool {
        self.ete.iter().all(|&e| e <= 0.0)
    }
}

/// Evaluates effective TE at every lag in `[lag_min, lag_max]` and returns the
/// argmax lag together with the full profile. Ties go to the smallest lag.
pub fn best_lag<R: Rng + ?Sized>(
    source: &SymbolSeries,
    target: &SymbolSeries,
    config: &PipelineConfig,
    rng: &mut R,
) -> Result<(usize, LagTEProfile)> {
    if config.lag_min == 0 || config.lag_min > config.lag_max {
        return Err(Error::invalid(
            "lag_min",
            "lag range must satisfy 1 <= lag_min <= lag_max",
        ));
    }
    if config.shuffle_reps == 0 {
        return Err(Error::invalid("shuffle_reps", "must be at least 1"));
    }
    check_pair(source, target, config.lag_max)?;

    let mut counter = TeCounter::new(target.n(), source.n());
    let mut buffer = source.symbols().to_vec();
    let lags: Vec<usize> = (config.lag_min..=config.lag_max).collect();
    let mut profile = LagTEProfile {
        te: Vec::with_capacity(lags.len()),
        ete: Vec::with_capacity(lags.len()),
        shuffle_mean: Vec::with_capacity(lags.len()),
        lags,
    };
    for &u in &profile.lags {
        let e = ete_inner(
            &mut counter,
            source.symbols(),
            target.symbols(),
            u,
            config.shuffle_reps,
            &mut buffer,
            |s| s.shuffle(rng),
        );
        profile.te.push(e.te);
        profile.ete.push(e.ete);
        profile.shuffle_mean.push(e.shuffle_mean);
    }
    Ok((profile.argmax(), profile))
}
