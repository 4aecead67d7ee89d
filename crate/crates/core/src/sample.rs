use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::stats::two_sided_z;

/// Bootstrap sample of estimated lags and its summary functionals.
///
/// Lags are in sample periods. `sigma2_hat` uses divisor `B`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LagSample {
    pub lags: Vec<usize>,
    pub mu_hat: f64,
    pub sigma2_hat: f64,
    /// `sqrt(sigma2_hat / B)`.
    pub stderr: f64,
    /// `mu_hat ± 1.96 · stderr`.
    pub ci95: (f64, f64),
}

impl LagSample {
    pub fn from_lags(lags: Vec<usize>) -> Result<Self> {
        let (mu_hat, sigma2_hat) = functionals(&lags)?;
        let b = lags.len();
        let ci95 = mean_interval(mu_hat, sigma2_hat, b, 0.95);
        Ok(LagSample {
            stderr: libm::sqrt(sigma2_hat / b as f64),
            lags,
            mu_hat,
            sigma2_hat,
            ci95,
        })
    }

    pub fn boot_reps(&self) -> usize {
        self.lags.len()
    }

    /// Uncertainty of `mu_hat`, `sigma2_hat / B`; the grid-search objective.
    pub fn score(&self) -> f64 {
        self.sigma2_hat / self.lags.len() as f64
    }

    /// `(lag, count)` pairs in ascending lag order, skipping empty lags.
    pub fn histogram(&self) -> Vec<(usize, usize)> {
        let mut sorted = self.lags.clone();
        sorted.sort_unstable();
        let mut out: Vec<(usize, usize)> = Vec::new();
        for lag in sorted {
            match out.last_mut() {
                Some((l, c)) if *l == lag => *c += 1,
                _ => out.push((lag, 1)),
            }
        }
        out
    }

    /// Mean absolute deviation of the lags from a known true lag.
    pub fn mae(&self, true_lag: usize) -> f64 {
        crate::simulate::mae(&self.lags, true_lag)
    }
}

/// Mean and population-form variance (divisor `B`) of the bootstrap lags.
pub fn functionals(lags: &[usize]) -> Result<(f64, f64)> {
    if lags.is_empty() {
        return Err(Error::invalid("lags", "bootstrap sample is empty"));
    }
    let b = lags.len() as f64;
    let mu = lags.iter().map(|&l| l as f64).sum::<f64>() / b;
    // Same quantity as mean(u²) − mean(u)², evaluated as mean squared deviation.
    let var = lags
        .iter()
        .map(|&l| {
            let d = l as f64 - mu;
            d * d
        })
        .sum::<f64>()
        / b;
    Ok((mu, var.max(0.0)))
}

/// Normal-approximation interval `mu ± z · sqrt(sigma2 / B)` for the bootstrap mean.
pub fn mean_interval(mu_hat: f64, sigma2_hat: f64, boot_reps: usize, level: f64) -> (f64, f64) {
    let half = two_sided_z(level) * libm::sqrt(sigma2_hat.max(0.0) / boot_reps.max(1) as f64);
    (mu_hat - half, mu_hat + half)
}
