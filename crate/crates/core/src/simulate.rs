//! Synthetic source/target pair with a known propagation delay.
//!
//! The source `X` holds a free-flow level, decays geometrically during the
//! congestion regime, then recovers geometrically. The target `Y` follows
//! `0.5 · X(t - u0) + 20` once congestion starts.

use alloc::vec::Vec;

use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::rng::{derive_replicate_rng, StreamTag};
use crate::series::SpeedSeries;

const REFERENCE_LEN: usize = 120;
const ONSET: usize = 10;
const RECOVERY: usize = 95;
/// Level assumed for the source before the first sample.
const PRE_SAMPLE_LEVEL: f64 = 100.0;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SimSpec {
    /// True source-to-target lag, in samples.
    pub u0: usize,
    /// Standard deviation of both noise terms.
    pub noise_sigma: f64,
    pub length: usize,
    pub seed: u64,
}

impl Default for SimSpec {
    fn default() -> Self {
        SimSpec {
            u0: 10,
            noise_sigma: 1.0,
            length: REFERENCE_LEN,
            seed: 0,
        }
    }
}

impl SimSpec {
    pub fn validate(&self) -> Result<()> {
        if self.u0 == 0 {
            return Err(Error::invalid("u0", "true lag must be at least 1"));
        }
        if !(self.noise_sigma.is_finite() && self.noise_sigma >= 0.0) {
            return Err(Error::invalid(
                "noise_sigma",
                "must be finite and nonnegative",
            ));
        }
        if self.length <= self.u0 + 10 {
            return Err(Error::invalid("length", "must exceed u0 + 10"));
        }
        Ok(())
    }

    /// Congestion onset and recovery indices (1-based), scaled from the
    /// 120-sample reference design.
    pub fn breakpoints(&self) -> (usize, usize) {
        let scale =
            |b: usize| libm::round((b * self.length) as f64 / REFERENCE_LEN as f64) as usize;
        (scale(ONSET).max(1), scale(RECOVERY).max(1))
    }
}

/// Generates the `(X, Y)` pair described by `spec`.
pub fn generate_pair(spec: &SimSpec) -> Result<(SpeedSeries, SpeedSeries)> {
    spec.validate()?;
    let len = spec.length;
    let (onset, recovery) = spec.breakpoints();
    let mut rng = derive_replicate_rng(spec.seed, 0, StreamTag::SimulationNoise);
    let normal =
        Normal::new(0.0, spec.noise_sigma).map_err(|_| Error::invalid("noise_sigma", "invalid"))?;
    let eps_x: Vec<f64> = (0..len).map(|_| normal.sample(&mut rng)).collect();
    let eps_y: Vec<f64> = (0..len).map(|_| normal.sample(&mut rng)).collect();

    // 1-based time t is stored at index t - 1.
    let mut x = Vec::with_capacity(len);
    for t in 1..=len {
        let prev = if t == 1 { PRE_SAMPLE_LEVEL } else { x[t - 2] };
        let value = if t < onset {
            100.0
        } else if t < recovery {
            0.95 * prev
        } else {
            1.10 * prev
        };
        x.push(value + eps_x[t - 1]);
    }
    let x_at = |s: isize| {
        if s <= 0 {
            PRE_SAMPLE_LEVEL
        } else {
            x[s as usize - 1]
        }
    };
    let y: Vec<f64> = (1..=len)
        .map(|t| {
            let base = if t < onset {
                70.0
            } else {
                0.5 * x_at(t as isize - spec.u0 as isize) + 20.0
            };
            base + eps_y[t - 1]
        })
        .collect();
    Ok((
        SpeedSeries::new(x)?.labeled("X"),
        SpeedSeries::new(y)?.labeled("Y"),
    ))
}

/// Mean absolute deviation of estimated lags from the true lag. Zero for an
/// empty slice.
pub fn mae(lags: &[usize], u0: usize) -> f64 {
    if lags.is_empty() {
        return 0.0;
    }
    lags.iter().map(|&l| l.abs_diff(u0) as f64).sum::<f64>() / lags.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    fn noiseless(u0: usize) -> (SpeedSeries, SpeedSeries) {
        generate_pair(&SimSpec {
            u0,
            noise_sigma: 0.0,
            ..SimSpec::default()
        })
        .unwrap()
    }

    #[test]
    fn noiseless_recursion() {
        let (x, y) = noiseless(10);
        let x = x.values();
        let y = y.values();
        assert!(x[..9].iter().all(|&v| v == 100.0));
        assert_eq!(x[9], 95.0); // X_10
        assert_eq!(x[10], 90.25); // X_11
        assert_eq!(y[9], 70.0); // Y_10 = 0.5 · X_0 + 20
        assert!(y[..9].iter().all(|&v| v == 70.0));
        // growth regime from t = 95
        assert_eq!(x[94], 1.10 * x[93]);
        assert_eq!(x[93], 0.95 * x[92]);
    }

    #[test]
    fn noiseless_coupling_identity() {
        for u0 in [1, 5, 10, 15] {
            let (x, y) = noiseless(u0);
            for t in 10..=120usize {
                let xs = if t > u0 {
                    x.values()[t - u0 - 1]
                } else {
                    100.0
                };
                assert!((y.values()[t - 1] - 20.0 - 0.5 * xs).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn noisy_pair_decays_then_recovers() {
        let spec = SimSpec {
            seed: 7,
            ..SimSpec::default()
        };
        let (x, y) = generate_pair(&spec).unwrap();
        assert_eq!((x.len(), y.len()), (120, 120));
        assert_eq!(generate_pair(&spec).unwrap().0, x);
        let v = x.values();
        assert!(v[5] > 95.0 && v[5] < 105.0);
        assert!(v[93] < 10.0);
        assert!(v[119] > v[93]);
    }

    #[test]
    fn breakpoints_scale() {
        assert_eq!(SimSpec::default().breakpoints(), (10, 95));
        let s = SimSpec {
            length: 240,
            ..SimSpec::default()
        };
        assert_eq!(s.breakpoints(), (20, 190));
    }

    #[test]
    fn invalid_specs() {
        assert!(generate_pair(&SimSpec {
            u0: 0,
            ..SimSpec::default()
        })
        .is_err());
        assert!(generate_pair(&SimSpec {
            length: 20,
            ..SimSpec::default()
        })
        .is_err());
        assert!(generate_pair(&SimSpec {
            noise_sigma: -1.0,
            ..SimSpec::default()
        })
        .is_err());
    }

    #[test]
    fn mae_examples() {
        assert_eq!(mae(&[10, 10, 10], 10), 0.0);
        assert_eq!(mae(&[8, 12], 10), 2.0);
    }
}
