//! Simulation batches over (lag, noise, method, window) grids.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use lagte_core::{generate_pair, NormMethod, PipelineConfig, SimSpec, Window};

use crate::report::write_config_comment;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchSpec {
    pub lags: Vec<usize>,
    pub noises: Vec<f64>,
    pub methods: Vec<NormMethod>,
    pub windows: Vec<Window>,
    /// Simulated pairs per cell.
    pub replicates: usize,
    pub length: usize,
    /// Replicate `r` simulates with seed `base.seed + r` and estimates with the
    /// same seed, so every cell sees the same pairs for a given lag and noise.
    pub base: PipelineConfig,
}

impl BatchSpec {
    pub fn cell_count(&self) -> usize {
        self.lags.len() * self.noises.len() * self.methods.len() * self.windows.len()
    }

    fn validate(&self) -> Result<()> {
        let empty = [
            ("lags", self.lags.is_empty()),
            ("noises", self.noises.is_empty()),
            ("methods", self.methods.is_empty()),
            ("windows", self.windows.is_empty()),
        ];
        if let Some((name, _)) = empty.iter().find(|(_, e)| *e) {
            return Err(Error::Data(format!("batch grid `{name}` is empty")));
        }
        if self.replicates == 0 {
            return Err(Error::Data("batch needs at least one replicate".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchCell {
    pub lag: usize,
    pub noise: f64,
    pub method: NormMethod,
    pub window: Window,
    /// Replicates that produced an estimate.
    pub completed: usize,
    pub mean_sigma: f64,
    pub std_sigma: f64,
    pub mean_mae: f64,
    pub std_mae: f64,
    pub mean_mu: f64,
    pub failures: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BatchReport {
    pub spec: BatchSpec,
    pub cells: Vec<BatchCell>,
}

/// Per-replicate result: (μ̂, σ̂, MAE).
type Run = std::result::Result<(f64, f64, f64), String>;

pub fn run_batch(spec: &BatchSpec) -> Result<BatchReport> {
    spec.validate()?;
    spec.base.validate()?;
    let mut cells = Vec::with_capacity(spec.cell_count());
    for &lag in &spec.lags {
        for &noise in &spec.noises {
            for &method in &spec.methods {
                for &window in &spec.windows {
                    cells.push((lag, noise, method, window));
                }
            }
        }
    }
    let jobs: Vec<(usize, usize)> = (0..cells.len())
        .flat_map(|c| (0..spec.replicates).map(move |r| (c, r)))
        .collect();
    let runs: Vec<Run> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (lag, noise, method, window) = cells[c];
            let seed = spec.base.seed.wrapping_add(r as u64);
            let sim = SimSpec {
                u0: lag,
                noise_sigma: noise,
                length: spec.length,
                seed,
            };
            let config = PipelineConfig {
                norm_method: method,
                window,
                seed,
                ..spec.base.clone()
            };
            let (x, y) = generate_pair(&sim).map_err(|e| format!("replicate {r}: {e}"))?;
            let sample = lagte_core::estimate_delay(&x, &y, &config)
                .map_err(|e| format!("replicate {r}: {e}"))?;
            Ok((sample.mu_hat, sample.sigma2_hat.sqrt(), sample.mae(lag)))
        })
        .collect();

    let cells = cells
        .iter()
        .zip(runs.chunks(spec.replicates))
        .map(|(&(lag, noise, method, window), runs)| {
            let ok: Vec<(f64, f64, f64)> = runs
                .iter()
                .filter_map(|r| r.as_ref().ok().copied())
                .collect();
            let failures = runs
                .iter()
                .filter_map(|r| r.as_ref().err().cloned())
                .collect();
            let (mean_mu, _) = mean_std(ok.iter().map(|r| r.0));
            let (mean_sigma, std_sigma) = mean_std(ok.iter().map(|r| r.1));
            let (mean_mae, std_mae) = mean_std(ok.iter().map(|r| r.2));
            BatchCell {
                lag,
                noise,
                method,
                window,
                completed: ok.len(),
                mean_sigma,
                std_sigma,
                mean_mae,
                std_mae,
                mean_mu,
                failures,
            }
        })
        .collect();
    Ok(BatchReport {
        spec: spec.clone(),
        cells,
    })
}

/// Mean and sample standard deviation; NaN mean for no data, zero spread
/// for a single value.
fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.clone().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let ss: f64 = values.map(|v| (v - mean) * (v - mean)).sum();
    (mean, (ss / (n - 1) as f64).sqrt())
}

impl BatchReport {
    pub fn cell(
        &self,
        lag: usize,
        noise: f64,
        method: NormMethod,
        window: Window,
    ) -> Option<&BatchCell> {
        self.cells
            .iter()
            .find(|c| c.lag == lag && c.noise == noise && c.method == method && c.window == window)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut out = out;
        write_config_comment(&mut out, &self.spec)?;
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record([
            "lag",
            "noise",
            "method",
            "window",
            "completed",
            "mean_sigma",
            "std_sigma",
            "mean_mae",
            "std_mae",
            "mean_mu",
        ])?;
        for c in &self.cells {
            wtr.write_record([
                c.lag.to_string(),
                c.noise.to_string(),
                c.method.to_string(),
                c.window.to_string(),
                c.completed.to_string(),
                c.mean_sigma.to_string(),
                c.std_sigma.to_string(),
                c.mean_mae.to_string(),
                c.std_mae.to_string(),
                c.mean_mu.to_string(),
            ])?;
        }
        wtr.flush().map_err(|e| Error::io("<output>", e))?;
        Ok(())
    }

    /// Fixed-width table with `mean (std)` entries.
    pub fn to_table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:>5} {:>6} {:>10} {:>6} {:>16} {:>16} {:>8}",
            "lag", "noise", "method", "window", "sigma_B", "MAE", "mu"
        );
        for c in &self.cells {
            let _ = writeln!(
                s,
                "{:>5} {:>6} {:>10} {:>6} {:>16} {:>16} {:>8.2}",
                c.lag,
                c.noise,
                c.method.as_str(),
                c.window.to_string(),
                format!("{:.2} ({:.2})", c.mean_sigma, c.std_sigma),
                format!("{:.2} ({:.2})", c.mean_mae, c.std_mae),
                c.mean_mu
            );
            if !c.failures.is_empty() {
                let _ = writeln!(
                    s,
                    "      {} failed replicates: {}",
                    c.failures.len(),
                    c.failures[0]
                );
            }
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> BatchSpec {
        BatchSpec {
            lags: vec![10],
            noises: vec![1.0],
            methods: vec![NormMethod::Nonlinear],
            windows: vec![Window::Samples(20)],
            replicates: 1,
            length: 120,
            base: PipelineConfig {
                boot_reps: 8,
                shuffle_reps: 5,
                seed: 4,
                ..PipelineConfig::default()
            },
        }
    }

    #[test]
    fn single_cell_matches_estimate() {
        let s = spec();
        let report = run_batch(&s).unwrap();
        assert_eq!(report.cells.len(), 1);
        let (x, y) = generate_pair(&SimSpec {
            u0: 10,
            noise_sigma: 1.0,
            length: 120,
            seed: 4,
        })
        .unwrap();
        let sample = lagte_core::estimate_delay(&x, &y, &s.base).unwrap();
        let cell = &report.cells[0];
        assert_eq!(cell.mean_mu, sample.mu_hat);
        assert_eq!(cell.mean_sigma, sample.sigma2_hat.sqrt());
        assert_eq!(cell.mean_mae, sample.mae(10));
        assert_eq!(cell.std_sigma, 0.0);
    }

    #[test]
    fn cell_count_and_failures() {
        let mut s = spec();
        s.lags = vec![3, 200];
        s.methods = vec![NormMethod::None, NormMethod::Nonlinear];
        s.windows = vec![Window::Samples(10), Window::Full];
        let report = run_batch(&s).unwrap();
        assert_eq!(report.cells.len(), s.cell_count());
        assert_eq!(report.cells.len(), 8);
        let bad = report.cells.iter().filter(|c| c.lag == 200);
        for c in bad {
            assert_eq!(c.completed, 0);
            assert_eq!(c.failures.len(), 1);
        }
    }

    #[test]
    fn empty_grid_rejected() {
        let mut s = spec();
        s.noises.clear();
        assert!(run_batch(&s).is_err());
    }
}
