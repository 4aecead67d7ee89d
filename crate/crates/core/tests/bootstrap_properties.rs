use lagte_core::bootstrap::sample_state_path;
use lagte_core::{derive_replicate_rng, fit_markov, sample_bootstrap_series, StreamTag};
use rand::Rng;

fn random_residuals(seed: u64) -> Vec<f64> {
    let mut rng = derive_replicate_rng(seed, 0, StreamTag::SimulationNoise);
    let len = rng.random_range(2..300);
    // Coarse rounding produces ties, which exercises state merging.
    let scale = [1.0, 10.0, 1000.0][rng.random_range(0..3)];
    (0..len)
        .map(|_| (rng.random_range(-5.0..5.0f64) * scale).round() / scale)
        .collect()
}

#[test]
fn fitted_model_is_stochastic() {
    for seed in 0..200 {
        let residuals = random_residuals(seed);
        let states = 1 + seed as usize % 12;
        let m = fit_markov(&residuals, states).unwrap();
        let pi_sum: f64 = m.pi_hat().iter().sum();
        assert!(
            (pi_sum - 1.0).abs() <= 1e-12,
            "seed {seed}: pi sums to {pi_sum}"
        );
        for i in 0..m.n_states() {
            if m.is_unreachable(i) {
                continue;
            }
            let row: f64 = m.p_row(i).iter().sum();
            assert!(
                (row - 1.0).abs() <= 1e-12,
                "seed {seed}: row {i} sums to {row}"
            );
            assert!(m.p_row(i).iter().all(|&p| (0.0..=1.0).contains(&p)));
        }
    }
}

#[test]
fn bootstrap_values_come_from_observed_residuals() {
    for seed in 0..200 {
        let residuals = random_residuals(seed);
        let m = fit_markov(&residuals, 10).unwrap();
        let trend = vec![0.0; residuals.len()];
        let mut rng = derive_replicate_rng(seed, 1, StreamTag::SourceBootstrap);
        let boot = sample_bootstrap_series(&m, &trend, &mut rng).unwrap();
        assert_eq!(boot.values.len(), residuals.len());
        for v in boot.values {
            assert!(
                residuals.contains(&v),
                "seed {seed}: {v} was never observed"
            );
        }
    }
}

#[test]
fn bootstrap_adds_residuals_to_trend() {
    let residuals = random_residuals(7);
    let m = fit_markov(&residuals, 4).unwrap();
    let trend: Vec<f64> = (0..residuals.len()).map(|t| 100.0 + t as f64).collect();
    let mut rng = derive_replicate_rng(7, 0, StreamTag::TargetBootstrap);
    let boot = sample_bootstrap_series(&m, &trend, &mut rng).unwrap();
    for (v, tr) in boot.values.iter().zip(&trend) {
        assert!(residuals.iter().any(|r| tr + r == *v));
    }
}

#[test]
fn long_walk_matches_stationary_estimate() {
    // A sticky three-level residual series; its empirical state frequencies
    // are the stationary distribution of the fitted chain.
    let mut rng = derive_replicate_rng(99, 0, StreamTag::SimulationNoise);
    let mut level = 0usize;
    let residuals: Vec<f64> = (0..3000)
        .map(|_| {
            if rng.random_bool(0.2) {
                level = rng.random_range(0..3);
            }
            [-1.0, 0.0, 2.0][level] + rng.random_range(-0.1..0.1)
        })
        .collect();
    let m = fit_markov(&residuals, 3).unwrap();
    assert_eq!(m.n_states(), 3);
    let walk = sample_state_path(
        &m,
        100_000,
        &mut derive_replicate_rng(1, 0, StreamTag::SourceBootstrap),
    );
    let mut freq = [0.0; 3];
    for &s in &walk.states {
        freq[s] += 1.0 / walk.states.len() as f64;
    }
    for (i, (f, p)) in freq.iter().zip(m.pi_hat()).enumerate() {
        assert!((f - p).abs() < 0.02, "state {i}: {f} vs {p}");
    }
}
