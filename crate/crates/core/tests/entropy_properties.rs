use lagte_core::entropy::effective_transfer_entropy_with;
use lagte_core::preprocess::SymbolSeries;
use lagte_core::{derive_replicate_rng, effective_transfer_entropy, shannon_entropy, StreamTag};
use rand::Rng;

fn random_symbols(seed: u64, len: usize, n: u16) -> SymbolSeries {
    let mut rng = derive_replicate_rng(seed, 0, StreamTag::SimulationNoise);
    SymbolSeries::from_symbols(
        (0..len).map(|_| rng.random_range(1..=n)).collect(),
        n as usize,
    )
    .unwrap()
}

#[test]
fn exact_entropies() {
    assert_eq!(shannon_entropy(&[0.5, 0.5]).unwrap(), 1.0);
    assert_eq!(shannon_entropy(&[1.0]).unwrap(), 0.0);
    assert_eq!(shannon_entropy(&[1.0, 0.0, 0.0]).unwrap(), 0.0);
    assert_eq!(shannon_entropy(&[0.25; 4]).unwrap(), 2.0);
}

#[test]
fn effective_te_of_independent_series_is_near_zero() {
    for seed in 0..10 {
        let src = random_symbols(seed, 500, 3);
        let tgt = random_symbols(seed + 1000, 500, 3);
        let mut rng = derive_replicate_rng(seed, 0, StreamTag::Shuffle);
        let e = effective_transfer_entropy(&src, &tgt, 2, 50, &mut rng).unwrap();
        assert!(e.ete.abs() < 0.02, "seed {seed}: {}", e.ete);
        assert!(e.te > 0.0, "finite-sample bias should be positive");
    }
}

#[test]
fn identity_permutation_cancels() {
    let src = random_symbols(1, 200, 3);
    let tgt = random_symbols(2, 200, 3);
    let e = effective_transfer_entropy_with(&src, &tgt, 4, 7, |_| {}).unwrap();
    assert_eq!(e.ete, 0.0);
    assert_eq!(e.shuffle_mean, e.te);
}
