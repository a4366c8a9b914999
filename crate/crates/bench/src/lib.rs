//! Seeded synthetic inputs shared by the benchmarks.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use threecp_core::{Curve, CurveSet, DiscreteSequence};

/// `m` uniform random sequences of length `n` over `k` symbols.
pub fn random_sequences(m: usize, n: usize, k: usize, seed: u64) -> Vec<DiscreteSequence> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..m)
        .map(|i| {
            DiscreteSequence::new(
                (i + 1).to_string(),
                (0..n).map(|_| rng.random_range(0..k) as u8).collect(),
            )
        })
        .collect()
}

/// `m` random-walk curves of length `n`.
pub fn random_walks(m: usize, n: usize, seed: u64) -> CurveSet {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let curves = (0..m)
        .map(|i| {
            let mut x = 0.0;
            let values = (0..n)
                .map(|_| {
                    x += rng.random_range(-1.0..1.0);
                    x
                })
                .collect();
            Curve::new(format!("c{i}"), values).expect("finite values")
        })
        .collect();
    CurveSet::new(curves, None).expect("distinct ids")
}
