//! Seeded point sampling for experiments.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `n` points drawn uniformly at random from the domain, sorted ascending.
/// Deterministic per seed.
pub fn sample_high_fidelity(domain: (f64, f64), n: usize, rng_seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut points: Vec<f64> = (0..n)
        .map(|_| rng.gen_range(domain.0..domain.1))
        .collect();
    points.sort_by(|a, b| a.partial_cmp(b).unwrap());
    points
}

/// Equispaced grid over the domain, endpoints included.
pub fn uniform_grid(domain: (f64, f64), n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![domain.0];
    }
    (0..n)
        .map(|i| domain.0 + (domain.1 - domain.0) * i as f64 / (n - 1) as f64)
        .collect()
}
