//! Seeded power-law samplers for self-checks and demos.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Continuous Pareto draws with density ∝ x^-gamma on [x_min, ∞).
pub fn pareto<R: Rng>(rng: &mut R, n: usize, gamma: f64, x_min: f64) -> Vec<f64> {
    assert!(gamma > 1.0 && x_min > 0.0, "pareto needs gamma > 1, x_min > 0");
    let e = -1.0 / (gamma - 1.0);
    (0..n).map(|_| x_min * (1.0 - rng.random::<f64>()).powf(e)).collect()
}

/// Discrete power-law draws, P(k) ∝ k^-gamma for integers k ≥ x_min.
///
/// Rejection from the floored continuous Pareto; the acceptance ratio
/// k^-γ / (k^(1-γ) - (k+1)^(1-γ)) is largest at k = x_min.
pub fn discrete_power_law<R: Rng>(rng: &mut R, n: usize, gamma: f64, x_min: u64) -> Vec<f64> {
    assert!(gamma > 1.0 && x_min >= 1, "discrete power law needs gamma > 1, x_min ≥ 1");
    let a = gamma - 1.0;
    let ratio = |k: f64| k.powf(-gamma) / (k.powf(-a) - (k + 1.0).powf(-a));
    let xm = x_min as f64;
    let top = ratio(xm);
    let mut out = Vec::with_capacity(n);
    while out.len() < n {
        let k = (xm * (1.0 - rng.random::<f64>()).powf(-1.0 / a)).floor();
        if !k.is_finite() {
            continue;
        }
        if rng.random::<f64>() * top <= ratio(k) {
            out.push(k);
        }
    }
    out
}

/// Mean of the largest of `n` Pareto draws, over `reps` repetitions.
pub fn mean_max<R: Rng>(rng: &mut R, n: usize, reps: usize, gamma: f64, x_min: f64) -> f64 {
    let total: f64 = (0..reps)
        .map(|_| pareto(rng, n, gamma, x_min).into_iter().fold(f64::MIN, f64::max))
        .sum();
    total / reps as f64
}
