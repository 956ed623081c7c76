//! Seeded generators for the property suites: random MDPs with Dirichlet(1)
//! transition rows, small finite reward supports, and random quantile tables.

use rand::Rng;

use super::{FiniteMdp, QuantileTable};
use crate::quantile::QuantileDistribution;

/// Dirichlet(1, ..., 1) row via exponential spacings.
fn simplex_row<R: Rng + ?Sized>(rng: &mut R, k: usize) -> Vec<f64> {
    loop {
        let draws: Vec<f64> = (0..k)
            .map(|_| {
                let u: f64 = rng.random_range(0.0..1.0);
                -(1.0 - u).ln()
            })
            .collect();
        let sum: f64 = draws.iter().sum();
        if sum > 0.0 {
            return draws.iter().map(|d| d / sum).collect();
        }
    }
}

/// Random MDP: Dirichlet(1) transition rows and reward supports of size <= 3
/// with values in [-1, 1].
pub fn random_mdp<R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    gamma: f64,
) -> FiniteMdp {
    let mut transition = Vec::with_capacity(n_states * n_actions * n_states);
    let mut rewards = Vec::with_capacity(n_states * n_actions);
    for _ in 0..n_states * n_actions {
        transition.extend(simplex_row(rng, n_states));
        let m = rng.random_range(1..=3usize);
        let probs = simplex_row(rng, m);
        let support: Vec<(f64, f64)> = probs
            .into_iter()
            .map(|p| (rng.random_range(-1.0..1.0), p))
            .collect();
        rewards.push(support);
    }
    FiniteMdp::new(n_states, n_actions, transition, rewards, gamma)
        .expect("generated rows are normalized")
}

/// One discount factor from the property-suite grid.
pub fn random_gamma<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    [0.5, 0.9, 0.99][rng.random_range(0..3)]
}

pub fn random_fixed_policy<R: Rng + ?Sized>(rng: &mut R, mdp: &FiniteMdp) -> Vec<usize> {
    (0..mdp.n_states())
        .map(|_| rng.random_range(0..mdp.n_actions()))
        .collect()
}

/// Table of sorted uniform draws from [-5, 5].
pub fn random_table<R: Rng + ?Sized>(
    rng: &mut R,
    n_states: usize,
    n_actions: usize,
    n_quantiles: usize,
) -> QuantileTable {
    let mut table = QuantileTable::zero(n_states, n_actions, n_quantiles);
    for x in 0..n_states {
        for a in 0..n_actions {
            let values: Vec<f64> = (0..n_quantiles)
                .map(|_| rng.random_range(-5.0..5.0))
                .collect();
            table.set(x, a, QuantileDistribution::from_unsorted(values).unwrap());
        }
    }
    table
}
