//! Shared fixtures for the criterion benchmarks.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use roelab_core::dp::random::{random_fixed_policy, random_mdp, random_table};
use roelab_core::dp::{BackupPolicy, FiniteMdp, QuantileTable};
use roelab_core::quantile::QuantileDistribution;

pub fn rng(seed: u64) -> ChaCha12Rng {
    ChaCha12Rng::seed_from_u64(seed)
}

pub fn sorted_distribution(n: usize, seed: u64) -> QuantileDistribution {
    let mut r = rng(seed);
    let values: Vec<f64> = (0..n).map(|_| r.random_range(-10.0..10.0)).collect();
    QuantileDistribution::from_unsorted(values).unwrap()
}

pub struct DpFixture {
    pub mdp: FiniteMdp,
    pub policy: BackupPolicy,
    pub table: QuantileTable,
}

pub fn dp_fixture(n_states: usize, n_actions: usize, n_quantiles: usize) -> DpFixture {
    let mut r = rng(0xBE7C);
    let mdp = random_mdp(&mut r, n_states, n_actions, 0.9);
    let policy = BackupPolicy::Fixed(random_fixed_policy(&mut r, &mdp));
    let table = random_table(&mut r, n_states, n_actions, n_quantiles);
    DpFixture { mdp, policy, table }
}
