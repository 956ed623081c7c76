//! Exact distributional dynamic programming on finite MDPs.
//!
//! This module iterates the composed operator `T∘Π_{α,β}` — restrict every
//! entry of a quantile table to the risk interval, apply the distributional
//! Bellman backup, and compress the resulting finite support back to `N`
//! quantiles — entirely in closed form. On top of it sit numerical checks for
//! the operator-theoretic claims the rest of the crate relies on: projection
//! non-expansiveness, fixed-policy γ-contraction of `T∘Π`, and the drift bound
//! for a time-varying risk schedule.
//!
//! Contraction holds for a fixed policy; greedy-mode iteration is supported
//! for demonstrations but the checks never assert anything about it.

pub mod random;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::quantile::{
    quantile_midpoint, wasserstein_inf, QuantileDistribution, QuantileError, RiskInterval,
};

#[derive(Debug, Error)]
pub enum DpError {
    #[error("transition row ({state},{action}) sums to {sum}, expected 1")]
    BadTransitionRow { state: usize, action: usize, sum: f64 },
    #[error("transition probability at ({state},{action}) is negative or non-finite")]
    BadTransitionEntry { state: usize, action: usize },
    #[error("reward support at ({state},{action}) is invalid: {reason}")]
    BadRewardSupport {
        state: usize,
        action: usize,
        reason: String,
    },
    #[error("discount factor {0} must lie in [0, 1)")]
    BadGamma(f64),
    #[error("table shapes differ: {0:?} vs {1:?}")]
    ShapeMismatch((usize, usize, usize), (usize, usize, usize)),
    #[error("fixed policy has {got} entries for {expected} states")]
    BadPolicy { got: usize, expected: usize },
    #[error("quantile projection needs a non-empty support")]
    EmptySupport,
    #[error("support probabilities must be finite and nonnegative")]
    BadSupport,
    #[error("no convergence after {iterations} iterations (last change {last_distance})")]
    NoConvergence { iterations: usize, last_distance: f64 },
    #[error(transparent)]
    Quantile(#[from] QuantileError),
}

const PROB_SUM_TOL: f64 = 1e-12;

/// A finite MDP with tabular transitions and finite-support reward
/// distributions per (state, action).
#[derive(Debug, Clone)]
pub struct FiniteMdp {
    n_states: usize,
    n_actions: usize,
    /// Row-major `P[x][a][x']`.
    transition: Vec<f64>,
    /// Per (x, a): list of `(reward value, probability)`.
    rewards: Vec<Vec<(f64, f64)>>,
    gamma: f64,
}

impl FiniteMdp {
    pub fn new(
        n_states: usize,
        n_actions: usize,
        transition: Vec<f64>,
        rewards: Vec<Vec<(f64, f64)>>,
        gamma: f64,
    ) -> Result<Self, DpError> {
        assert!(n_states > 0 && n_actions > 0);
        assert_eq!(transition.len(), n_states * n_actions * n_states);
        assert_eq!(rewards.len(), n_states * n_actions);
        if !(gamma.is_finite() && (0.0..1.0).contains(&gamma)) {
            return Err(DpError::BadGamma(gamma));
        }
        for x in 0..n_states {
            for a in 0..n_actions {
                let row = &transition[(x * n_actions + a) * n_states..][..n_states];
                let mut sum = 0.0;
                for &p in row {
                    if !p.is_finite() || p < 0.0 {
                        return Err(DpError::BadTransitionEntry { state: x, action: a });
                    }
                    sum += p;
                }
                if (sum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(DpError::BadTransitionRow { state: x, action: a, sum });
                }
                let support = &rewards[x * n_actions + a];
                if support.is_empty() {
                    return Err(DpError::BadRewardSupport {
                        state: x,
                        action: a,
                        reason: "empty".into(),
                    });
                }
                let mut psum = 0.0;
                for &(v, p) in support {
                    if !v.is_finite() || !p.is_finite() || p < 0.0 {
                        return Err(DpError::BadRewardSupport {
                            state: x,
                            action: a,
                            reason: "non-finite value or bad probability".into(),
                        });
                    }
                    psum += p;
                }
                if (psum - 1.0).abs() > PROB_SUM_TOL {
                    return Err(DpError::BadRewardSupport {
                        state: x,
                        action: a,
                        reason: format!("probabilities sum to {psum}"),
                    });
                }
            }
        }
        Ok(Self {
            n_states,
            n_actions,
            transition,
            rewards,
            gamma,
        })
    }

    pub fn n_states(&self) -> usize {
        self.n_states
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn transition_row(&self, x: usize, a: usize) -> &[f64] {
        &self.transition[(x * self.n_actions + a) * self.n_states..][..self.n_states]
    }

    pub fn reward_support(&self, x: usize, a: usize) -> &[(f64, f64)] {
        &self.rewards[x * self.n_actions + a]
    }
}

/// A complete return-distribution table: one `N`-quantile distribution per
/// (state, action).
#[derive(Debug, Clone, PartialEq)]
pub struct QuantileTable {
    n_states: usize,
    n_actions: usize,
    n_quantiles: usize,
    entries: Vec<QuantileDistribution>,
}

impl QuantileTable {
    pub fn zero(n_states: usize, n_actions: usize, n_quantiles: usize) -> Self {
        let entries = vec![
            QuantileDistribution::constant(0.0, n_quantiles).unwrap();
            n_states * n_actions
        ];
        Self {
            n_states,
            n_actions,
            n_quantiles,
            entries,
        }
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (self.n_states, self.n_actions, self.n_quantiles)
    }

    pub fn get(&self, x: usize, a: usize) -> &QuantileDistribution {
        &self.entries[x * self.n_actions + a]
    }

    pub fn set(&mut self, x: usize, a: usize, d: QuantileDistribution) {
        assert_eq!(d.n(), self.n_quantiles);
        self.entries[x * self.n_actions + a] = d;
    }

    /// Projects every entry onto the risk interval (the table-level `Π_{α,β}`).
    pub fn project(&self, r: RiskInterval) -> QuantileTable {
        QuantileTable {
            n_states: self.n_states,
            n_actions: self.n_actions,
            n_quantiles: self.n_quantiles,
            entries: self.entries.iter().map(|d| d.project(r)).collect(),
        }
    }
}

/// Policy used inside the Bellman backup: greedy on the projected table's
/// interval score, or an explicit action per state.
#[derive(Debug, Clone)]
pub enum BackupPolicy {
    Greedy,
    Fixed(Vec<usize>),
}

impl BackupPolicy {
    fn validate(&self, mdp: &FiniteMdp) -> Result<(), DpError> {
        if let BackupPolicy::Fixed(actions) = self {
            if actions.len() != mdp.n_states() {
                return Err(DpError::BadPolicy {
                    got: actions.len(),
                    expected: mdp.n_states(),
                });
            }
            assert!(actions.iter().all(|&a| a < mdp.n_actions()));
        }
        Ok(())
    }
}

/// The finite sequence of risk intervals `(α_t, β_t)` driving a scheduled
/// iteration.
#[derive(Debug, Clone)]
pub struct RiskSchedulePlan {
    pub intervals: Vec<RiskInterval>,
}

/// `W₁`-optimal compression of a finite-support distribution to `N` uniform
/// quantiles: `θ_i = F⁻¹(τ̂_i)` at the band midpoints, using the same
/// infimum convention as the quantile type (smallest support value whose
/// cumulative probability reaches `τ̂_i`).
pub fn quantile_projection(
    support: &[(f64, f64)],
    n: usize,
) -> Result<QuantileDistribution, DpError> {
    if support.is_empty() || n == 0 {
        return Err(DpError::EmptySupport);
    }
    let mut atoms: Vec<(f64, f64)> = Vec::with_capacity(support.len());
    let mut psum = 0.0;
    for &(v, p) in support {
        if !v.is_finite() || !p.is_finite() || p < 0.0 {
            return Err(DpError::BadSupport);
        }
        psum += p;
        if p > 0.0 {
            atoms.push((v, p));
        }
    }
    if atoms.is_empty() {
        return Err(DpError::EmptySupport);
    }
    debug_assert!((psum - 1.0).abs() < 1e-6, "support probabilities sum to {psum}");
    atoms.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());

    let mut values = Vec::with_capacity(n);
    let mut idx = 0;
    let mut cum = atoms[0].1;
    for i in 0..n {
        let tau = quantile_midpoint(i, n);
        while cum < tau && idx + 1 < atoms.len() {
            idx += 1;
            cum += atoms[idx].1;
        }
        values.push(atoms[idx].0);
    }
    Ok(QuantileDistribution::new(values).expect("midpoint scan yields sorted values"))
}

/// Greedy next action per state: argmax of `range_mean(Z'(x', ·), r)` over the
/// already-projected table, lowest index on ties.
fn greedy_actions(projected: &QuantileTable, r: RiskInterval) -> Vec<usize> {
    (0..projected.n_states)
        .map(|x| {
            let mut best = 0;
            let mut best_score = f64::NEG_INFINITY;
            for a in 0..projected.n_actions {
                let score = projected.get(x, a).range_mean(r);
                if score > best_score {
                    best_score = score;
                    best = a;
                }
            }
            best
        })
        .collect()
}

fn backup_from_projected(
    mdp: &FiniteMdp,
    projected: &QuantileTable,
    next_actions: &[usize],
    x: usize,
    a: usize,
) -> QuantileDistribution {
    let n = projected.n_quantiles;
    let atom_prob = 1.0 / n as f64;
    let row = mdp.transition_row(x, a);
    let rewards = mdp.reward_support(x, a);
    let mut support: Vec<(f64, f64)> = Vec::with_capacity(row.len() * rewards.len() * n);
    for (x_next, &p_next) in row.iter().enumerate() {
        if p_next <= 0.0 {
            continue;
        }
        let next_dist = projected.get(x_next, next_actions[x_next]);
        for &(rv, rp) in rewards {
            if rp <= 0.0 {
                continue;
            }
            let joint = p_next * rp * atom_prob;
            for &theta in next_dist.values() {
                support.push((rv + mdp.gamma * theta, joint));
            }
        }
    }
    quantile_projection(&support, n).expect("backup support is non-empty")
}

/// One application of `T∘Π_r` at a single (state, action): enumerates the
/// exact distribution of `reward + γ·θ'` over `(x', reward, atom)` with joint
/// probability `P(x'|x,a)·p(reward)·(1/N)`, using `Z' = Π_r Z` and the policy
/// for `a'`, then compresses back to `N` quantiles.
pub fn bellman_backup(
    mdp: &FiniteMdp,
    z: &QuantileTable,
    x: usize,
    a: usize,
    policy: &BackupPolicy,
    r: RiskInterval,
) -> Result<QuantileDistribution, DpError> {
    policy.validate(mdp)?;
    let projected = z.project(r);
    let next_actions = match policy {
        BackupPolicy::Greedy => greedy_actions(&projected, r),
        BackupPolicy::Fixed(actions) => actions.clone(),
    };
    Ok(backup_from_projected(mdp, &projected, &next_actions, x, a))
}

/// `T∘Π_r` applied at every (state, action) synchronously.
pub fn apply_operator(
    mdp: &FiniteMdp,
    z: &QuantileTable,
    policy: &BackupPolicy,
    r: RiskInterval,
) -> Result<QuantileTable, DpError> {
    policy.validate(mdp)?;
    let projected = z.project(r);
    let next_actions = match policy {
        BackupPolicy::Greedy => greedy_actions(&projected, r),
        BackupPolicy::Fixed(actions) => actions.clone(),
    };
    let mut out = QuantileTable::zero(z.n_states, z.n_actions, z.n_quantiles);
    for x in 0..z.n_states {
        for a in 0..z.n_actions {
            out.set(x, a, backup_from_projected(mdp, &projected, &next_actions, x, a));
        }
    }
    Ok(out)
}

/// `d̄_∞`: max over (state, action) of the entrywise `W_∞`. The supremum
/// over quantile fractions is taken on the `N`-quantile tables themselves,
/// i.e. after compression, which is the distance every check here uses.
pub fn table_distance(z1: &QuantileTable, z2: &QuantileTable) -> Result<f64, DpError> {
    if z1.shape() != z2.shape() {
        return Err(DpError::ShapeMismatch(z1.shape(), z2.shape()));
    }
    let mut d = 0.0f64;
    for (a, b) in z1.entries.iter().zip(&z2.entries) {
        d = d.max(wasserstein_inf(a, b)?);
    }
    Ok(d)
}

/// Iterates `T∘Π_r` from the zero table until successive change in `d̄_∞`
/// drops below `tol`; returns the table and the number of applications.
pub fn fixed_point(
    mdp: &FiniteMdp,
    policy: &BackupPolicy,
    r: RiskInterval,
    tol: f64,
    max_iter: usize,
) -> Result<(QuantileTable, usize), DpError> {
    let n = default_n_quantiles();
    fixed_point_from(
        mdp,
        policy,
        r,
        QuantileTable::zero(mdp.n_states(), mdp.n_actions(), n),
        tol,
        max_iter,
    )
}

/// As [`fixed_point`] but starting from a caller-supplied table.
pub fn fixed_point_from(
    mdp: &FiniteMdp,
    policy: &BackupPolicy,
    r: RiskInterval,
    z0: QuantileTable,
    tol: f64,
    max_iter: usize,
) -> Result<(QuantileTable, usize), DpError> {
    assert!(tol > 0.0);
    let mut z = z0;
    let mut last = f64::INFINITY;
    for iter in 1..=max_iter {
        let next = apply_operator(mdp, &z, policy, r)?;
        last = table_distance(&next, &z)?;
        z = next;
        if last < tol {
            return Ok((z, iter));
        }
    }
    Err(DpError::NoConvergence {
        iterations: max_iter,
        last_distance: last,
    })
}

pub fn default_n_quantiles() -> usize {
    32
}

/// Slack allowed when asserting the γ-contraction numerically.
pub const CONTRACTION_SLACK_TOL: f64 = 1e-9;

/// Machine-readable outcome of one check over one seeded MDP, serialized one
/// line per check in the verification report.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckReport {
    pub check: String,
    pub mdp_seed: u64,
    pub trials: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_ratio: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub max_slack: Option<f64>,
    pub pass: bool,
}

/// Asserts `d̄_∞(Π_r Z1, Π_r Z2) <= d̄_∞(Z1, Z2)` on random table pairs. The
/// projection is a pure index selection, so the slack should be exactly
/// nonpositive; the report records the worst observed value.
pub fn check_nonexpansive(
    mdp: &FiniteMdp,
    n_quantiles: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckReport, DpError> {
    use rand::Rng;
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut max_slack = f64::NEG_INFINITY;
    for _ in 0..trials {
        let z1 = random::random_table(&mut rng, mdp.n_states(), mdp.n_actions(), n_quantiles);
        let z2 = random::random_table(&mut rng, mdp.n_states(), mdp.n_actions(), n_quantiles);
        let a: f64 = rng.random_range(0.0..1.0);
        let b: f64 = rng.random_range(a..=1.0);
        let r = RiskInterval::new(a, b).unwrap();
        let before = table_distance(&z1, &z2)?;
        let after = table_distance(&z1.project(r), &z2.project(r))?;
        max_slack = max_slack.max(after - before);
    }
    Ok(CheckReport {
        check: "nonexpansive".into(),
        mdp_seed: seed,
        trials,
        max_ratio: None,
        max_slack: Some(max_slack),
        pass: max_slack <= CONTRACTION_SLACK_TOL,
    })
}

/// Asserts `d̄_∞((T∘Π_r)Z1, (T∘Π_r)Z2) <= γ·d̄_∞(Z1, Z2) + tol` on random
/// table pairs under a fixed policy. Violations are reported, not thrown.
pub fn check_contraction(
    mdp: &FiniteMdp,
    policy: &BackupPolicy,
    r: RiskInterval,
    n_quantiles: usize,
    trials: usize,
    seed: u64,
) -> Result<CheckReport, DpError> {
    use rand::SeedableRng;
    assert!(
        matches!(policy, BackupPolicy::Fixed(_)),
        "the contraction check is defined for a fixed policy"
    );
    let mut rng = rand_chacha::ChaCha12Rng::seed_from_u64(seed);
    let mut max_ratio = 0.0f64;
    let mut pass = true;
    for _ in 0..trials {
        let z1 = random::random_table(&mut rng, mdp.n_states(), mdp.n_actions(), n_quantiles);
        let z2 = random::random_table(&mut rng, mdp.n_states(), mdp.n_actions(), n_quantiles);
        let before = table_distance(&z1, &z2)?;
        let after = table_distance(
            &apply_operator(mdp, &z1, policy, r)?,
            &apply_operator(mdp, &z2, policy, r)?,
        )?;
        if after > mdp.gamma() * before + CONTRACTION_SLACK_TOL {
            pass = false;
        }
        if before > 0.0 {
            max_ratio = max_ratio.max(after / before);
        }
    }
    Ok(CheckReport {
        check: "contraction".into(),
        mdp_seed: seed,
        trials,
        max_ratio: Some(max_ratio),
        max_slack: None,
        pass,
    })
}

/// Both sides of the drift bound at one step of a scheduled iteration.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftBoundStep {
    pub t: usize,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DriftBoundReport {
    pub steps: Vec<DriftBoundStep>,
    pub max_violation: f64,
    pub allowed_slack: f64,
    pub pass: bool,
}

impl DriftBoundReport {
    pub fn to_check(&self, mdp_seed: u64) -> CheckReport {
        CheckReport {
            check: "schedule_drift_bound".into(),
            mdp_seed,
            trials: self.steps.len(),
            max_ratio: None,
            max_slack: Some(self.max_violation),
            pass: self.pass,
        }
    }
}

/// Runs the scheduled iteration `Z_t ← (T∘Π_{α_t,β_t}) Z_{t-1}` from `z0` and
/// checks, at every `t`,
///
/// ```text
/// d̄_∞(Z_t, Z*_t) <= Σ_{i=1}^{t-1} γ^{t-i} d̄_∞(Z*_i, Z*_{i+1}) + γ^t d̄_∞(Z_0, Z*_1)
/// ```
///
/// where `Z*_i` is the fixed point of the i-th operator under the supplied
/// fixed policy. Each fixed point is solved to `fp_tol`, which leaves its own
/// residual: a solve that stops when the successive change drops below
/// `fp_tol` is within `fp_tol·γ/(1-γ)` of the true fixed point, and that
/// error enters the left side once and the right side through every distance
/// between fixed points, i.e. at most `(2 + 2/(1-γ))` times. The allowed
/// slack is `tol` plus that bound.
pub fn check_drift_bound(
    mdp: &FiniteMdp,
    plan: &RiskSchedulePlan,
    z0: &QuantileTable,
    policy: &BackupPolicy,
    tol: f64,
    fp_tol: f64,
    max_iter: usize,
) -> Result<DriftBoundReport, DpError> {
    assert!(!plan.intervals.is_empty(), "schedule plan must be non-empty");
    assert!(
        matches!(policy, BackupPolicy::Fixed(_)),
        "the drift bound is checked under a fixed policy"
    );
    let gamma = mdp.gamma();
    let fp_err = fp_tol * gamma / (1.0 - gamma);
    let allowed_slack = tol + fp_err * (2.0 + 2.0 / (1.0 - gamma));

    // Fixed points per distinct interval, solved once each.
    let mut cache: Vec<(RiskInterval, QuantileTable)> = Vec::new();
    let mut star = Vec::with_capacity(plan.intervals.len());
    for &r in &plan.intervals {
        let hit = cache.iter().position(|(cr, _)| *cr == r);
        let idx = match hit {
            Some(i) => i,
            None => {
                let (z, _) = fixed_point_from(
                    mdp,
                    policy,
                    r,
                    z0.clone(),
                    fp_tol,
                    max_iter,
                )?;
                cache.push((r, z));
                cache.len() - 1
            }
        };
        star.push(idx);
    }

    // Distances between neighboring fixed points.
    let mut neighbor = Vec::with_capacity(plan.intervals.len().saturating_sub(1));
    for i in 0..plan.intervals.len() - 1 {
        neighbor.push(table_distance(&cache[star[i]].1, &cache[star[i + 1]].1)?);
    }
    let d0 = table_distance(z0, &cache[star[0]].1)?;

    let mut z = z0.clone();
    let mut steps = Vec::with_capacity(plan.intervals.len());
    let mut max_violation = f64::NEG_INFINITY;
    for (t1, &r) in plan.intervals.iter().enumerate() {
        let t = t1 + 1;
        z = apply_operator(mdp, &z, policy, r)?;
        let lhs = table_distance(&z, &cache[star[t1]].1)?;
        let mut rhs = gamma.powi(t as i32) * d0;
        for (i, &nd) in neighbor.iter().take(t1).enumerate() {
            // i is 0-based for the pair (Z*_{i+1}, Z*_{i+2}).
            rhs += gamma.powi((t - (i + 1)) as i32) * nd;
        }
        max_violation = max_violation.max(lhs - rhs);
        steps.push(DriftBoundStep { t, lhs, rhs });
    }
    Ok(DriftBoundReport {
        steps,
        max_violation,
        allowed_slack,
        pass: max_violation <= allowed_slack,
    })
}
