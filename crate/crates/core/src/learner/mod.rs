//! Tabular multi-agent quantile-regression TD learning.
//!
//! Each agent owns (or shares) a [`QTable`] mapping observation keys to one
//! quantile distribution per action. Action selection is delegated to an
//! [`ActionSelector`] — any exploration policy plugs in unchanged — and the
//! TD machinery consumes whatever risk interval the policy is currently
//! using, so risk-scheduled exploration shapes both behavior and targets.
//!
//! Learning uses the pairwise Huber quantile-regression update: for targets
//! `y_j` and current atoms `θ_i` at midpoints `τ̂_i`, each `θ_i` descends the
//! mean over `j` of the Huber quantile gradient, and the atom vector is
//! re-sorted afterwards. With the default configuration the quantile
//! fractions are the fixed midpoints projected onto the active interval; a
//! sampled-fraction variant is available behind [`TauMode::Sampled`].

mod checkpoint;
mod replay;

pub use checkpoint::{read_checkpoint, write_checkpoint, CheckpointMeta};
pub use replay::ReplayBuffer;

use std::collections::HashMap;

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::envs::{Environment, ObservationKey, StepInfo};
use crate::quantile::{
    huber_quantile_grad, huber_quantile_loss, quantile_midpoint, QuantileDistribution,
    RiskInterval,
};

#[derive(Debug, Error)]
pub enum LearnerError {
    #[error("target vector has {got} entries, expected {expected}")]
    TargetLength { got: usize, expected: usize },
    #[error("invalid learner config: {0}")]
    BadConfig(String),
    #[error("environment error: {0}")]
    Env(#[from] crate::envs::EnvError),
}

/// How quantile fractions are chosen inside the loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TauMode {
    /// Fixed midpoints projected onto the active interval (deterministic).
    Midpoints,
    /// Fractions drawn uniformly from the active interval each update.
    Sampled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearnerConfig {
    pub gamma: f64,
    pub learning_rate: f64,
    pub n_quantiles: usize,
    pub huber_k: f64,
    /// Target tables are re-synced every this many learning steps.
    pub target_update_period: u64,
    pub batch_size: usize,
    /// Replay capacity in episodes.
    pub replay_capacity: usize,
    /// Initial quantile value for unseen keys.
    pub initial_value: f64,
    /// All agents read and write one shared table.
    pub shared_table: bool,
    /// Sample an episode first, then a transition inside it.
    pub episode_sampling: bool,
    pub tau_mode: TauMode,
}

impl Default for LearnerConfig {
    fn default() -> Self {
        Self {
            gamma: 0.99,
            learning_rate: 0.05,
            n_quantiles: 32,
            huber_k: 1.0,
            target_update_period: 200,
            batch_size: 32,
            replay_capacity: 5000,
            initial_value: 0.0,
            shared_table: false,
            episode_sampling: false,
            tau_mode: TauMode::Midpoints,
        }
    }
}

impl LearnerConfig {
    pub fn validate(&self) -> Result<(), LearnerError> {
        let bad = |msg: &str| Err(LearnerError::BadConfig(msg.into()));
        if !(self.gamma.is_finite() && (0.0..1.0).contains(&self.gamma)) {
            return bad("gamma must lie in [0, 1)");
        }
        if !(self.learning_rate.is_finite() && self.learning_rate >= 0.0) {
            return bad("learning_rate must be nonnegative");
        }
        if self.n_quantiles == 0 || !self.n_quantiles.is_multiple_of(2) {
            return bad("n_quantiles must be positive and even");
        }
        if !(self.huber_k.is_finite() && self.huber_k > 0.0) {
            return bad("huber_k must be positive");
        }
        if self.target_update_period == 0 {
            return bad("target_update_period must be >= 1");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be >= 1");
        }
        if self.replay_capacity == 0 {
            return bad("replay_capacity must be >= 1");
        }
        if !self.initial_value.is_finite() {
            return bad("initial_value must be finite");
        }
        Ok(())
    }
}

/// One multi-agent sample: per-agent observation keys and actions, the shared
/// team reward, and the per-agent next keys.
#[derive(Debug, Clone, PartialEq)]
pub struct Transition {
    pub obs: Vec<ObservationKey>,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub next_obs: Vec<ObservationKey>,
    pub done: bool,
}

#[derive(Debug, Clone)]
struct Row {
    /// Lazily materialized per action; `None` reads as the initial
    /// distribution.
    dists: Vec<Option<QuantileDistribution>>,
    visits: u64,
}

/// Observation-keyed table of per-action quantile distributions. Reading a
/// missing key behaves as the initial distribution; entries materialize only
/// when written.
#[derive(Debug, Clone)]
pub struct QTable {
    n_actions: usize,
    n_quantiles: usize,
    initial: QuantileDistribution,
    rows: HashMap<ObservationKey, Row>,
}

impl QTable {
    pub fn new(n_actions: usize, n_quantiles: usize, initial_value: f64) -> Self {
        assert!(n_actions > 0 && n_quantiles > 0);
        Self {
            n_actions,
            n_quantiles,
            initial: QuantileDistribution::constant(initial_value, n_quantiles).unwrap(),
            rows: HashMap::new(),
        }
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    pub fn n_quantiles(&self) -> usize {
        self.n_quantiles
    }

    pub fn len_keys(&self) -> usize {
        self.rows.len()
    }

    pub fn distribution(&self, obs: &ObservationKey, action: usize) -> &QuantileDistribution {
        assert!(action < self.n_actions);
        self.rows
            .get(obs)
            .and_then(|row| row.dists[action].as_ref())
            .unwrap_or(&self.initial)
    }

    /// Materializes and returns the entry for `(obs, action)`.
    pub fn distribution_mut(
        &mut self,
        obs: &ObservationKey,
        action: usize,
    ) -> &mut QuantileDistribution {
        assert!(action < self.n_actions);
        let n_actions = self.n_actions;
        let row = self.rows.entry(obs.clone()).or_insert_with(|| Row {
            dists: vec![None; n_actions],
            visits: 0,
        });
        row.dists[action].get_or_insert_with(|| self.initial.clone())
    }

    pub fn record_visit(&mut self, obs: &ObservationKey) {
        let n_actions = self.n_actions;
        self.rows
            .entry(obs.clone())
            .or_insert_with(|| Row {
                dists: vec![None; n_actions],
                visits: 0,
            })
            .visits += 1;
    }

    pub fn visits(&self, obs: &ObservationKey) -> u64 {
        self.rows.get(obs).map_or(0, |row| row.visits)
    }

    /// Materialized entries in deterministic (key, action) order.
    pub fn iter_sorted(
        &self,
    ) -> impl Iterator<Item = (&ObservationKey, usize, u64, &QuantileDistribution)> {
        let mut keys: Vec<&ObservationKey> = self.rows.keys().collect();
        keys.sort();
        keys.into_iter().flat_map(move |key| {
            let row = &self.rows[key];
            row.dists
                .iter()
                .enumerate()
                .filter_map(move |(a, d)| d.as_ref().map(|d| (key, a, row.visits, d)))
        })
    }
}

/// Greedy action under the interval score: argmax over actions of
/// `range_mean(Z(obs, a), r)`, ties broken uniformly at random.
pub fn greedy_action<R: Rng + ?Sized>(
    table: &QTable,
    obs: &ObservationKey,
    r: RiskInterval,
    rng: &mut R,
) -> usize {
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::with_capacity(table.n_actions);
    for a in 0..table.n_actions {
        let score = table.distribution(obs, a).range_mean(r);
        if score > best {
            best = score;
            ties.clear();
            ties.push(a);
        } else if score == best {
            ties.push(a);
        }
    }
    ties[rng.random_range(0..ties.len())]
}

/// TD target vector: `reward + γ · Π_r Z̄(x', a')` componentwise, with
/// `a'` greedy on the target table at interval `r`; a terminal transition
/// yields the reward at every component.
pub fn td_target<R: Rng + ?Sized>(
    transition: &Transition,
    agent: usize,
    target_table: &QTable,
    r: RiskInterval,
    cfg: &LearnerConfig,
    rng: &mut R,
) -> Vec<f64> {
    let n = cfg.n_quantiles;
    if transition.done {
        return vec![transition.reward; n];
    }
    let next_obs = &transition.next_obs[agent];
    let a_next = greedy_action(target_table, next_obs, r, rng);
    let dist = target_table.distribution(next_obs, a_next);
    match cfg.tau_mode {
        TauMode::Midpoints => dist
            .project(r)
            .values()
            .iter()
            .map(|&v| transition.reward + cfg.gamma * v)
            .collect(),
        TauMode::Sampled => (0..n)
            .map(|_| {
                let tau = sample_tau(r, rng);
                transition.reward
                    + cfg.gamma * dist.inverse_cdf(tau).expect("tau sampled in range")
            })
            .collect(),
    }
}

fn sample_tau<R: Rng + ?Sized>(r: RiskInterval, rng: &mut R) -> f64 {
    if r.width() == 0.0 {
        r.alpha()
    } else {
        rng.random_range(r.alpha()..=r.beta())
    }
}

/// One pairwise quantile-regression step at fixed midpoints. Returns the
/// pre-update loss `(1/N²) Σ_i Σ_j ρ^k_{τ̂_i}(y_j - θ_i)`; each atom moves by
/// `-lr · mean_j grad` and the vector is re-sorted.
pub fn qr_update(
    table: &mut QTable,
    obs: &ObservationKey,
    action: usize,
    targets: &[f64],
    cfg: &LearnerConfig,
) -> Result<f64, LearnerError> {
    let n = cfg.n_quantiles;
    if targets.len() != n {
        return Err(LearnerError::TargetLength {
            got: targets.len(),
            expected: n,
        });
    }
    let dist = table.distribution_mut(obs, action);
    let nf = n as f64;
    let mut loss = 0.0;
    let mut step = vec![0.0; n];
    for (i, &theta) in dist.values().iter().enumerate() {
        let tau = quantile_midpoint(i, n);
        let mut grad = 0.0;
        for &y in targets {
            let delta = y - theta;
            loss += huber_quantile_loss(delta, tau, cfg.huber_k);
            grad += huber_quantile_grad(delta, tau, cfg.huber_k);
        }
        step[i] = -cfg.learning_rate * grad / nf;
    }
    dist.apply_gradient_step(&step);
    Ok(loss / (nf * nf))
}

/// Sampled-fraction variant: each of the `N` gradient contributions draws its
/// own `τ_i ~ U[α, β]` and lands on the atom `F⁻¹` selects at that fraction.
pub fn qr_update_sampled<R: Rng + ?Sized>(
    table: &mut QTable,
    obs: &ObservationKey,
    action: usize,
    targets: &[f64],
    cfg: &LearnerConfig,
    r: RiskInterval,
    rng: &mut R,
) -> Result<f64, LearnerError> {
    let n = cfg.n_quantiles;
    if targets.len() != n {
        return Err(LearnerError::TargetLength {
            got: targets.len(),
            expected: n,
        });
    }
    let taus: Vec<f64> = (0..n).map(|_| sample_tau(r, rng)).collect();
    let dist = table.distribution_mut(obs, action);
    let nf = n as f64;
    let mut loss = 0.0;
    let mut step = vec![0.0; n];
    for &tau in &taus {
        let idx = atom_for(tau, n);
        let theta = dist.values()[idx];
        let mut grad = 0.0;
        for &y in targets {
            let delta = y - theta;
            loss += huber_quantile_loss(delta, tau, cfg.huber_k);
            grad += huber_quantile_grad(delta, tau, cfg.huber_k);
        }
        step[idx] += -cfg.learning_rate * grad / nf;
    }
    dist.apply_gradient_step(&step);
    Ok(loss / (nf * nf))
}

fn atom_for(tau: f64, n: usize) -> usize {
    if tau <= 0.0 {
        return 0;
    }
    ((tau * n as f64).ceil() as usize).clamp(1, n) - 1
}

/// Deep copy used as the frozen bootstrap target.
pub fn sync_target(table: &QTable) -> QTable {
    table.clone()
}

/// Exploration policies plug in through this surface: an action given the
/// agent's table and observation, and the risk interval that should shape
/// TD targets at time `t`.
pub trait ActionSelector {
    fn select(
        &self,
        table: &QTable,
        obs: &ObservationKey,
        t: u64,
        rng: &mut dyn rand::RngCore,
    ) -> usize;

    /// Interval used for target construction (and logged per episode).
    fn risk_interval(&self, t: u64) -> RiskInterval {
        let _ = t;
        RiskInterval::NEUTRAL
    }
}

/// Per-step training statistics handed back to the harness.
#[derive(Debug, Clone, Default)]
pub struct StepStats {
    pub actions: Vec<usize>,
    pub reward: f64,
    pub done: bool,
    pub mean_loss: f64,
    pub updates: usize,
    pub buffer_transitions: usize,
    pub info: StepInfo,
}

/// Owns the tables, targets, and replay for one training run and advances one
/// environment step at a time. With `shared_table` all agents read and write
/// a single table; otherwise each agent learns its own.
pub struct Trainer {
    cfg: LearnerConfig,
    n_agents: usize,
    tables: Vec<QTable>,
    targets: Vec<QTable>,
    buffer: ReplayBuffer,
    update_steps: u64,
    current_obs: Vec<ObservationKey>,
}

impl Trainer {
    pub fn new(cfg: LearnerConfig, n_agents: usize, n_actions: usize) -> Result<Self, LearnerError> {
        cfg.validate()?;
        assert!(n_agents > 0);
        let n_tables = if cfg.shared_table { 1 } else { n_agents };
        let tables: Vec<QTable> = (0..n_tables)
            .map(|_| QTable::new(n_actions, cfg.n_quantiles, cfg.initial_value))
            .collect();
        let targets = tables.clone();
        Ok(Self {
            buffer: ReplayBuffer::new(cfg.replay_capacity),
            cfg,
            n_agents,
            tables,
            targets,
            update_steps: 0,
            current_obs: Vec::new(),
        })
    }

    pub fn config(&self) -> &LearnerConfig {
        &self.cfg
    }

    pub fn tables(&self) -> &[QTable] {
        &self.tables
    }

    pub fn buffer(&self) -> &ReplayBuffer {
        &self.buffer
    }

    fn table_index(&self, agent: usize) -> usize {
        if self.cfg.shared_table {
            0
        } else {
            agent
        }
    }

    pub fn table_for(&self, agent: usize) -> &QTable {
        &self.tables[self.table_index(agent)]
    }

    /// Call with the observations from `env.reset` before stepping.
    pub fn begin_episode(&mut self, obs: Vec<ObservationKey>) {
        assert_eq!(obs.len(), self.n_agents);
        self.buffer.start_episode();
        self.current_obs = obs;
    }

    /// One environment step: select actions (uniform during warmup), store
    /// the transition, then learn on `batch_size` sampled transitions per
    /// agent and refresh targets on schedule.
    pub fn train_step(
        &mut self,
        env: &mut dyn Environment,
        selector: &dyn ActionSelector,
        t: u64,
        warmup: bool,
        policy_rng: &mut dyn rand::RngCore,
        learner_rng: &mut dyn rand::RngCore,
    ) -> Result<StepStats, LearnerError> {
        assert_eq!(self.current_obs.len(), self.n_agents, "begin_episode not called");
        let n_actions = env.n_actions();
        let actions: Vec<usize> = (0..self.n_agents)
            .map(|agent| {
                if warmup {
                    (policy_rng.next_u64() % n_actions as u64) as usize
                } else {
                    let table = &self.tables[if self.cfg.shared_table { 0 } else { agent }];
                    selector.select(table, &self.current_obs[agent], t, policy_rng)
                }
            })
            .collect();

        let res = env.step(&actions)?;
        let transition = Transition {
            obs: std::mem::take(&mut self.current_obs),
            actions: actions.clone(),
            reward: res.team_reward,
            next_obs: res.observations.clone(),
            done: res.done,
        };
        for agent in 0..self.n_agents {
            let ti = self.table_index(agent);
            self.tables[ti].record_visit(&transition.obs[agent]);
        }
        self.buffer.push(transition);

        let mut loss_sum = 0.0;
        let mut updates = 0usize;
        if !warmup && self.cfg.learning_rate > 0.0 {
            let r = selector.risk_interval(t);
            for _ in 0..self.cfg.batch_size {
                let idx = if self.cfg.episode_sampling {
                    self.buffer.sample_by_episode(learner_rng)
                } else {
                    self.buffer.sample_uniform(learner_rng)
                }
                .expect("buffer holds at least the stored transition");
                for agent in 0..self.n_agents {
                    let ti = self.table_index(agent);
                    // Split borrows: the sampled transition lives in the
                    // buffer, updates go to the tables.
                    let Self {
                        buffer,
                        tables,
                        targets,
                        cfg,
                        ..
                    } = self;
                    let tr = buffer.get(idx);
                    let target_vec = td_target(tr, agent, &targets[ti], r, cfg, learner_rng);
                    let loss = match cfg.tau_mode {
                        TauMode::Midpoints => qr_update(
                            &mut tables[ti],
                            &tr.obs[agent],
                            tr.actions[agent],
                            &target_vec,
                            cfg,
                        )?,
                        TauMode::Sampled => qr_update_sampled(
                            &mut tables[ti],
                            &tr.obs[agent],
                            tr.actions[agent],
                            &target_vec,
                            cfg,
                            r,
                            learner_rng,
                        )?,
                    };
                    loss_sum += loss;
                    updates += 1;
                }
            }
            self.update_steps += 1;
            if self.update_steps.is_multiple_of(self.cfg.target_update_period) {
                self.targets = self.tables.iter().map(sync_target).collect();
            }
        }

        self.current_obs = res.observations;
        Ok(StepStats {
            actions,
            reward: res.team_reward,
            done: res.done,
            mean_loss: if updates > 0 {
                loss_sum / updates as f64
            } else {
                0.0
            },
            updates,
            buffer_transitions: self.buffer.len_transitions(),
            info: res.info,
        })
    }
}
