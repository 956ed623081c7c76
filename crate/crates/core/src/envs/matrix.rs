//! One-step cooperative payoff game.
//!
//! All agents pick an action simultaneously, the team receives the payoff for
//! the joint action, and the episode ends. The shipped default is a 2-agent,
//! 3-action symmetric matrix built so that each agent's marginal mean under a
//! uniform co-player is (-56, -30, -26): greedy play on marginals settles on
//! the suboptimal joint `(a3, a3)` worth 5, while the cooperative optimum
//! `(a1, a1)` is worth 8 behind a cliff of -88 payoffs.

use serde::{Deserialize, Serialize};

use super::{EnvError, Environment, ObservationKey, StepInfo, StepResult};

/// Team payoff tensor indexed by the joint action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSpec", into = "RawSpec")]
pub struct MatrixGameSpec {
    n_agents: usize,
    n_actions: usize,
    /// Flat row-major tensor: index = Σ aᵢ · n_actions^(n_agents-1-i).
    payoff: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct RawSpec {
    n_agents: usize,
    n_actions: usize,
    payoff: Vec<f64>,
}

impl TryFrom<RawSpec> for MatrixGameSpec {
    type Error = EnvError;
    fn try_from(raw: RawSpec) -> Result<Self, Self::Error> {
        MatrixGameSpec::new(raw.n_agents, raw.n_actions, raw.payoff)
    }
}

impl From<MatrixGameSpec> for RawSpec {
    fn from(s: MatrixGameSpec) -> Self {
        RawSpec {
            n_agents: s.n_agents,
            n_actions: s.n_actions,
            payoff: s.payoff,
        }
    }
}

impl MatrixGameSpec {
    pub fn new(n_agents: usize, n_actions: usize, payoff: Vec<f64>) -> Result<Self, EnvError> {
        if n_agents == 0 || n_actions == 0 {
            return Err(EnvError::BadConfig(
                "matrix game needs at least one agent and one action".into(),
            ));
        }
        let expected = n_actions.checked_pow(n_agents as u32).ok_or_else(|| {
            EnvError::BadConfig("payoff tensor size overflows".into())
        })?;
        if payoff.len() != expected {
            return Err(EnvError::BadPayoffSize {
                got: payoff.len(),
                expected,
            });
        }
        if payoff.iter().any(|v| !v.is_finite()) {
            return Err(EnvError::NonFinitePayoff);
        }
        Ok(Self {
            n_agents,
            n_actions,
            payoff,
        })
    }

    /// The shipped 2-agent, 3-action payoff matrix
    /// `[[8, -88, -88], [-88, -7, 5], [-88, 5, 5]]`.
    pub fn default_spec() -> Self {
        #[rustfmt::skip]
        let payoff = vec![
              8.0, -88.0, -88.0,
            -88.0,  -7.0,   5.0,
            -88.0,   5.0,   5.0,
        ];
        Self::new(2, 3, payoff).unwrap()
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_actions(&self) -> usize {
        self.n_actions
    }

    /// Flat row-major payoff tensor.
    pub fn payoff_flat(&self) -> &[f64] {
        &self.payoff
    }

    pub fn payoff(&self, joint: &[usize]) -> Result<f64, EnvError> {
        if joint.len() != self.n_agents {
            return Err(EnvError::ActionArity {
                got: joint.len(),
                expected: self.n_agents,
            });
        }
        let mut idx = 0;
        for &a in joint {
            if a >= self.n_actions {
                return Err(EnvError::BadAction(a, self.n_actions));
            }
            idx = idx * self.n_actions + a;
        }
        Ok(self.payoff[idx])
    }

    /// Per-agent marginal mean payoff of each own action under uniform
    /// co-players: brute-force average over all joint actions.
    pub fn marginal_means(&self, agent: usize) -> Vec<f64> {
        assert!(agent < self.n_agents);
        let mut sums = vec![0.0; self.n_actions];
        let mut counts = vec![0u64; self.n_actions];
        let total = self.payoff.len();
        for idx in 0..total {
            // Decode the agent's action from the flat index.
            let mut rest = idx;
            let mut own = 0;
            for pos in 0..self.n_agents {
                let digit =
                    rest / self.n_actions.pow((self.n_agents - 1 - pos) as u32);
                rest %= self.n_actions.pow((self.n_agents - 1 - pos) as u32);
                if pos == agent {
                    own = digit;
                }
            }
            sums[own] += self.payoff[idx];
            counts[own] += 1;
        }
        sums.iter()
            .zip(&counts)
            .map(|(s, &c)| s / c as f64)
            .collect()
    }
}

/// One-step episode wrapper around a payoff spec. Every agent observes the
/// same constant key (the game is stateless).
#[derive(Debug, Clone)]
pub struct MatrixGame {
    spec: MatrixGameSpec,
    done: bool,
}

impl MatrixGame {
    pub fn new(spec: MatrixGameSpec) -> Self {
        Self { spec, done: true }
    }

    pub fn spec(&self) -> &MatrixGameSpec {
        &self.spec
    }

    fn obs(&self) -> Vec<ObservationKey> {
        vec![ObservationKey::from_bytes(vec![0]); self.spec.n_agents]
    }
}

impl Environment for MatrixGame {
    fn n_agents(&self) -> usize {
        self.spec.n_agents
    }

    fn n_actions(&self) -> usize {
        self.spec.n_actions
    }

    fn reset(&mut self, _episode_seed: u64) -> Result<Vec<ObservationKey>, EnvError> {
        self.done = false;
        Ok(self.obs())
    }

    fn step(&mut self, actions: &[usize]) -> Result<StepResult, EnvError> {
        if self.done {
            return Err(EnvError::EpisodeDone);
        }
        let reward = self.spec.payoff(actions)?;
        self.done = true;
        Ok(StepResult {
            observations: self.obs(),
            team_reward: reward,
            done: true,
            info: StepInfo::default(),
        })
    }
}
