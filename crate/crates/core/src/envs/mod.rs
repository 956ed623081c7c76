//! Desk-scale cooperative environments: a one-step payoff matrix game and a
//! partially observed predator-and-prey grid world.
//!
//! Both implement [`Environment`], the surface the training harness drives:
//! seeded resets, joint-action steps with a shared team reward, and per-agent
//! observation keys that index the tabular learner.

mod matrix;
mod predator_prey;

pub use matrix::{MatrixGame, MatrixGameSpec};
pub use predator_prey::{Action, PredatorPrey, PredatorPreyConfig};

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("episode is done; call reset before stepping")]
    EpisodeDone,
    #[error("joint action has {got} entries for {expected} agents")]
    ActionArity { got: usize, expected: usize },
    #[error("action index {0} is out of range (< {1})")]
    BadAction(usize, usize),
    #[error("grid {width}x{height} too small for {entities} entities")]
    GridTooSmall {
        width: usize,
        height: usize,
        entities: usize,
    },
    #[error("payoff tensor has {got} entries, expected {expected}")]
    BadPayoffSize { got: usize, expected: usize },
    #[error("payoff entries must be finite")]
    NonFinitePayoff,
    #[error("invalid config: {0}")]
    BadConfig(String),
}

/// Canonical byte encoding of an agent's local observation window.
///
/// The encoding is injective on windows and stable across runs: one byte per
/// cell, row-major, using the fixed symbol map in [`Cell`]. Internally this is
/// a shared byte buffer, so cloning a key is a reference-count bump and equal
/// keys compare by content.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ObservationKey(Arc<[u8]>);

impl ObservationKey {
    pub fn from_bytes(bytes: Vec<u8>) -> Self {
        Self(bytes.into())
    }

    pub fn bytes(&self) -> &[u8] {
        &self.0
    }

    pub fn to_base64(&self) -> String {
        use base64::Engine;
        base64::engine::general_purpose::STANDARD.encode(&self.0)
    }

    pub fn from_base64(s: &str) -> Option<Self> {
        use base64::Engine;
        base64::engine::general_purpose::STANDARD
            .decode(s)
            .ok()
            .map(Self::from_bytes)
    }
}

impl fmt::Display for ObservationKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.to_base64())
    }
}

/// Cell symbols and their fixed byte values in observation encodings.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum Cell {
    Empty = 0,
    /// Out-of-bounds cells render as walls.
    Wall = 1,
    Predator = 2,
    Prey = 3,
    Hare = 4,
    /// The observing agent's own position (window center).
    Myself = 5,
}

impl Cell {
    pub fn from_byte(b: u8) -> Option<Cell> {
        match b {
            0 => Some(Cell::Empty),
            1 => Some(Cell::Wall),
            2 => Some(Cell::Predator),
            3 => Some(Cell::Prey),
            4 => Some(Cell::Hare),
            5 => Some(Cell::Myself),
            _ => None,
        }
    }
}

/// Encodes a row-major window of cells into its canonical key.
pub fn encode_observation(window: &[Cell]) -> ObservationKey {
    ObservationKey::from_bytes(window.iter().map(|&c| c as u8).collect())
}

/// Inverse of [`encode_observation`]; returns `None` on foreign bytes.
pub fn decode_observation(key: &ObservationKey) -> Option<Vec<Cell>> {
    key.bytes().iter().map(|&b| Cell::from_byte(b)).collect()
}

/// Per-step capture counters (and the number of RNG draws the environment
/// consumed, for trajectory dumps).
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StepInfo {
    pub pair_captures: u64,
    pub solo_captures: u64,
    pub hare_captures: u64,
    pub rng_draws_consumed: u64,
}

/// Outcome of one joint step.
#[derive(Debug, Clone)]
pub struct StepResult {
    pub observations: Vec<ObservationKey>,
    pub team_reward: f64,
    pub done: bool,
    pub info: StepInfo,
}

/// The surface the training loop drives. Implementations are single-threaded
/// state machines; run one instance per seed/worker.
pub trait Environment {
    fn n_agents(&self) -> usize;
    fn n_actions(&self) -> usize;
    /// Starts a new episode; deterministic in `(config, episode_seed)`.
    fn reset(&mut self, episode_seed: u64) -> Result<Vec<ObservationKey>, EnvError>;
    fn step(&mut self, actions: &[usize]) -> Result<StepResult, EnvError>;
}

/// Two rounds of splitmix64, used to derive independent seeds from a master
/// seed and a stream tag.
pub fn mix_seed(seed: u64, stream: u64) -> u64 {
    fn splitmix64(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e3779b97f4a7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^ (z >> 31)
    }
    splitmix64(seed ^ splitmix64(stream))
}
