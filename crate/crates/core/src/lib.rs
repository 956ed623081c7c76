//! Tabular distributional reinforcement learning with risk-scheduled
//! exploration.
//!
//! The crate is organized around five pieces:
//!
//! - [`quantile`]: the quantile-distribution value type, risk intervals and
//!   levels, Wasserstein metrics, and the Huber quantile-regression loss.
//! - [`dp`]: exact distributional dynamic programming on finite MDPs plus
//!   numerical checks of projection non-expansiveness, γ-contraction of the
//!   projected Bellman operator, and the schedule drift bound.
//! - [`envs`]: a one-step cooperative payoff game and a predator-and-prey
//!   grid world behind a common [`envs::Environment`] trait.
//! - [`learner`]: tabular multi-agent quantile-regression TD learning with
//!   episode replay, target tables, and NDJSON checkpoints.
//! - [`explore`]: ε-greedy, truncated-variance, static-risk, and
//!   risk-scheduled action selection behind one interface.

pub mod dp;
pub mod envs;
pub mod explore;
pub mod learner;
pub mod quantile;

pub use dp::{FiniteMdp, QuantileTable};
pub use envs::{Environment, ObservationKey};
pub use learner::{LearnerConfig, QTable, ReplayBuffer, Trainer, Transition};
pub use quantile::{QuantileDistribution, RiskInterval, RiskLevel};
