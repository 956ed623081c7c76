//! Exploration policies behind one action-selection interface: annealed
//! ε-greedy, a decaying truncated-variance bonus, a fixed risk interval, and
//! risk scheduling — a scalar risk level annealed linearly, or the two-phase
//! variant that first widens the interval from the extreme upper tail to the
//! full distribution and then (optionally) contracts it toward the lower
//! tail.
//!
//! Scheduled intervals are computed from the closed-form interpolation at
//! `t`, not by accumulating decrements, so endpoints are exact and two calls
//! at the same `t` always agree. All selectors are pure functions of
//! `(table, obs, t, config, rng stream)`, and every agent queried at the
//! same `t` sees the identical interval — the shared-risk property that
//! makes joint optimism cooperative rather than independent.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::envs::ObservationKey;
use crate::learner::{greedy_action, ActionSelector, QTable};
use crate::quantile::{QuantileError, RiskInterval, RiskLevel};

/// Standard risk anchors: seeking `U[0.75, 1]`, neutral `U[0, 1]`, averse
/// `U[0, 0.25]`.
pub const SEEKING: RiskInterval = RiskInterval {
    alpha: 0.75,
    beta: 1.0,
};
pub const NEUTRAL: RiskInterval = RiskInterval {
    alpha: 0.0,
    beta: 1.0,
};
pub const AVERSE: RiskInterval = RiskInterval {
    alpha: 0.0,
    beta: 0.25,
};

/// Narrow-band anchors for architectures that score with a sliding band
/// instead of a tail: seeking `U[0.9, 1]`, neutral `U[0.4, 0.5]`, averse
/// `U[0, 0.1]`.
pub const NARROW_SEEKING: RiskInterval = RiskInterval {
    alpha: 0.9,
    beta: 1.0,
};
pub const NARROW_NEUTRAL: RiskInterval = RiskInterval {
    alpha: 0.4,
    beta: 0.5,
};
pub const NARROW_AVERSE: RiskInterval = RiskInterval {
    alpha: 0.0,
    beta: 0.1,
};

/// Linear ε anneal from `eps_start` to `eps_end` over `anneal_steps`, clamped
/// afterwards.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EpsilonSchedule {
    pub eps_start: f64,
    pub eps_end: f64,
    pub anneal_steps: u64,
}

impl Default for EpsilonSchedule {
    fn default() -> Self {
        Self {
            eps_start: 1.0,
            eps_end: 0.05,
            anneal_steps: 50_000,
        }
    }
}

impl EpsilonSchedule {
    pub fn validate(&self) -> Result<(), QuantileError> {
        if !(0.0 <= self.eps_end
            && self.eps_end <= self.eps_start
            && self.eps_start <= 1.0
            && self.anneal_steps >= 1)
        {
            return Err(QuantileError::BadInterval {
                alpha: self.eps_end,
                beta: self.eps_start,
            });
        }
        Ok(())
    }

    pub fn epsilon_at(&self, t: u64) -> f64 {
        if t >= self.anneal_steps {
            return self.eps_end;
        }
        let frac = t as f64 / self.anneal_steps as f64;
        self.eps_start + (self.eps_end - self.eps_start) * frac
    }
}

/// Linear risk-level anneal `ω_0 → ω_k` over `steps`; level `ω_t` maps onto
/// its interval via [`RiskLevel::to_interval`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RoeSchedule {
    pub omega_start: f64,
    pub omega_end: f64,
    pub steps: u64,
}

impl Default for RoeSchedule {
    fn default() -> Self {
        Self {
            omega_start: 1.0,
            omega_end: 0.0,
            steps: 50_000,
        }
    }
}

impl RoeSchedule {
    pub fn validate(&self) -> Result<(), QuantileError> {
        RiskLevel::new(self.omega_start)?;
        RiskLevel::new(self.omega_end)?;
        if self.steps == 0 {
            return Err(QuantileError::BadRiskLevel(f64::NAN));
        }
        Ok(())
    }

    pub fn level_at(&self, t: u64) -> RiskLevel {
        if t >= self.steps {
            return RiskLevel::new(self.omega_end).expect("validated");
        }
        let frac = t as f64 / self.steps as f64;
        let w = self.omega_start + (self.omega_end - self.omega_start) * frac;
        // Clamp away interpolation rounding at the [-1, 1] boundary.
        RiskLevel::new(w.clamp(-1.0, 1.0)).expect("clamped")
    }

    pub fn interval_at(&self, t: u64) -> RiskInterval {
        self.level_at(t).to_interval()
    }
}

/// Two-phase interval schedule: α decays linearly `start_alpha → 0` with
/// β pinned at 1, then β decays linearly `1 → beta_final`. The `steps`
/// budget is split between the phases in proportion to the parameter
/// distance traveled, so `beta_final = 1` leaves phase two empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TwoPhaseSchedule {
    pub start_alpha: f64,
    pub beta_final: f64,
    pub steps: u64,
}

impl Default for TwoPhaseSchedule {
    fn default() -> Self {
        Self {
            start_alpha: 0.99,
            beta_final: 0.25,
            steps: 50_000,
        }
    }
}

impl TwoPhaseSchedule {
    pub fn validate(&self) -> Result<(), QuantileError> {
        RiskInterval::new(self.start_alpha, 1.0)?;
        RiskInterval::new(0.0, self.beta_final)?;
        if self.steps == 0 {
            return Err(QuantileError::BadInterval {
                alpha: self.start_alpha,
                beta: self.beta_final,
            });
        }
        Ok(())
    }

    fn phase_split(&self) -> (u64, u64) {
        let d1 = self.start_alpha;
        let d2 = 1.0 - self.beta_final;
        if d1 + d2 == 0.0 {
            return (self.steps, 0);
        }
        let k1 = ((self.steps as f64) * d1 / (d1 + d2)).round() as u64;
        let k1 = k1.min(self.steps);
        (k1, self.steps - k1)
    }

    pub fn interval_at(&self, t: u64) -> RiskInterval {
        if t >= self.steps {
            return RiskInterval {
                alpha: 0.0,
                beta: self.beta_final,
            };
        }
        let (k1, k2) = self.phase_split();
        if t <= k1 && k1 > 0 {
            let alpha = self.start_alpha * (1.0 - t as f64 / k1 as f64);
            RiskInterval {
                alpha: alpha.clamp(0.0, self.start_alpha),
                beta: 1.0,
            }
        } else if k2 > 0 {
            let frac = (t - k1) as f64 / k2 as f64;
            let beta = 1.0 + (self.beta_final - 1.0) * frac;
            RiskInterval {
                alpha: 0.0,
                beta: beta.clamp(self.beta_final, 1.0),
            }
        } else {
            RiskInterval {
                alpha: 0.0,
                beta: 1.0,
            }
        }
    }
}

/// Decaying optimism bonus `c·sqrt(ln t / t)` applied to the square root of
/// the left truncated variance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DltvConfig {
    pub c: f64,
}

impl Default for DltvConfig {
    fn default() -> Self {
        Self { c: 50.0 }
    }
}

impl DltvConfig {
    pub fn validate(&self) -> Result<(), QuantileError> {
        if !(self.c.is_finite() && self.c >= 0.0) {
            return Err(QuantileError::BadRiskLevel(self.c));
        }
        Ok(())
    }

    /// Bonus scale at time `t`; `t < 2` is clamped to 2 to keep `ln t`
    /// positive.
    pub fn bonus_scale(&self, t: u64) -> f64 {
        let t = t.max(2) as f64;
        self.c * (t.ln() / t).sqrt()
    }
}

/// The signal a policy is acting on at time `t`, logged per episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExplorationSignal {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub bonus_scale: Option<f64>,
}

/// The selectable exploration policies.
#[derive(Debug, Clone, PartialEq)]
pub enum Exploration {
    EpsilonGreedy(EpsilonSchedule),
    Dltv(DltvConfig),
    StaticRisk(RiskInterval),
    RoeScalar(RoeSchedule),
    RoeTwoPhase(TwoPhaseSchedule),
}

impl Exploration {
    /// Interval the policy scores with (and learning should target) at `t`.
    pub fn interval_at(&self, t: u64) -> RiskInterval {
        match self {
            Exploration::EpsilonGreedy(_) | Exploration::Dltv(_) => NEUTRAL,
            Exploration::StaticRisk(r) => *r,
            Exploration::RoeScalar(s) => s.interval_at(t),
            Exploration::RoeTwoPhase(s) => s.interval_at(t),
        }
    }

    pub fn signal(&self, t: u64) -> ExplorationSignal {
        let mut sig = ExplorationSignal {
            epsilon: None,
            alpha: None,
            beta: None,
            bonus_scale: None,
        };
        match self {
            Exploration::EpsilonGreedy(s) => sig.epsilon = Some(s.epsilon_at(t)),
            Exploration::Dltv(c) => sig.bonus_scale = Some(c.bonus_scale(t)),
            _ => {
                let r = self.interval_at(t);
                sig.alpha = Some(r.alpha());
                sig.beta = Some(r.beta());
            }
        }
        sig
    }

    pub fn select_action<R: Rng + ?Sized>(
        &self,
        table: &QTable,
        obs: &ObservationKey,
        t: u64,
        rng: &mut R,
    ) -> usize {
        match self {
            Exploration::EpsilonGreedy(s) => {
                if rng.random_range(0.0..1.0) < s.epsilon_at(t) {
                    rng.random_range(0..table.n_actions())
                } else {
                    greedy_action(table, obs, NEUTRAL, rng)
                }
            }
            Exploration::Dltv(cfg) => select_dltv(table, obs, t, cfg, rng),
            Exploration::StaticRisk(r) => greedy_action(table, obs, *r, rng),
            Exploration::RoeScalar(s) => greedy_action(table, obs, s.interval_at(t), rng),
            Exploration::RoeTwoPhase(s) => greedy_action(table, obs, s.interval_at(t), rng),
        }
    }
}

impl ActionSelector for Exploration {
    fn select(
        &self,
        table: &QTable,
        obs: &ObservationKey,
        t: u64,
        rng: &mut dyn rand::RngCore,
    ) -> usize {
        self.select_action(table, obs, t, rng)
    }

    fn risk_interval(&self, t: u64) -> RiskInterval {
        self.interval_at(t)
    }
}

/// Optimistic selection `argmax_a mean(Z_a) + c_t·sqrt(σ²₊(Z_a))`, ties
/// uniform. Requires an even quantile count (enforced by the learner
/// config).
pub fn select_dltv<R: Rng + ?Sized>(
    table: &QTable,
    obs: &ObservationKey,
    t: u64,
    cfg: &DltvConfig,
    rng: &mut R,
) -> usize {
    let scale = cfg.bonus_scale(t);
    let mut best = f64::NEG_INFINITY;
    let mut ties: Vec<usize> = Vec::new();
    for a in 0..table.n_actions() {
        let d = table.distribution(obs, a);
        let sigma_plus = d
            .left_truncated_variance()
            .expect("truncated variance needs an even quantile count")
            .sqrt();
        let score = d.mean() + scale * sigma_plus;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quantile::QuantileDistribution;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    fn key(tag: u8) -> ObservationKey {
        ObservationKey::from_bytes(vec![tag])
    }

    fn set_dist(table: &mut QTable, obs: &ObservationKey, action: usize, values: &[f64]) {
        *table.distribution_mut(obs, action) =
            QuantileDistribution::new(values.to_vec()).unwrap();
    }

    #[test]
    fn epsilon_anneal_endpoints_and_midpoint() {
        let s = EpsilonSchedule::default();
        assert_eq!(s.epsilon_at(0), 1.0);
        assert_eq!(s.epsilon_at(50_000), 0.05);
        assert_eq!(s.epsilon_at(1_000_000), 0.05);
        assert!((s.epsilon_at(25_000) - 0.525).abs() < 1e-12);
    }

    #[test]
    fn epsilon_one_is_uniform() {
        // Chi-square over 10^4 draws with 6 arms: compare against the 0.999
        // quantile of chi2(5) ~ 20.5.
        let s = EpsilonSchedule {
            eps_start: 1.0,
            eps_end: 1.0,
            anneal_steps: 1,
        };
        let policy = Exploration::EpsilonGreedy(s);
        let mut table = QTable::new(6, 2, 0.0);
        let obs = key(0);
        // Bias the table hard toward action 3; ε = 1 must ignore it.
        set_dist(&mut table, &obs, 3, &[100.0, 100.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let mut counts = [0f64; 6];
        let n = 10_000;
        for _ in 0..n {
            counts[policy.select_action(&table, &obs, 0, &mut rng)] += 1.0;
        }
        let expected = n as f64 / 6.0;
        let chi2: f64 = counts.iter().map(|c| (c - expected).powi(2) / expected).sum();
        assert!(chi2 < 20.5, "chi2 = {chi2}, counts = {counts:?}");
    }

    #[test]
    fn epsilon_zero_is_pure_greedy() {
        let s = EpsilonSchedule {
            eps_start: 0.0,
            eps_end: 0.0,
            anneal_steps: 1,
        };
        let policy = Exploration::EpsilonGreedy(s);
        let mut table = QTable::new(4, 2, 0.0);
        let obs = key(0);
        set_dist(&mut table, &obs, 2, &[1.0, 1.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(5);
        for _ in 0..100 {
            assert_eq!(policy.select_action(&table, &obs, 123, &mut rng), 2);
        }
    }

    #[test]
    fn epsilon_half_mixes_within_three_sigma() {
        let s = EpsilonSchedule {
            eps_start: 0.5,
            eps_end: 0.5,
            anneal_steps: 1,
        };
        let policy = Exploration::EpsilonGreedy(s);
        let mut table = QTable::new(2, 2, 0.0);
        let obs = key(0);
        set_dist(&mut table, &obs, 1, &[1.0, 1.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(11);
        let n = 10_000;
        let mut greedy_hits = 0;
        for _ in 0..n {
            if policy.select_action(&table, &obs, 0, &mut rng) == 1 {
                greedy_hits += 1;
            }
        }
        // P(action 1) = (1 - ε) + ε/2 = 0.75.
        let p = 0.75;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        assert!((greedy_hits as f64 - n as f64 * p).abs() < 3.0 * sigma);
    }

    #[test]
    fn dltv_reduces_to_greedy_mean_when_flat_or_zero_coefficient() {
        let mut table = QTable::new(2, 4, 0.0);
        let obs = key(0);
        set_dist(&mut table, &obs, 0, &[1.0, 1.0, 1.0, 1.0]);
        set_dist(&mut table, &obs, 1, &[2.0, 2.0, 2.0, 2.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        // All variances zero.
        assert_eq!(select_dltv(&table, &obs, 10, &DltvConfig { c: 5.0 }, &mut rng), 1);
        // c = 0 ignores variance.
        let mut spread = QTable::new(2, 4, 0.0);
        set_dist(&mut spread, &obs, 0, &[-9.0, 0.0, 0.0, 13.0]);
        set_dist(&mut spread, &obs, 1, &[2.0, 2.0, 2.0, 2.0]);
        assert_eq!(select_dltv(&spread, &obs, 10, &DltvConfig { c: 0.0 }, &mut rng), 1);
    }

    #[test]
    fn dltv_bonus_hand_example() {
        // mean 1 / σ²₊ 4 vs mean 2 / σ²₊ 0 at t = 2, c = 1:
        // bonus = sqrt(ln 2 / 2) · 2 ≈ 1.177 puts action 0 ahead.
        let cfg = DltvConfig { c: 1.0 };
        let mut table = QTable::new(2, 4, 0.0);
        let obs = key(0);
        set_dist(&mut table, &obs, 0, &[-4.0, 0.0, 4.0, 4.0]);
        set_dist(&mut table, &obs, 1, &[2.0, 2.0, 2.0, 2.0]);
        let d0 = table.distribution(&obs, 0);
        assert_eq!(d0.mean(), 1.0);
        assert_eq!(d0.left_truncated_variance().unwrap(), 4.0);
        let score0 = 1.0 + cfg.bonus_scale(2) * 2.0;
        assert!((score0 - 2.177).abs() < 1e-3);
        let mut rng = ChaCha12Rng::seed_from_u64(0);
        assert_eq!(select_dltv(&table, &obs, 2, &cfg, &mut rng), 0);
        // The guard clamps t < 2 up to 2.
        assert_eq!(cfg.bonus_scale(0), cfg.bonus_scale(2));
    }

    #[test]
    fn roe_schedule_examples() {
        let s = RoeSchedule {
            omega_start: 1.0,
            omega_end: 0.0,
            steps: 4,
        };
        let r = s.interval_at(2);
        assert_eq!((r.alpha(), r.beta()), (0.5, 1.0));
        let r0 = s.interval_at(0);
        assert_eq!((r0.alpha(), r0.beta()), (1.0, 1.0));
        for t in [4, 5, 100] {
            let r = s.interval_at(t);
            assert_eq!((r.alpha(), r.beta()), (0.0, 1.0));
        }
    }

    #[test]
    fn roe_closed_form_matches_decrement_recurrence() {
        let s = RoeSchedule {
            omega_start: 0.7,
            omega_end: -0.3,
            steps: 997,
        };
        let delta = (s.omega_start - s.omega_end) / s.steps as f64;
        let mut w = s.omega_start;
        for t in 0..s.steps {
            assert!(
                (s.level_at(t).value() - w).abs() < 1e-12,
                "t = {t}: closed form {} vs recurrence {w}",
                s.level_at(t).value()
            );
            w -= delta;
        }
        assert_eq!(s.level_at(s.steps).value(), -0.3);
    }

    #[test]
    fn roe_endpoints_are_exact() {
        let s = RoeSchedule {
            omega_start: 0.99,
            omega_end: -0.77,
            steps: 12_345,
        };
        assert_eq!(s.level_at(0).value(), 0.99);
        assert_eq!(s.level_at(12_345).value(), -0.77);
        assert_eq!(s.level_at(u64::MAX).value(), -0.77);
    }

    #[test]
    fn two_phase_waypoints_exact() {
        let s = TwoPhaseSchedule {
            start_alpha: 0.99,
            beta_final: 0.25,
            steps: 10_000,
        };
        let (k1, k2) = s.phase_split();
        assert_eq!(k1 + k2, 10_000);
        let r0 = s.interval_at(0);
        assert_eq!((r0.alpha(), r0.beta()), (0.99, 1.0));
        let rmid = s.interval_at(k1);
        assert_eq!((rmid.alpha(), rmid.beta()), (0.0, 1.0));
        let rend = s.interval_at(10_000);
        assert_eq!((rend.alpha(), rend.beta()), (0.0, 0.25));
        assert_eq!(s.interval_at(10_001), rend);
    }

    #[test]
    fn two_phase_neutral_has_empty_second_phase() {
        let s = TwoPhaseSchedule {
            start_alpha: 0.99,
            beta_final: 1.0,
            steps: 100,
        };
        let (k1, k2) = s.phase_split();
        assert_eq!((k1, k2), (100, 0));
        let rend = s.interval_at(100);
        assert_eq!((rend.alpha(), rend.beta()), (0.0, 1.0));
    }

    #[test]
    fn two_phase_monotone_alpha_then_beta() {
        let s = TwoPhaseSchedule::default();
        let mut prev = s.interval_at(0);
        for t in 1..=s.steps {
            let r = s.interval_at(t);
            assert!(r.alpha() <= prev.alpha() + 1e-12);
            assert!(r.beta() <= prev.beta() + 1e-12);
            prev = r;
        }
    }

    #[test]
    fn roe_alpha_monotone_for_seeking_to_neutral() {
        let s = RoeSchedule {
            omega_start: 1.0,
            omega_end: 0.0,
            steps: 1000,
        };
        let mut prev = s.interval_at(0);
        for t in 1..=1001 {
            let r = s.interval_at(t);
            assert!(r.alpha() <= prev.alpha());
            assert_eq!(r.beta(), 1.0);
            prev = r;
        }
    }

    #[test]
    fn static_presets_match_anchors() {
        assert_eq!((NEUTRAL.alpha(), NEUTRAL.beta()), (0.0, 1.0));
        assert_eq!((SEEKING.alpha(), SEEKING.beta()), (0.75, 1.0));
        assert_eq!((AVERSE.alpha(), AVERSE.beta()), (0.0, 0.25));
        assert_eq!((NARROW_SEEKING.alpha(), NARROW_SEEKING.beta()), (0.9, 1.0));
        assert_eq!((NARROW_NEUTRAL.alpha(), NARROW_NEUTRAL.beta()), (0.4, 0.5));
        assert_eq!((NARROW_AVERSE.alpha(), NARROW_AVERSE.beta()), (0.0, 0.1));
    }

    #[test]
    fn extreme_seeking_selects_top_quantile_argmax() {
        let s = RoeSchedule {
            omega_start: 1.0,
            omega_end: 0.0,
            steps: 10,
        };
        let policy = Exploration::RoeScalar(s);
        let mut table = QTable::new(2, 4, 0.0);
        let obs = key(0);
        // Action 0 has the higher top quantile but the lower mean.
        set_dist(&mut table, &obs, 0, &[-10.0, -10.0, -10.0, 9.0]);
        set_dist(&mut table, &obs, 1, &[2.0, 2.0, 2.0, 2.0]);
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        assert_eq!(policy.select_action(&table, &obs, 0, &mut rng), 0);
        // Past the schedule it is greedy on means.
        assert_eq!(policy.select_action(&table, &obs, 10, &mut rng), 1);
    }

    #[test]
    fn degenerate_schedule_equals_static_policy() {
        let sched = Exploration::RoeScalar(RoeSchedule {
            omega_start: 0.5,
            omega_end: 0.5,
            steps: 100,
        });
        let fixed = Exploration::StaticRisk(RiskInterval::new(0.5, 1.0).unwrap());
        let mut table = QTable::new(3, 4, 0.0);
        let obs = key(0);
        set_dist(&mut table, &obs, 0, &[0.0, 1.0, 2.0, 8.0]);
        set_dist(&mut table, &obs, 1, &[3.0, 3.0, 3.0, 3.0]);
        set_dist(&mut table, &obs, 2, &[-5.0, 0.0, 5.0, 6.0]);
        for t in [0, 17, 50, 99, 100, 5000] {
            let mut rng1 = ChaCha12Rng::seed_from_u64(42);
            let mut rng2 = ChaCha12Rng::seed_from_u64(42);
            assert_eq!(
                sched.select_action(&table, &obs, t, &mut rng1),
                fixed.select_action(&table, &obs, t, &mut rng2)
            );
            assert_eq!(sched.interval_at(t), fixed.interval_at(t));
        }
    }

    #[test]
    fn shared_interval_across_agents_at_every_step() {
        let s = RoeSchedule::default();
        let policy = Exploration::RoeScalar(s);
        for t in [0, 1, 999, 50_000, 80_000] {
            let intervals: Vec<RiskInterval> =
                (0..8).map(|_| policy.interval_at(t)).collect();
            assert!(intervals.windows(2).all(|w| w[0] == w[1]));
        }
    }

    #[test]
    fn optimism_ordering_at_schedule_start() {
        // At t = 0 (extreme seeking) every action's score is >= its neutral
        // score.
        let mut table = QTable::new(3, 4, 0.0);
        let obs = key(0);
        set_dist(&mut table, &obs, 0, &[-3.0, -1.0, 0.5, 2.0]);
        set_dist(&mut table, &obs, 1, &[0.0, 0.0, 0.0, 0.0]);
        set_dist(&mut table, &obs, 2, &[-8.0, 1.0, 1.0, 9.0]);
        let seeking = RoeSchedule::default().interval_at(0);
        for a in 0..3 {
            let d = table.distribution(&obs, a);
            assert!(d.range_mean(seeking) >= d.range_mean(NEUTRAL));
        }
    }

    #[test]
    fn selectors_are_pure_given_rng_stream() {
        let policy = Exploration::Dltv(DltvConfig::default());
        let mut table = QTable::new(4, 4, 0.0);
        let obs = key(9);
        set_dist(&mut table, &obs, 2, &[0.0, 0.0, 1.0, 3.0]);
        let mut a = ChaCha12Rng::seed_from_u64(1234);
        let mut b = ChaCha12Rng::seed_from_u64(1234);
        for t in 0..50 {
            assert_eq!(
                policy.select_action(&table, &obs, t, &mut a),
                policy.select_action(&table, &obs, t, &mut b)
            );
        }
    }
}
