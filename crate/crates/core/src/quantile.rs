//! Quantile value distributions and the distributional-RL primitives built on
//! them.
//!
//! A return distribution is represented by `N` equally weighted, nondecreasing
//! values `θ_1..θ_N` (a uniform Dirac mixture). The empirical CDF is the
//! right-continuous step function with `F(θ_i) = i/N`; its inverse uses the
//! infimum convention `F⁻¹(τ) = θ_⌈τN⌉`, with `τ = 0` mapping to `θ_1`.
//!
//! Risk-sensitive scores restrict the quantile fractions to an interval
//! `[α, β] ⊆ [0, 1]`: [`QuantileDistribution::range_mean`] is the exact mean
//! of `F⁻¹(τ)` for `τ ~ U[α, β]`, and [`QuantileDistribution::project`]
//! reparameterizes the inverse CDF onto that interval. Both are closed-form
//! integrals over the step function rather than sampled approximations, so
//! results are deterministic and the projection is exactly non-expansive in
//! the max-quantile metric.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum QuantileError {
    #[error("quantile distribution needs at least one value")]
    Empty,
    #[error("quantile value at index {0} is not finite")]
    NonFinite(usize),
    #[error("quantile values must be nondecreasing (violated at index {0})")]
    Unsorted(usize),
    #[error("quantile fraction {0} is outside [0, 1]")]
    TauOutOfRange(f64),
    #[error("risk interval requires 0 <= alpha <= beta <= 1, got [{alpha}, {beta}]")]
    BadInterval { alpha: f64, beta: f64 },
    #[error("risk level {0} is outside [-1, 1]")]
    BadRiskLevel(f64),
    #[error("quantile counts differ: {0} vs {1}")]
    CountMismatch(usize, usize),
    #[error("wasserstein order must be >= 1, got {0}")]
    BadOrder(f64),
    #[error("left truncated variance needs an even quantile count, got {0}")]
    OddQuantileCount(usize),
}

/// The sampling region `[α, β]` of quantile fractions used when scoring or
/// projecting a distribution. Upper intervals give optimistic (risk-seeking)
/// scores, lower intervals pessimistic (risk-averse) ones.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawInterval", into = "RawInterval")]
pub struct RiskInterval {
    pub(crate) alpha: f64,
    pub(crate) beta: f64,
}

#[derive(Serialize, Deserialize)]
struct RawInterval {
    alpha: f64,
    beta: f64,
}

impl TryFrom<RawInterval> for RiskInterval {
    type Error = QuantileError;
    fn try_from(raw: RawInterval) -> Result<Self, Self::Error> {
        RiskInterval::new(raw.alpha, raw.beta)
    }
}

impl From<RiskInterval> for RawInterval {
    fn from(r: RiskInterval) -> Self {
        RawInterval {
            alpha: r.alpha,
            beta: r.beta,
        }
    }
}

impl RiskInterval {
    pub fn new(alpha: f64, beta: f64) -> Result<Self, QuantileError> {
        if !(alpha.is_finite() && beta.is_finite() && 0.0 <= alpha && alpha <= beta && beta <= 1.0)
        {
            return Err(QuantileError::BadInterval { alpha, beta });
        }
        Ok(Self { alpha, beta })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn width(&self) -> f64 {
        self.beta - self.alpha
    }

    /// Full-domain interval `[0, 1]` (risk-neutral scoring).
    pub const NEUTRAL: RiskInterval = RiskInterval {
        alpha: 0.0,
        beta: 1.0,
    };
}

/// Scalar risk level `ω ∈ [-1, 1]`: `1` is extreme seeking, `0` neutral,
/// `-1` extreme averse.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "f64", into = "f64")]
pub struct RiskLevel(f64);

impl TryFrom<f64> for RiskLevel {
    type Error = QuantileError;
    fn try_from(w: f64) -> Result<Self, Self::Error> {
        RiskLevel::new(w)
    }
}

impl From<RiskLevel> for f64 {
    fn from(w: RiskLevel) -> f64 {
        w.0
    }
}

impl RiskLevel {
    pub fn new(w: f64) -> Result<Self, QuantileError> {
        if !(w.is_finite() && (-1.0..=1.0).contains(&w)) {
            return Err(QuantileError::BadRiskLevel(w));
        }
        Ok(Self(w))
    }

    pub fn value(&self) -> f64 {
        self.0
    }

    /// Maps the scalar level onto its sampling region: `w >= 0` gives
    /// `[w, 1]` (seeking side), `w < 0` gives `[0, 1 + w]` (averse side).
    /// So `1, 0.5, 0, -0.5, -1` map to `U[1,1], U[0.5,1], U[0,1], U[0,0.5],
    /// U[0,0]` respectively.
    pub fn to_interval(self) -> RiskInterval {
        if self.0 >= 0.0 {
            RiskInterval {
                alpha: self.0,
                beta: 1.0,
            }
        } else {
            RiskInterval {
                alpha: 0.0,
                beta: 1.0 + self.0,
            }
        }
    }
}

/// `τ̂_i = (2i+1)/(2N)`, the midpoint of the i-th (0-based) probability band.
pub fn quantile_midpoint(i: usize, n: usize) -> f64 {
    debug_assert!(i < n);
    (2 * i + 1) as f64 / (2 * n) as f64
}

/// 0-based atom index selected by `F⁻¹(τ) = θ_⌈τN⌉` (`τ = 0` selects atom 0).
fn atom_index(tau: f64, n: usize) -> usize {
    if tau <= 0.0 {
        return 0;
    }
    ((tau * n as f64).ceil() as usize).clamp(1, n) - 1
}

/// `N` sorted return values representing a uniform Dirac mixture.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct QuantileDistribution {
    values: Vec<f64>,
}

impl TryFrom<Vec<f64>> for QuantileDistribution {
    type Error = QuantileError;
    fn try_from(values: Vec<f64>) -> Result<Self, Self::Error> {
        QuantileDistribution::new(values)
    }
}

impl From<QuantileDistribution> for Vec<f64> {
    fn from(d: QuantileDistribution) -> Self {
        d.values
    }
}

impl QuantileDistribution {
    /// Validates that `values` is non-empty, finite, and nondecreasing.
    pub fn new(values: Vec<f64>) -> Result<Self, QuantileError> {
        if values.is_empty() {
            return Err(QuantileError::Empty);
        }
        for (i, &v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(QuantileError::NonFinite(i));
            }
            if i > 0 && v < values[i - 1] {
                return Err(QuantileError::Unsorted(i));
            }
        }
        Ok(Self { values })
    }

    /// Sorts `values` first; rejects empty input and non-finite entries.
    pub fn from_unsorted(mut values: Vec<f64>) -> Result<Self, QuantileError> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(QuantileError::NonFinite(i));
        }
        values.sort_by(|a, b| a.partial_cmp(b).unwrap());
        Self::new(values)
    }

    pub fn constant(value: f64, n: usize) -> Result<Self, QuantileError> {
        Self::new(vec![value; n.max(1)])
    }

    pub fn n(&self) -> usize {
        self.values.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// `F⁻¹(τ) = inf{y : τ <= F(y)} = θ_⌈τN⌉`, with `τ = 0 ↦ θ_1`.
    pub fn inverse_cdf(&self, tau: f64) -> Result<f64, QuantileError> {
        if !(tau.is_finite() && (0.0..=1.0).contains(&tau)) {
            return Err(QuantileError::TauOutOfRange(tau));
        }
        Ok(self.values[atom_index(tau, self.values.len())])
    }

    fn inverse_cdf_clamped(&self, tau: f64) -> f64 {
        self.values[atom_index(tau.clamp(0.0, 1.0), self.values.len())]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    /// Exact value of `E_{τ~U[α,β]}[F⁻¹(τ)]` over the step inverse CDF
    /// (`θ_i` constant on `((i-1)/N, i/N]`). A degenerate interval `α = β`
    /// returns the point evaluation `F⁻¹(α)`; `[0, 1]` returns the mean
    /// exactly. The result is clamped to `[θ_1, θ_N]` so rounding can never
    /// push a weighted average outside the support.
    pub fn range_mean(&self, r: RiskInterval) -> f64 {
        let (a, b) = (r.alpha, r.beta);
        if a == b {
            return self.inverse_cdf_clamped(a);
        }
        if a == 0.0 && b == 1.0 {
            return self.mean();
        }
        let n = self.values.len() as f64;
        let mut weighted = 0.0;
        let mut total = 0.0;
        for (i, &v) in self.values.iter().enumerate() {
            let lo = (i as f64 / n).max(a);
            let hi = ((i + 1) as f64 / n).min(b);
            if hi > lo {
                let w = hi - lo;
                weighted += v * w;
                total += w;
            }
        }
        (weighted / total).clamp(self.values[0], *self.values.last().unwrap())
    }

    /// The `[α, β]`-restricted distribution: the i-th output value is
    /// `F⁻¹((β-α)·τ̂_i + α)`. Monotone in `i`, so the output is sorted by
    /// construction; `[0, 1]` is the identity.
    pub fn project(&self, r: RiskInterval) -> QuantileDistribution {
        let n = self.values.len();
        let width = r.beta - r.alpha;
        let values: Vec<f64> = (0..n)
            .map(|i| self.inverse_cdf_clamped(width * quantile_midpoint(i, n) + r.alpha))
            .collect();
        debug_assert!(values.windows(2).all(|w| w[0] <= w[1]));
        QuantileDistribution { values }
    }

    /// `σ²₊ = (1/2N) Σ_{j=N/2}^{N} (θ_j - θ_{N/2})²` (1-based indices): the
    /// variance of the upper half of the quantile set about the median atom.
    pub fn left_truncated_variance(&self) -> Result<f64, QuantileError> {
        let n = self.values.len();
        if !n.is_multiple_of(2) {
            return Err(QuantileError::OddQuantileCount(n));
        }
        let median = self.values[n / 2 - 1];
        let sum: f64 = self.values[n / 2 - 1..]
            .iter()
            .map(|&v| (v - median) * (v - median))
            .sum();
        Ok(sum / (2.0 * n as f64))
    }

    /// Adds `step` componentwise and re-sorts, preserving the nondecreasing
    /// invariant after a gradient update.
    pub fn apply_gradient_step(&mut self, step: &[f64]) {
        debug_assert_eq!(step.len(), self.values.len());
        for (v, s) in self.values.iter_mut().zip(step) {
            *v += s;
            debug_assert!(v.is_finite());
        }
        self.values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    }
}

/// `W_∞` for equal-weight sorted quantile sets: `max_i |θ1_i - θ2_i|`.
pub fn wasserstein_inf(
    d1: &QuantileDistribution,
    d2: &QuantileDistribution,
) -> Result<f64, QuantileError> {
    if d1.n() != d2.n() {
        return Err(QuantileError::CountMismatch(d1.n(), d2.n()));
    }
    Ok(d1
        .values
        .iter()
        .zip(&d2.values)
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max))
}

/// `W_p = ((1/N) Σ |θ1_i - θ2_i|^p)^{1/p}` for `p >= 1`.
pub fn wasserstein_p(
    d1: &QuantileDistribution,
    d2: &QuantileDistribution,
    p: f64,
) -> Result<f64, QuantileError> {
    if d1.n() != d2.n() {
        return Err(QuantileError::CountMismatch(d1.n(), d2.n()));
    }
    if !(p.is_finite() && p >= 1.0) {
        return Err(QuantileError::BadOrder(p));
    }
    let n = d1.n() as f64;
    let sum: f64 = d1
        .values
        .iter()
        .zip(&d2.values)
        .map(|(a, b)| (a - b).abs().powf(p))
        .sum();
    Ok((sum / n).powf(1.0 / p))
}

/// Huber quantile regression loss `ρ^k_τ(δ) = |τ - 1{δ<0}| · L_k(δ)` with
/// `L_k(δ) = δ²/2k` for `|δ| <= k` and `|δ| - k/2` otherwise.
pub fn huber_quantile_loss(delta: f64, tau: f64, k: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&tau) && k > 0.0);
    let weight = if delta < 0.0 { 1.0 - tau } else { tau };
    let l = if delta.abs() <= k {
        delta * delta / (2.0 * k)
    } else {
        delta.abs() - 0.5 * k
    };
    weight * l
}

/// Derivative of `ρ^k_τ(target - θ)` with respect to the predicted quantile
/// `θ`: `-|τ - 1{δ<0}| · clip(δ/k, -1, 1)`, with the subgradient 0 at the
/// kink `δ = 0`.
pub fn huber_quantile_grad(delta: f64, tau: f64, k: f64) -> f64 {
    debug_assert!((0.0..=1.0).contains(&tau) && k > 0.0);
    if delta == 0.0 {
        return 0.0;
    }
    let weight = if delta < 0.0 { 1.0 - tau } else { tau };
    -weight * (delta / k).clamp(-1.0, 1.0)
}
