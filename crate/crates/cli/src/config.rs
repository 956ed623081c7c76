//! Experiment configuration: a versioned TOML file with unknown keys
//! rejected, defaults applied on load, and the fully resolved result echoed
//! back into every output so a run is reproducible from its artifacts alone.

use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

use roelab_core::envs::{
    Environment, MatrixGame, MatrixGameSpec, PredatorPrey, PredatorPreyConfig,
};
use roelab_core::explore::{
    DltvConfig, EpsilonSchedule, Exploration, RoeSchedule, TwoPhaseSchedule,
};
use roelab_core::learner::LearnerConfig;
use roelab_core::quantile::RiskInterval;

pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    Matrix,
    PredatorPrey,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(deny_unknown_fields)]
pub struct MatrixSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_agents: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_actions: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub payoff: Option<Vec<f64>>,
}

impl MatrixSection {
    fn build(&self) -> Result<MatrixGameSpec> {
        match &self.payoff {
            Some(payoff) => {
                let n_agents = self.n_agents.unwrap_or(2);
                let n_actions = self.n_actions.unwrap_or(3);
                MatrixGameSpec::new(n_agents, n_actions, payoff.clone())
                    .context("env.matrix.payoff")
            }
            None => {
                let spec = MatrixGameSpec::default_spec();
                if self.n_agents.is_some_and(|n| n != spec.n_agents()) {
                    bail!("env.matrix.n_agents requires an explicit payoff tensor");
                }
                if self.n_actions.is_some_and(|n| n != spec.n_actions()) {
                    bail!("env.matrix.n_actions requires an explicit payoff tensor");
                }
                Ok(spec)
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvSpec {
    pub kind: EnvKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<MatrixSection>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub predator_prey: Option<PredatorPreyConfig>,
}

impl EnvSpec {
    pub fn resolve(&self) -> Result<ResolvedEnv> {
        match self.kind {
            EnvKind::Matrix => {
                if self.predator_prey.is_some() {
                    bail!("env.predator_prey set but env.kind is \"matrix\"");
                }
                let spec = self.matrix.clone().unwrap_or_default().build()?;
                Ok(ResolvedEnv::Matrix(spec))
            }
            EnvKind::PredatorPrey => {
                if self.matrix.is_some() {
                    bail!("env.matrix set but env.kind is \"predator_prey\"");
                }
                let cfg = self.predator_prey.clone().unwrap_or_default();
                cfg.validate().context("env.predator_prey")?;
                Ok(ResolvedEnv::PredatorPrey(cfg))
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ResolvedEnv {
    Matrix(MatrixGameSpec),
    PredatorPrey(PredatorPreyConfig),
}

impl ResolvedEnv {
    pub fn kind(&self) -> EnvKind {
        match self {
            ResolvedEnv::Matrix(_) => EnvKind::Matrix,
            ResolvedEnv::PredatorPrey(_) => EnvKind::PredatorPrey,
        }
    }

    pub fn build(&self) -> Result<Box<dyn Environment>> {
        Ok(match self {
            ResolvedEnv::Matrix(spec) => Box::new(MatrixGame::new(spec.clone())),
            ResolvedEnv::PredatorPrey(cfg) => Box::new(PredatorPrey::new(cfg.clone())?),
        })
    }

    fn to_spec(&self) -> EnvSpec {
        match self {
            ResolvedEnv::Matrix(spec) => EnvSpec {
                kind: EnvKind::Matrix,
                matrix: Some(MatrixSection {
                    n_agents: Some(spec.n_agents()),
                    n_actions: Some(spec.n_actions()),
                    payoff: Some(spec.payoff_flat().to_vec()),
                }),
                predator_prey: None,
            },
            ResolvedEnv::PredatorPrey(cfg) => EnvSpec {
                kind: EnvKind::PredatorPrey,
                matrix: None,
                predator_prey: Some(cfg.clone()),
            },
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PolicyKind {
    EpsilonGreedy,
    Dltv,
    StaticRisk,
    RoeScalar,
    RoeTwoPhase,
}

impl PolicyKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            PolicyKind::EpsilonGreedy => "epsilon_greedy",
            PolicyKind::Dltv => "dltv",
            PolicyKind::StaticRisk => "static_risk",
            PolicyKind::RoeScalar => "roe_scalar",
            PolicyKind::RoeTwoPhase => "roe_two_phase",
        }
    }
}

/// Flat policy section; which parameters apply depends on `kind`, and
/// parameters belonging to a different kind are rejected by name.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PolicyConfig {
    pub kind: PolicyKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub name: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anneal_steps: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_start: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub omega_end: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start_alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_final: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule_steps: Option<u64>,
}

impl PolicyConfig {
    pub fn of_kind(kind: PolicyKind) -> Self {
        Self {
            kind,
            name: None,
            eps_start: None,
            eps_end: None,
            anneal_steps: None,
            c: None,
            alpha: None,
            beta: None,
            omega_start: None,
            omega_end: None,
            start_alpha: None,
            beta_final: None,
            schedule_steps: None,
        }
    }

    pub fn label(&self) -> String {
        self.name
            .clone()
            .unwrap_or_else(|| self.kind.as_str().to_string())
    }

    fn reject_foreign(&self, allowed: &[&str]) -> Result<()> {
        let fields: [(&str, bool); 11] = [
            ("eps_start", self.eps_start.is_some()),
            ("eps_end", self.eps_end.is_some()),
            ("anneal_steps", self.anneal_steps.is_some()),
            ("c", self.c.is_some()),
            ("alpha", self.alpha.is_some()),
            ("beta", self.beta.is_some()),
            ("omega_start", self.omega_start.is_some()),
            ("omega_end", self.omega_end.is_some()),
            ("start_alpha", self.start_alpha.is_some()),
            ("beta_final", self.beta_final.is_some()),
            ("schedule_steps", self.schedule_steps.is_some()),
        ];
        for (field, set) in fields {
            if set && !allowed.contains(&field) {
                bail!(
                    "policy.{field} does not apply to kind \"{}\"",
                    self.kind.as_str()
                );
            }
        }
        Ok(())
    }

    /// Fills kind-specific defaults and validates; the result always builds.
    pub fn resolve(&self) -> Result<PolicyConfig> {
        let mut out = self.clone();
        match self.kind {
            PolicyKind::EpsilonGreedy => {
                self.reject_foreign(&["eps_start", "eps_end", "anneal_steps"])?;
                let d = EpsilonSchedule::default();
                out.eps_start.get_or_insert(d.eps_start);
                out.eps_end.get_or_insert(d.eps_end);
                out.anneal_steps.get_or_insert(d.anneal_steps);
            }
            PolicyKind::Dltv => {
                self.reject_foreign(&["c"])?;
                out.c.get_or_insert(DltvConfig::default().c);
            }
            PolicyKind::StaticRisk => {
                self.reject_foreign(&["alpha", "beta"])?;
                out.alpha.get_or_insert(0.0);
                out.beta.get_or_insert(1.0);
            }
            PolicyKind::RoeScalar => {
                self.reject_foreign(&["omega_start", "omega_end", "schedule_steps"])?;
                let d = RoeSchedule::default();
                out.omega_start.get_or_insert(d.omega_start);
                out.omega_end.get_or_insert(d.omega_end);
                out.schedule_steps.get_or_insert(d.steps);
            }
            PolicyKind::RoeTwoPhase => {
                self.reject_foreign(&["start_alpha", "beta_final", "schedule_steps"])?;
                let d = TwoPhaseSchedule::default();
                out.start_alpha.get_or_insert(d.start_alpha);
                out.beta_final.get_or_insert(d.beta_final);
                out.schedule_steps.get_or_insert(d.steps);
            }
        }
        out.build().context("policy")?;
        Ok(out)
    }

    pub fn build(&self) -> Result<Exploration> {
        Ok(match self.kind {
            PolicyKind::EpsilonGreedy => {
                let d = EpsilonSchedule::default();
                let s = EpsilonSchedule {
                    eps_start: self.eps_start.unwrap_or(d.eps_start),
                    eps_end: self.eps_end.unwrap_or(d.eps_end),
                    anneal_steps: self.anneal_steps.unwrap_or(d.anneal_steps),
                };
                s.validate().context("policy epsilon schedule")?;
                Exploration::EpsilonGreedy(s)
            }
            PolicyKind::Dltv => {
                let cfg = DltvConfig {
                    c: self.c.unwrap_or(DltvConfig::default().c),
                };
                cfg.validate().context("policy.c")?;
                Exploration::Dltv(cfg)
            }
            PolicyKind::StaticRisk => {
                let r = RiskInterval::new(self.alpha.unwrap_or(0.0), self.beta.unwrap_or(1.0))
                    .context("policy alpha/beta")?;
                Exploration::StaticRisk(r)
            }
            PolicyKind::RoeScalar => {
                let d = RoeSchedule::default();
                let s = RoeSchedule {
                    omega_start: self.omega_start.unwrap_or(d.omega_start),
                    omega_end: self.omega_end.unwrap_or(d.omega_end),
                    steps: self.schedule_steps.unwrap_or(d.steps),
                };
                s.validate().context("policy risk schedule")?;
                Exploration::RoeScalar(s)
            }
            PolicyKind::RoeTwoPhase => {
                let d = TwoPhaseSchedule::default();
                let s = TwoPhaseSchedule {
                    start_alpha: self.start_alpha.unwrap_or(d.start_alpha),
                    beta_final: self.beta_final.unwrap_or(d.beta_final),
                    steps: self.schedule_steps.unwrap_or(d.steps),
                };
                s.validate().context("policy two-phase schedule")?;
                Exploration::RoeTwoPhase(s)
            }
        })
    }
}

fn default_eval_every() -> u64 {
    1000
}

fn default_eval_episodes() -> usize {
    10
}

fn default_seeds() -> Vec<u64> {
    vec![0]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunSection {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub total_steps: Option<i64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub warmup_steps: Option<i64>,
    #[serde(default = "default_eval_every")]
    pub eval_every: u64,
    #[serde(default = "default_eval_episodes")]
    pub eval_episodes: usize,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<String>,
}

impl Default for RunSection {
    fn default() -> Self {
        Self {
            total_steps: None,
            warmup_steps: None,
            eval_every: default_eval_every(),
            eval_episodes: default_eval_episodes(),
            seeds: default_seeds(),
            output_dir: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub policies: Vec<PolicyConfig>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub version: u32,
    pub env: EnvSpec,
    #[serde(default)]
    pub learner: LearnerConfig,
    pub policy: PolicyConfig,
    #[serde(default)]
    pub run: RunSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

/// Fully validated configuration with every default made explicit.
#[derive(Debug, Clone, PartialEq)]
pub struct ResolvedConfig {
    pub env: ResolvedEnv,
    pub learner: LearnerConfig,
    pub policy: PolicyConfig,
    pub total_steps: u64,
    pub warmup_steps: u64,
    pub eval_every: u64,
    pub eval_episodes: usize,
    pub seeds: Vec<u64>,
    pub output_dir: Option<String>,
    pub sweep_policies: Vec<PolicyConfig>,
}

impl ResolvedConfig {
    /// Echoes the resolved configuration as a loadable TOML document.
    pub fn echo_toml(&self) -> String {
        toml::to_string_pretty(&self.echo_config()).expect("resolved config serializes")
    }

    /// JSON form embedded in every output-file header.
    pub fn as_json(&self) -> serde_json::Value {
        serde_json::to_value(self.echo_config()).expect("resolved config serializes")
    }

    fn echo_config(&self) -> ExperimentConfig {
        ExperimentConfig {
            version: CONFIG_VERSION,
            env: self.env.to_spec(),
            learner: self.learner.clone(),
            policy: self.policy.clone(),
            run: RunSection {
                total_steps: Some(self.total_steps as i64),
                warmup_steps: Some(self.warmup_steps as i64),
                eval_every: self.eval_every,
                eval_episodes: self.eval_episodes,
                seeds: self.seeds.clone(),
                output_dir: self.output_dir.clone(),
            },
            sweep: if self.sweep_policies.is_empty() {
                None
            } else {
                Some(SweepSection {
                    policies: self.sweep_policies.clone(),
                })
            },
        }
    }

    /// Policies a sweep runs: the sweep grid when present, otherwise the
    /// single configured policy.
    pub fn sweep_grid(&self) -> Vec<PolicyConfig> {
        if self.sweep_policies.is_empty() {
            vec![self.policy.clone()]
        } else {
            self.sweep_policies.clone()
        }
    }

    /// Same run configuration with a different active policy.
    pub fn with_policy(&self, policy: PolicyConfig) -> ResolvedConfig {
        ResolvedConfig {
            policy,
            ..self.clone()
        }
    }
}

impl ExperimentConfig {
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        if self.version != CONFIG_VERSION {
            bail!(
                "config version {} unsupported (expected {CONFIG_VERSION})",
                self.version
            );
        }
        let env = self.env.resolve()?;
        self.learner.validate().context("learner")?;
        let policy = self.policy.resolve()?;

        let default_total: i64 = match env.kind() {
            EnvKind::Matrix => 20_000,
            EnvKind::PredatorPrey => 200_000,
        };
        let default_warmup: i64 = match env.kind() {
            EnvKind::Matrix => 0,
            EnvKind::PredatorPrey => 50_000,
        };
        let total_steps = self.run.total_steps.unwrap_or(default_total);
        if total_steps < 0 {
            bail!("run.total_steps must be nonnegative, got {total_steps}");
        }
        let warmup_steps = self.run.warmup_steps.unwrap_or(default_warmup);
        if warmup_steps < 0 {
            bail!("run.warmup_steps must be nonnegative, got {warmup_steps}");
        }
        if self.run.eval_every == 0 {
            bail!("run.eval_every must be >= 1");
        }
        if self.run.seeds.is_empty() {
            bail!("run.seeds must be non-empty");
        }
        let sweep_policies = match &self.sweep {
            None => Vec::new(),
            Some(s) => {
                if s.policies.is_empty() {
                    bail!("sweep.policies must be non-empty when [sweep] is present");
                }
                let mut resolved = Vec::with_capacity(s.policies.len());
                for p in &s.policies {
                    resolved.push(p.resolve()?);
                }
                let mut labels: Vec<String> =
                    resolved.iter().map(|p| p.label()).collect();
                labels.sort();
                labels.dedup();
                if labels.len() != resolved.len() {
                    bail!("sweep policy labels must be distinct (set policy.name)");
                }
                resolved
            }
        };

        Ok(ResolvedConfig {
            env,
            learner: self.learner.clone(),
            policy,
            total_steps: total_steps as u64,
            warmup_steps: warmup_steps as u64,
            eval_every: self.run.eval_every,
            eval_episodes: self.run.eval_episodes,
            seeds: self.run.seeds.clone(),
            output_dir: self.run.output_dir.clone(),
            sweep_policies,
        })
    }
}

pub fn load_config(path: &Path) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading config {}", path.display()))?;
    parse_config(&text).with_context(|| format!("parsing config {}", path.display()))
}

pub fn parse_config(text: &str) -> Result<ExperimentConfig> {
    Ok(toml::from_str(text)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
version = 1

[env]
kind = "matrix"

[policy]
kind = "roe_scalar"
"#;

    #[test]
    fn minimal_config_resolves_all_defaults() {
        let cfg = parse_config(MINIMAL).unwrap();
        let resolved = cfg.resolve().unwrap();
        assert_eq!(resolved.total_steps, 20_000);
        assert_eq!(resolved.warmup_steps, 0);
        assert_eq!(resolved.eval_every, 1000);
        assert_eq!(resolved.eval_episodes, 10);
        assert_eq!(resolved.seeds, vec![0]);
        assert_eq!(resolved.policy.omega_start, Some(1.0));
        assert_eq!(resolved.policy.omega_end, Some(0.0));
        assert!(matches!(resolved.env, ResolvedEnv::Matrix(_)));
        assert_eq!(resolved.learner, LearnerConfig::default());
    }

    #[test]
    fn predator_prey_defaults_differ() {
        let text = r#"
version = 1

[env]
kind = "predator_prey"

[policy]
kind = "epsilon_greedy"
"#;
        let resolved = parse_config(text).unwrap().resolve().unwrap();
        assert_eq!(resolved.total_steps, 200_000);
        assert_eq!(resolved.warmup_steps, 50_000);
    }

    #[test]
    fn negative_total_steps_rejected() {
        let text = MINIMAL.replace(
            "[policy]",
            "[run]\ntotal_steps = -5\n\n[policy]",
        );
        let err = parse_config(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("total_steps"), "{err}");
    }

    #[test]
    fn unknown_key_rejected_by_name() {
        let text = MINIMAL.replace("kind = \"matrix\"", "kind = \"matrix\"\nbogus_key = 3");
        let err = parse_config(&text).unwrap_err();
        assert!(err.to_string().contains("bogus_key"), "{err}");
    }

    #[test]
    fn foreign_policy_parameter_rejected_by_name() {
        let text = MINIMAL.replace(
            "kind = \"roe_scalar\"",
            "kind = \"roe_scalar\"\neps_start = 0.3",
        );
        let err = parse_config(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("eps_start"), "{err}");
    }

    #[test]
    fn echoed_config_reloads_to_same_resolution() {
        let resolved = parse_config(MINIMAL).unwrap().resolve().unwrap();
        let echoed = resolved.echo_toml();
        let reloaded = parse_config(&echoed).unwrap().resolve().unwrap();
        assert_eq!(reloaded, resolved);
    }

    #[test]
    fn custom_payoff_round_trips() {
        let text = r#"
version = 1

[env]
kind = "matrix"

[env.matrix]
n_agents = 2
n_actions = 2
payoff = [1.0, 2.0, 3.0, 4.0]

[policy]
kind = "static_risk"
alpha = 0.75
beta = 1.0
"#;
        let resolved = parse_config(text).unwrap().resolve().unwrap();
        let ResolvedEnv::Matrix(spec) = &resolved.env else {
            panic!("expected matrix env");
        };
        assert_eq!(spec.payoff(&[1, 0]).unwrap(), 3.0);
        let reloaded = parse_config(&resolved.echo_toml()).unwrap().resolve().unwrap();
        assert_eq!(reloaded, resolved);
    }

    #[test]
    fn sweep_labels_must_be_distinct() {
        let text = format!(
            "{MINIMAL}\n[[sweep.policies]]\nkind = \"dltv\"\n\n[[sweep.policies]]\nkind = \"dltv\"\n"
        );
        let err = parse_config(&text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("distinct"), "{err}");
    }

    #[test]
    fn env_section_must_match_kind() {
        let text = r#"
version = 1

[env]
kind = "matrix"

[env.predator_prey]
width = 10

[policy]
kind = "dltv"
"#;
        let err = parse_config(text).unwrap().resolve().unwrap_err();
        assert!(err.to_string().contains("predator_prey"), "{err}");
    }
}
