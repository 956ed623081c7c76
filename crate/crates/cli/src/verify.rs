//! The dynamic-programming verification battery: projection
//! non-expansiveness, fixed-policy γ-contraction of the projected Bellman
//! operator, and the schedule drift bound, over seeded random MDPs. Emits a
//! human-readable line per check and a machine-readable NDJSON report.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use roelab_core::dp::random::{random_fixed_policy, random_mdp, random_table};
use roelab_core::dp::{
    check_contraction, check_nonexpansive, check_drift_bound, BackupPolicy, CheckReport,
    QuantileTable, RiskSchedulePlan,
};
use roelab_core::envs::mix_seed;
use roelab_core::quantile::RiskInterval;

#[derive(Debug, Clone)]
pub struct VerifyOptions {
    pub seed: u64,
    pub trials: usize,
    pub mdps: usize,
    pub schedule_cases: usize,
    pub n_quantiles: usize,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        Self {
            seed: 2024,
            trials: 200,
            mdps: 20,
            schedule_cases: 10,
            n_quantiles: 32,
        }
    }
}

#[derive(Debug)]
pub struct BatteryOutcome {
    pub reports: Vec<CheckReport>,
    pub all_pass: bool,
}

fn random_interval<R: Rng + ?Sized>(rng: &mut R) -> RiskInterval {
    let a: f64 = rng.random_range(0.0..1.0);
    let b: f64 = rng.random_range(a..=1.0);
    RiskInterval::new(a, b).unwrap()
}

/// Runs the full battery and writes `verify_report.ndjson` under `out_dir`.
/// Returns all reports; `all_pass` drives the process exit code.
pub fn run_battery(opts: &VerifyOptions, out_dir: &Path) -> Result<BatteryOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let mut reports: Vec<CheckReport> = Vec::new();

    for m in 0..opts.mdps {
        let mdp_seed = mix_seed(opts.seed, m as u64);
        let mut rng = ChaCha12Rng::seed_from_u64(mdp_seed);
        let n_states = rng.random_range(2..=5);
        let n_actions = rng.random_range(1..=3);
        // First MDP pins the γ = 0 corner; the rest cycle the grid.
        let gamma = if m == 0 {
            0.0
        } else {
            [0.5, 0.9, 0.99][m % 3]
        };
        let mdp = random_mdp(&mut rng, n_states, n_actions, gamma);
        let policy = BackupPolicy::Fixed(random_fixed_policy(&mut rng, &mdp));

        reports.push(
            check_nonexpansive(&mdp, opts.n_quantiles, opts.trials, mdp_seed)
                .context("nonexpansive check")?,
        );
        let r = if m % 2 == 0 {
            RiskInterval::NEUTRAL
        } else {
            random_interval(&mut rng)
        };
        reports.push(
            check_contraction(&mdp, &policy, r, opts.n_quantiles, opts.trials, mdp_seed)
                .context("contraction check")?,
        );
    }

    for case in 0..opts.schedule_cases {
        let mdp_seed = mix_seed(opts.seed, 0x5C8ED + case as u64);
        let mut rng = ChaCha12Rng::seed_from_u64(mdp_seed);
        // γ = 0.99 fixed points are slow; keep the drift-bound battery on the
        // faster discounts (the contraction checks above still cover 0.99).
        let gamma = [0.5, 0.9][case % 2];
        let n_states = rng.random_range(2..=4);
        let n_actions = rng.random_range(1..=2);
        let mdp = random_mdp(&mut rng, n_states, n_actions, gamma);
        let policy = BackupPolicy::Fixed(random_fixed_policy(&mut rng, &mdp));
        let intervals: Vec<RiskInterval> = match case % 3 {
            // Constant schedule: the bound collapses to γ^t·d(Z0, Z*).
            0 => vec![random_interval(&mut rng); 10],
            // Extreme-seeking to neutral, linear.
            1 => (0..10)
                .map(|t| RiskInterval::new(1.0 - t as f64 / 9.0, 1.0).unwrap())
                .collect(),
            _ => (0..8).map(|_| random_interval(&mut rng)).collect(),
        };
        let plan = RiskSchedulePlan { intervals };
        let z0 = if case % 2 == 0 {
            QuantileTable::zero(n_states, n_actions, opts.n_quantiles)
        } else {
            random_table(&mut rng, n_states, n_actions, opts.n_quantiles)
        };
        let report = check_drift_bound(&mdp, &plan, &z0, &policy, 1e-8, 1e-11, 500_000)
            .context("drift bound check")?;
        reports.push(report.to_check(mdp_seed));
    }

    let all_pass = reports.iter().all(|r| r.pass);
    let mut file = std::fs::File::create(out_dir.join("verify_report.ndjson"))?;
    for report in &reports {
        writeln!(file, "{}", serde_json::to_string(report)?)?;
    }

    Ok(BatteryOutcome { reports, all_pass })
}

pub fn print_summary(outcome: &BatteryOutcome) {
    for r in &outcome.reports {
        let detail = match (r.max_ratio, r.max_slack) {
            (Some(ratio), _) => format!("max_ratio={ratio:.6}"),
            (_, Some(slack)) => format!("max_slack={slack:.3e}"),
            _ => String::new(),
        };
        println!(
            "{} seed={} trials={} {} {}",
            if r.pass { "PASS" } else { "FAIL" },
            r.mdp_seed,
            r.trials,
            r.check,
            detail
        );
    }
    let failed = outcome.reports.iter().filter(|r| !r.pass).count();
    println!(
        "{}/{} checks passed",
        outcome.reports.len() - failed,
        outcome.reports.len()
    );
}
