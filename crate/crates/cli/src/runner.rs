//! Single training runs: seeded RNG streams, the warmup-then-learn loop,
//! periodic greedy evaluation, and deterministic NDJSON outputs.

use std::path::Path;
use std::time::Instant;

use anyhow::{Context, Result};
use rand::RngCore;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;

use roelab_core::envs::mix_seed;
use roelab_core::learner::{greedy_action, write_checkpoint, CheckpointMeta, QTable, Trainer};
use roelab_core::quantile::RiskInterval;

use crate::config::{EnvKind, ResolvedConfig};
use crate::metrics::{
    CaptureCounts, EvalRow, FileHeader, MetricRow, NdjsonWriter, TimingRow, TrajectoryRow,
    SCHEMA_VERSION,
};

/// Independent RNG streams split from the master seed, one per component, so
/// adding or removing consumers of one stream never perturbs the others.
pub struct RngStreams {
    pub episode_seeds: ChaCha12Rng,
    pub policy: ChaCha12Rng,
    pub learner: ChaCha12Rng,
    pub eval: ChaCha12Rng,
}

impl RngStreams {
    pub fn from_master(master: u64) -> Self {
        Self {
            episode_seeds: ChaCha12Rng::seed_from_u64(mix_seed(master, 1)),
            policy: ChaCha12Rng::seed_from_u64(mix_seed(master, 2)),
            learner: ChaCha12Rng::seed_from_u64(mix_seed(master, 3)),
            eval: ChaCha12Rng::seed_from_u64(mix_seed(master, 4)),
        }
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOpts {
    pub dump_trajectories: bool,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub episodes: u64,
    pub steps: u64,
    pub final_eval_neutral_mean: Option<f64>,
}

/// Runs one seeded training run, writing `resolved_config.toml`,
/// `metrics.ndjson`, `evals.ndjson`, `checkpoint.ndjson`, `timing.ndjson`
/// (and optionally `trajectories.ndjson`) into `out_dir`.
pub fn run_training(
    cfg: &ResolvedConfig,
    seed: u64,
    out_dir: &Path,
    opts: TrainOpts,
) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir)
        .with_context(|| format!("creating {}", out_dir.display()))?;
    std::fs::write(out_dir.join("resolved_config.toml"), cfg.echo_toml())?;

    let config_json = cfg.as_json();
    let header = |kind: &str| FileHeader {
        v: SCHEMA_VERSION,
        kind: kind.to_string(),
        run_seed: seed,
        config: config_json.clone(),
    };
    let mut metrics = NdjsonWriter::create(&out_dir.join("metrics.ndjson"), &header("metrics"))?;
    let mut evals = NdjsonWriter::create(&out_dir.join("evals.ndjson"), &header("evals"))?;
    let mut timing = NdjsonWriter::create(&out_dir.join("timing.ndjson"), &header("timing"))?;
    let mut trajectories = if opts.dump_trajectories {
        Some(NdjsonWriter::create(
            &out_dir.join("trajectories.ndjson"),
            &header("trajectories"),
        )?)
    } else {
        None
    };

    let mut streams = RngStreams::from_master(seed);
    let mut env = cfg.env.build()?;
    let policy = cfg.policy.build()?;
    let mut trainer = Trainer::new(cfg.learner.clone(), env.n_agents(), env.n_actions())?;
    let is_grid = cfg.env.kind() == EnvKind::PredatorPrey;

    let started = Instant::now();
    let mut t: u64 = 0;
    let mut episode: u64 = 0;
    let mut last_eval_neutral = None;

    'run: while t < cfg.total_steps {
        let obs = env.reset(streams.episode_seeds.next_u64())?;
        trainer.begin_episode(obs);
        let mut ep_return = 0.0;
        let mut ep_len = 0u64;
        let mut ep_loss_sum = 0.0;
        let mut ep_updates = 0usize;
        let mut captures = CaptureCounts {
            pair: 0,
            solo: 0,
            hare: 0,
        };
        loop {
            let warmup = t < cfg.warmup_steps;
            // The schedule clock starts when learned action selection does.
            let t_policy = t.saturating_sub(cfg.warmup_steps);
            let stats = trainer.train_step(
                env.as_mut(),
                &policy,
                t_policy,
                warmup,
                &mut streams.policy,
                &mut streams.learner,
            )?;
            t += 1;
            ep_len += 1;
            ep_return += stats.reward;
            ep_loss_sum += stats.mean_loss * stats.updates as f64;
            ep_updates += stats.updates;
            captures.pair += stats.info.pair_captures;
            captures.solo += stats.info.solo_captures;
            captures.hare += stats.info.hare_captures;
            if let Some(w) = trajectories.as_mut() {
                w.write(&TrajectoryRow {
                    t,
                    actions: stats.actions.clone(),
                    reward: stats.reward,
                    captures: CaptureCounts {
                        pair: stats.info.pair_captures,
                        solo: stats.info.solo_captures,
                        hare: stats.info.hare_captures,
                    },
                    rng_draws_consumed: stats.info.rng_draws_consumed,
                })?;
            }

            if t.is_multiple_of(cfg.eval_every) && cfg.eval_episodes > 0 {
                let r = policy.interval_at(t.saturating_sub(cfg.warmup_steps));
                let row = run_eval_point(cfg, &trainer, r, seed, t, &mut streams.eval)?;
                last_eval_neutral = Some(row.neutral_mean_return);
                evals.write(&row)?;
            }

            let done = stats.done;
            if done || t >= cfg.total_steps {
                if done {
                    let t_policy = t.saturating_sub(cfg.warmup_steps).saturating_sub(1);
                    let sig = policy.signal(t_policy);
                    metrics.write(&MetricRow {
                        v: SCHEMA_VERSION,
                        run_seed: seed,
                        t,
                        episode,
                        episode_return: ep_return,
                        episode_len: ep_len,
                        epsilon: sig.epsilon,
                        alpha: sig.alpha,
                        beta: sig.beta,
                        bonus_scale: sig.bonus_scale,
                        buffer_size: stats.buffer_transitions,
                        mean_loss: if ep_updates > 0 {
                            ep_loss_sum / ep_updates as f64
                        } else {
                            0.0
                        },
                        pair_captures: is_grid.then_some(captures.pair),
                        solo_captures: is_grid.then_some(captures.solo),
                        hare_captures: is_grid.then_some(captures.hare),
                    })?;
                    timing.write(&TimingRow {
                        t,
                        episode,
                        wall_clock_ms: started.elapsed().as_millis() as u64,
                    })?;
                    episode += 1;
                }
                if t >= cfg.total_steps {
                    break 'run;
                }
                break;
            }
        }
    }

    let meta = CheckpointMeta {
        v: SCHEMA_VERSION,
        kind: "qtable".to_string(),
        run_seed: seed,
        n_agents: env.n_agents(),
        n_actions: env.n_actions(),
        n_quantiles: cfg.learner.n_quantiles,
        initial_value: cfg.learner.initial_value,
        shared_table: cfg.learner.shared_table,
        config: config_json,
    };
    let file = std::fs::File::create(out_dir.join("checkpoint.ndjson"))?;
    write_checkpoint(std::io::BufWriter::new(file), trainer.tables(), &meta)?;

    Ok(RunSummary {
        episodes: episode,
        steps: t,
        final_eval_neutral_mean: last_eval_neutral,
    })
}

fn run_eval_point(
    cfg: &ResolvedConfig,
    trainer: &Trainer,
    scheduled: RiskInterval,
    seed: u64,
    t: u64,
    eval_rng: &mut ChaCha12Rng,
) -> Result<EvalRow> {
    let tables: Vec<&QTable> = (0..trainer_table_count(cfg, trainer))
        .map(|i| &trainer.tables()[i])
        .collect();
    let shared = cfg.learner.shared_table;
    let eval_seed = eval_rng.next_u64();
    let (mean, sd) = evaluate_tables(&tables, shared, cfg, cfg.eval_episodes, scheduled, eval_seed)?;
    let eval_seed_neutral = eval_rng.next_u64();
    let (nmean, nsd) = evaluate_tables(
        &tables,
        shared,
        cfg,
        cfg.eval_episodes,
        RiskInterval::NEUTRAL,
        eval_seed_neutral,
    )?;
    Ok(EvalRow {
        v: SCHEMA_VERSION,
        run_seed: seed,
        t,
        alpha: scheduled.alpha(),
        beta: scheduled.beta(),
        mean_return: mean,
        sd_return: sd,
        neutral_mean_return: nmean,
        neutral_sd_return: nsd,
        episodes: cfg.eval_episodes,
    })
}

fn trainer_table_count(cfg: &ResolvedConfig, trainer: &Trainer) -> usize {
    debug_assert!(!trainer.tables().is_empty());
    if cfg.learner.shared_table {
        1
    } else {
        trainer.tables().len()
    }
}

/// Greedy episodes (no exploration noise) at interval `r` on a fresh
/// environment instance; returns mean and population standard deviation of
/// the episode return. Never writes to the tables.
pub fn evaluate_tables(
    tables: &[&QTable],
    shared_table: bool,
    cfg: &ResolvedConfig,
    episodes: usize,
    r: RiskInterval,
    seed: u64,
) -> Result<(f64, f64)> {
    let mut env = cfg.env.build()?;
    let n_agents = env.n_agents();
    let mut rng = ChaCha12Rng::seed_from_u64(mix_seed(seed, 0x5EED));
    let mut returns = Vec::with_capacity(episodes);
    for _ in 0..episodes {
        let mut obs = env.reset(rng.next_u64())?;
        let mut ep_return = 0.0;
        loop {
            let actions: Vec<usize> = (0..n_agents)
                .map(|agent| {
                    let table = tables[if shared_table { 0 } else { agent }];
                    greedy_action(table, &obs[agent], r, &mut rng)
                })
                .collect();
            let res = env.step(&actions)?;
            ep_return += res.team_reward;
            obs = res.observations;
            if res.done {
                break;
            }
        }
        returns.push(ep_return);
    }
    Ok(mean_sd(&returns))
}

/// Convenience wrapper over loaded checkpoints (used by the `eval`
/// subcommand): evaluates owned tables.
pub fn evaluate(
    tables: &[QTable],
    shared_table: bool,
    cfg: &ResolvedConfig,
    episodes: usize,
    r: RiskInterval,
    seed: u64,
) -> Result<(f64, f64)> {
    let refs: Vec<&QTable> = tables.iter().collect();
    evaluate_tables(&refs, shared_table, cfg, episodes, r, seed)
}

pub fn mean_sd(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}

