use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use roelab_cli::config::{load_config, ResolvedConfig};
use roelab_cli::runner::{evaluate, run_training, TrainOpts};
use roelab_cli::sweep::run_sweep;
use roelab_cli::verify::{print_summary, run_battery, VerifyOptions};
use roelab_core::learner::read_checkpoint;
use roelab_core::quantile::RiskInterval;

/// Tabular distributional-RL experiment runner with risk-scheduled
/// exploration.
#[derive(Parser)]
#[command(name = "roelab", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one seeded training run and write NDJSON metrics.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Master seed for the run.
        #[arg(long)]
        seed: u64,
        /// Output directory (falls back to run.output_dir in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Also write a per-step trajectories.ndjson.
        #[arg(long)]
        dump_trajectories: bool,
    },
    /// Run the (policy, seed) cross product and aggregate a CSV summary.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// Output directory (falls back to run.output_dir in the config).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Parallel workers (0 = one per core).
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Run the operator verification battery; exit 0 iff every check passes.
    #[command(name = "verify-dp")]
    VerifyDp {
        #[arg(long, default_value_t = VerifyOptions::default().seed)]
        seed: u64,
        #[arg(long, default_value_t = VerifyOptions::default().trials)]
        trials: usize,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a checkpoint greedily and print mean/sd episode return.
    Eval {
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        episodes: usize,
        /// Evaluation seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Risk interval lower end (defaults to neutral [0, 1]).
        #[arg(long)]
        alpha: Option<f64>,
        /// Risk interval upper end.
        #[arg(long)]
        beta: Option<f64>,
    },
}

fn resolved_from(path: &std::path::Path) -> Result<ResolvedConfig> {
    load_config(path)?.resolve()
}

fn out_dir(flag: Option<PathBuf>, cfg: &ResolvedConfig) -> Result<PathBuf> {
    flag.or_else(|| cfg.output_dir.clone().map(PathBuf::from))
        .ok_or_else(|| anyhow::anyhow!("no output directory: pass --out or set run.output_dir"))
}

fn main() -> ExitCode {
    match run() {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn run() -> Result<ExitCode> {
    match Cli::parse().command {
        Command::Train {
            config,
            seed,
            out,
            dump_trajectories,
        } => {
            let cfg = resolved_from(&config)?;
            let out = out_dir(out, &cfg)?;
            let summary = run_training(&cfg, seed, &out, TrainOpts { dump_trajectories })?;
            println!(
                "train done: seed={seed} steps={} episodes={} out={}",
                summary.steps,
                summary.episodes,
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { config, out, jobs } => {
            let cfg = resolved_from(&config)?;
            let out = out_dir(out, &cfg)?;
            let outcome = run_sweep(&cfg, &out, jobs)?;
            println!(
                "sweep done: {} summary rows, {} failures, csv={}",
                outcome.rows.len(),
                outcome.failures.len(),
                outcome.csv_path.display()
            );
            for f in &outcome.failures {
                eprintln!("run failed: policy={} seed={}: {}", f.policy, f.seed, f.error);
            }
            Ok(if outcome.failures.is_empty() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::VerifyDp { seed, trials, out } => {
            let opts = VerifyOptions {
                seed,
                trials,
                ..VerifyOptions::default()
            };
            let outcome = run_battery(&opts, &out)?;
            print_summary(&outcome);
            Ok(if outcome.all_pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            })
        }
        Command::Eval {
            checkpoint,
            episodes,
            seed,
            alpha,
            beta,
        } => {
            let file = std::fs::File::open(&checkpoint)
                .with_context(|| format!("opening {}", checkpoint.display()))?;
            let (tables, meta) = read_checkpoint(std::io::BufReader::new(file))?;
            let cfg: roelab_cli::config::ExperimentConfig =
                serde_json::from_value(meta.config.clone())
                    .context("checkpoint embedded config")?;
            let cfg = cfg.resolve()?;
            let r = match (alpha, beta) {
                (None, None) => RiskInterval::NEUTRAL,
                (Some(a), Some(b)) => RiskInterval::new(a, b)?,
                _ => bail!("--alpha and --beta must be given together"),
            };
            let (mean, sd) = evaluate(&tables, meta.shared_table, &cfg, episodes, r, seed)?;
            println!(
                "eval: episodes={episodes} interval=[{},{}] mean_return={mean} sd_return={sd}",
                r.alpha(),
                r.beta()
            );
            Ok(ExitCode::SUCCESS)
        }
    }
}
