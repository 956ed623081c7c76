//! Multi-seed, multi-policy sweeps: runs the (policy, seed) cross product in
//! parallel, then aggregates per-policy training curves — mean and 25–75
//! percentile bands of the binned episode returns — into a CSV summary.
//!
//! Aggregation re-reads the raw per-run `metrics.ndjson` files rather than
//! reusing in-memory state, so the summary is recomputable from the run
//! artifacts alone.

use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use crate::config::ResolvedConfig;
use crate::metrics::{read_ndjson, MetricRow};
use crate::runner::{run_training, TrainOpts};

#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub policy: String,
    pub t: u64,
    pub n_runs: usize,
    pub mean_return: f64,
    pub p25_return: f64,
    pub p75_return: f64,
}

#[derive(Debug, Clone)]
pub struct RunFailure {
    pub policy: String,
    pub seed: u64,
    pub error: String,
}

#[derive(Debug)]
pub struct SweepOutcome {
    pub rows: Vec<SummaryRow>,
    pub failures: Vec<RunFailure>,
    pub csv_path: PathBuf,
}

pub fn run_dir(out_dir: &Path, policy: &str, seed: u64) -> PathBuf {
    out_dir.join(policy).join(format!("seed_{seed}"))
}

pub fn run_sweep(cfg: &ResolvedConfig, out_dir: &Path, jobs: usize) -> Result<SweepOutcome> {
    std::fs::create_dir_all(out_dir)?;
    let policies = cfg.sweep_grid();
    let mut work: Vec<(String, u64, ResolvedConfig)> = Vec::new();
    for policy in &policies {
        let label = policy.label();
        for &seed in &cfg.seeds {
            work.push((label.clone(), seed, cfg.with_policy(policy.clone())));
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs)
        .build()
        .context("building sweep thread pool")?;
    let results: Vec<Option<RunFailure>> = pool.install(|| {
        use rayon::prelude::*;
        work.par_iter()
            .map(|(label, seed, run_cfg)| {
                let dir = run_dir(out_dir, label, *seed);
                match run_training(run_cfg, *seed, &dir, TrainOpts::default()) {
                    Ok(_) => None,
                    Err(e) => Some(RunFailure {
                        policy: label.clone(),
                        seed: *seed,
                        error: format!("{e:#}"),
                    }),
                }
            })
            .collect()
    });
    let failures: Vec<RunFailure> = results.into_iter().flatten().collect();

    let mut rows = Vec::new();
    for policy in &policies {
        let label = policy.label();
        let mut runs: Vec<Vec<(u64, f64)>> = Vec::new();
        for &seed in &cfg.seeds {
            if failures.iter().any(|f| f.policy == label && f.seed == seed) {
                continue;
            }
            let path = run_dir(out_dir, &label, seed).join("metrics.ndjson");
            let (_, metric_rows): (_, Vec<MetricRow>) = read_ndjson(&path)
                .with_context(|| format!("reading {}", path.display()))?;
            runs.push(bin_returns(&metric_rows, cfg.eval_every, cfg.total_steps));
        }
        rows.extend(aggregate_policy(&label, &runs));
    }

    let csv_path = out_dir.join("summary.csv");
    write_summary_csv(&csv_path, &rows)?;
    if !failures.is_empty() {
        let mut text = String::from("policy,seed,error\n");
        for f in &failures {
            text.push_str(&format!(
                "{},{},{}\n",
                f.policy,
                f.seed,
                f.error.replace(['\n', ','], " ")
            ));
        }
        std::fs::write(out_dir.join("failures.csv"), text)?;
    }
    Ok(SweepOutcome {
        rows,
        failures,
        csv_path,
    })
}

/// Mean episode return per checkpoint bin `((k-1)·E, k·E]`; bins with no
/// completed episode carry the previous bin's value (and are skipped before
/// the first episode completes).
pub fn bin_returns(rows: &[MetricRow], eval_every: u64, total_steps: u64) -> Vec<(u64, f64)> {
    let n_bins = (total_steps / eval_every) as usize;
    let mut sums = vec![0.0; n_bins + 1];
    let mut counts = vec![0usize; n_bins + 1];
    for row in rows {
        let bin = (row.t.saturating_add(eval_every - 1) / eval_every) as usize;
        if bin <= n_bins {
            sums[bin] += row.episode_return;
            counts[bin] += 1;
        }
    }
    let mut out = Vec::new();
    let mut last: Option<f64> = None;
    for bin in 1..=n_bins {
        if counts[bin] > 0 {
            last = Some(sums[bin] / counts[bin] as f64);
        }
        if let Some(v) = last {
            out.push((bin as u64 * eval_every, v));
        }
    }
    out
}

fn aggregate_policy(label: &str, runs: &[Vec<(u64, f64)>]) -> Vec<SummaryRow> {
    use std::collections::BTreeMap;
    let mut by_t: BTreeMap<u64, Vec<f64>> = BTreeMap::new();
    for run in runs {
        for &(t, v) in run {
            by_t.entry(t).or_default().push(v);
        }
    }
    by_t
        .into_iter()
        .map(|(t, mut values)| {
            values.sort_by(|a, b| a.partial_cmp(b).unwrap());
            let mean = values.iter().sum::<f64>() / values.len() as f64;
            SummaryRow {
                policy: label.to_string(),
                t,
                n_runs: values.len(),
                mean_return: mean,
                p25_return: percentile(&values, 0.25),
                p75_return: percentile(&values, 0.75),
            }
        })
        .collect()
}

/// Linear-interpolation percentile on a sorted slice, `q` in [0, 1].
pub fn percentile(sorted: &[f64], q: f64) -> f64 {
    assert!(!sorted.is_empty());
    if sorted.len() == 1 {
        return sorted[0];
    }
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = pos - lo as f64;
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

fn write_summary_csv(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut text = String::from("policy,t,n_runs,mean_return,p25_return,p75_return\n");
    for r in rows {
        text.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.policy, r.t, r.n_runs, r.mean_return, r.p25_return, r.p75_return
        ));
    }
    std::fs::write(path, text)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn percentile_interpolates() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(percentile(&v, 0.0), 1.0);
        assert_eq!(percentile(&v, 1.0), 4.0);
        assert_eq!(percentile(&v, 0.5), 2.5);
        assert_eq!(percentile(&v, 0.25), 1.75);
    }

    #[test]
    fn percentile_of_identical_values_is_the_value() {
        let v = [7.0; 5];
        for q in [0.0, 0.25, 0.5, 0.75, 1.0] {
            assert_eq!(percentile(&v, q), 7.0);
        }
    }

    #[test]
    fn binning_carries_forward_sparse_bins() {
        let row = |t: u64, ret: f64| MetricRow {
            v: 1,
            run_seed: 0,
            t,
            episode: 0,
            episode_return: ret,
            episode_len: 1,
            epsilon: None,
            alpha: None,
            beta: None,
            bonus_scale: None,
            buffer_size: 0,
            mean_loss: 0.0,
            pair_captures: None,
            solo_captures: None,
            hare_captures: None,
        };
        // Episodes only in bins 1 and 3 of 4.
        let rows = vec![row(50, 1.0), row(90, 3.0), row(250, 5.0)];
        let binned = bin_returns(&rows, 100, 400);
        assert_eq!(
            binned,
            vec![(100, 2.0), (200, 2.0), (300, 5.0), (400, 5.0)]
        );
    }
}
