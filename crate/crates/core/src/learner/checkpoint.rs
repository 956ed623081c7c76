//! NDJSON table checkpoints.
//!
//! Line 1 is a header object carrying the metadata needed to rebuild and
//! evaluate the tables; every following line is one materialized
//! `(agent, obs_key, action)` entry with its quantile values. Keys are
//! base64-encoded observation bytes and rows are emitted in sorted
//! `(agent, key, action)` order, so the dump is byte-stable across platforms.

use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::QTable;
use crate::envs::ObservationKey;
use crate::quantile::QuantileDistribution;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub v: u32,
    pub kind: String,
    pub run_seed: u64,
    pub n_agents: usize,
    pub n_actions: usize,
    pub n_quantiles: usize,
    pub initial_value: f64,
    pub shared_table: bool,
    /// Resolved experiment configuration, embedded so a dump is usable on
    /// its own.
    pub config: Value,
}

#[derive(Serialize, Deserialize)]
struct EntryRow {
    agent: usize,
    obs: String,
    action: usize,
    visits: u64,
    q: Vec<f64>,
}

pub fn write_checkpoint<W: Write>(
    mut w: W,
    tables: &[QTable],
    meta: &CheckpointMeta,
) -> std::io::Result<()> {
    writeln!(w, "{}", serde_json::to_string(meta)?)?;
    for (agent, table) in tables.iter().enumerate() {
        for (key, action, visits, dist) in table.iter_sorted() {
            let row = EntryRow {
                agent,
                obs: key.to_base64(),
                action,
                visits,
                q: dist.values().to_vec(),
            };
            writeln!(w, "{}", serde_json::to_string(&row)?)?;
        }
    }
    Ok(())
}

pub fn read_checkpoint<R: BufRead>(r: R) -> std::io::Result<(Vec<QTable>, CheckpointMeta)> {
    let bad = |msg: String| std::io::Error::new(std::io::ErrorKind::InvalidData, msg);
    let mut lines = r.lines();
    let header = lines
        .next()
        .ok_or_else(|| bad("empty checkpoint".into()))??;
    let meta: CheckpointMeta =
        serde_json::from_str(&header).map_err(|e| bad(format!("bad header: {e}")))?;
    let n_tables = if meta.shared_table { 1 } else { meta.n_agents };
    let mut tables: Vec<QTable> = (0..n_tables)
        .map(|_| QTable::new(meta.n_actions, meta.n_quantiles, meta.initial_value))
        .collect();
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let row: EntryRow =
            serde_json::from_str(&line).map_err(|e| bad(format!("bad entry: {e}")))?;
        if row.agent >= n_tables {
            return Err(bad(format!("agent {} out of range", row.agent)));
        }
        let key = ObservationKey::from_base64(&row.obs)
            .ok_or_else(|| bad(format!("bad key {}", row.obs)))?;
        let dist = QuantileDistribution::new(row.q)
            .map_err(|e| bad(format!("bad quantiles: {e}")))?;
        if dist.n() != meta.n_quantiles {
            return Err(bad("quantile count mismatch".into()));
        }
        *tables[row.agent].distribution_mut(&key, row.action) = dist;
        for _ in 0..row.visits.saturating_sub(tables[row.agent].visits(&key)) {
            tables[row.agent].record_visit(&key);
        }
    }
    Ok((tables, meta))
}
