//! NDJSON output records. Every file starts with a header line embedding the
//! resolved configuration; one JSON object per line, UTF-8, LF.
//!
//! Wall-clock timings are deliberately kept out of the metric and eval rows —
//! they go to a separate `timing.ndjson` sidecar so the primary outputs stay
//! byte-identical across re-runs of the same (config, seed).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use anyhow::Result;
use serde::{Deserialize, Serialize};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileHeader {
    pub v: u32,
    pub kind: String,
    pub run_seed: u64,
    pub config: serde_json::Value,
}

/// One row per completed episode.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricRow {
    pub v: u32,
    pub run_seed: u64,
    /// Environment steps completed when the episode ended.
    pub t: u64,
    pub episode: u64,
    pub episode_return: f64,
    pub episode_len: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub epsilon: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bonus_scale: Option<f64>,
    pub buffer_size: usize,
    pub mean_loss: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pair_captures: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub solo_captures: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hare_captures: Option<u64>,
}

/// One row per evaluation point: greedy performance at the scheduled
/// interval, with a risk-neutral evaluation always logged alongside.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvalRow {
    pub v: u32,
    pub run_seed: u64,
    pub t: u64,
    pub alpha: f64,
    pub beta: f64,
    pub mean_return: f64,
    pub sd_return: f64,
    pub neutral_mean_return: f64,
    pub neutral_sd_return: f64,
    pub episodes: usize,
}

/// One row per environment step when trajectory dumping is enabled.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrajectoryRow {
    pub t: u64,
    pub actions: Vec<usize>,
    pub reward: f64,
    pub captures: CaptureCounts,
    pub rng_draws_consumed: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CaptureCounts {
    pub pair: u64,
    pub solo: u64,
    pub hare: u64,
}

/// Non-deterministic sidecar row.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TimingRow {
    pub t: u64,
    pub episode: u64,
    pub wall_clock_ms: u64,
}

pub struct NdjsonWriter {
    inner: BufWriter<File>,
}

impl NdjsonWriter {
    pub fn create(path: &Path, header: &FileHeader) -> Result<Self> {
        let file = File::create(path)?;
        let mut w = Self {
            inner: BufWriter::new(file),
        };
        w.write(header)?;
        Ok(w)
    }

    /// One record per line, flushed immediately so partial output stays
    /// valid NDJSON.
    pub fn write<T: Serialize>(&mut self, record: &T) -> Result<()> {
        serde_json::to_writer(&mut self.inner, record)?;
        self.inner.write_all(b"\n")?;
        self.inner.flush()?;
        Ok(())
    }
}

/// Reads the header and typed rows back from an NDJSON file.
pub fn read_ndjson<T: serde::de::DeserializeOwned>(
    path: &Path,
) -> Result<(FileHeader, Vec<T>)> {
    let text = std::fs::read_to_string(path)?;
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header: FileHeader = serde_json::from_str(
        lines
            .next()
            .ok_or_else(|| anyhow::anyhow!("empty NDJSON file {}", path.display()))?,
    )?;
    let mut rows = Vec::new();
    for line in lines {
        rows.push(serde_json::from_str(line)?);
    }
    Ok((header, rows))
}
