//! Experiment harness library behind the `roelab` binary: configuration
//! loading, seeded training runs with NDJSON metrics, multi-seed sweeps, and
//! the dynamic-programming verification battery.

pub mod config;
pub mod metrics;
pub mod runner;
pub mod sweep;
pub mod verify;
