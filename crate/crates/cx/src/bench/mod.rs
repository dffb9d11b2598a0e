//! Set microbenchmark: pre-filled set, workers flip a coin between a lookup
//! and an update (remove, then re-add if the remove succeeded).

mod config;
mod output;
mod runner;
mod sets;

pub use config::{BenchConfig, Impl, Mode, Structure};
pub use output::{emit_csv, parse_csv, write_csv};
pub use runner::{run, run_memory, run_once, run_throughput, RunStats};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("memory mode needs cx::alloc::TrackingAllocator installed as the global allocator")]
    NoTracker,
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("malformed results file: {0}")]
    Parse(String),
}

/// One measured run.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RunRecord {
    pub ops_per_sec: f64,
    pub peak_bytes: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchResult {
    pub implementation: Impl,
    pub structure: Structure,
    pub keys: u64,
    pub update_ratio: u32,
    pub threads: usize,
    pub runs: Vec<RunRecord>,
    /// Median of the per-run throughputs.
    pub ops_per_sec: f64,
    /// Highest per-run peak, in memory mode.
    pub peak_bytes: Option<u64>,
}

impl BenchResult {
    pub fn from_runs(cfg: &BenchConfig, runs: Vec<RunRecord>) -> Self {
        Self {
            implementation: cfg.implementation,
            structure: cfg.structure,
            keys: cfg.keys,
            update_ratio: cfg.effective_update_ratio(),
            threads: cfg.threads,
            ops_per_sec: median(runs.iter().map(|r| r.ops_per_sec).collect()),
            peak_bytes: runs.iter().filter_map(|r| r.peak_bytes).max(),
            runs,
        }
    }
}

/// Median; for an even count, the lower of the two middle values.
pub fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    v[(v.len() - 1) / 2]
}
