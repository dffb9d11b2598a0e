use std::sync::atomic::{AtomicU8, Ordering::Relaxed};
use std::sync::Barrier;
use std::time::{Duration, Instant};

use rand::rngs::SmallRng;
use rand::{Rng, SeedableRng};

use super::sets::{build, SharedSet};
use super::{BenchConfig, BenchError, BenchResult, Mode, RunRecord};
use crate::alloc;

const WARMUP: u8 = 0;
const MEASURE: u8 = 1;
const STOP: u8 = 2;

/// Everything observed in one run. Counts cover the measured window only.
#[derive(Clone, Debug, PartialEq)]
pub struct RunStats {
    pub ops_per_sec: f64,
    pub peak_bytes: Option<u64>,
    pub ops: u64,
    /// Operations that chose the update branch.
    pub updates: u64,
    /// Updates whose remove succeeded (and were followed by a re-add).
    pub removes_hit: u64,
    pub lookups_hit: u64,
    pub measured: Duration,
    pub final_len: usize,
}

impl RunStats {
    pub fn update_fraction(&self) -> f64 {
        if self.ops == 0 {
            0.0
        } else {
            self.updates as f64 / self.ops as f64
        }
    }
}

#[derive(Default, Clone, Copy)]
struct Counts {
    ops: u64,
    updates: u64,
    removes_hit: u64,
    lookups_hit: u64,
}

fn worker(set: &dyn SharedSet, cfg: &BenchConfig, tid: usize, phase: &AtomicU8, ready: &Barrier) -> Counts {
    let s = set.session();
    let mut rng = SmallRng::seed_from_u64(cfg.seed.wrapping_add(tid as u64));
    let ratio = cfg.effective_update_ratio();
    let mut c = Counts::default();
    let mut at_start = None;
    ready.wait();
    loop {
        match phase.load(Relaxed) {
            STOP => break,
            MEASURE if at_start.is_none() => at_start = Some(c),
            _ => {}
        }
        let key = rng.gen_range(0..cfg.keys);
        if rng.gen_range(0..100) < ratio {
            c.updates += 1;
            if s.remove(key) {
                c.removes_hit += 1;
                s.add(key);
            }
        } else if s.contains(key) {
            c.lookups_hit += 1;
        }
        c.ops += 1;
    }
    let a = at_start.unwrap_or(c);
    Counts {
        ops: c.ops - a.ops,
        updates: c.updates - a.updates,
        removes_hit: c.removes_hit - a.removes_hit,
        lookups_hit: c.lookups_hit - a.lookups_hit,
    }
}

/// One run of `cfg`: build and prefill, warm up for a tenth of the
/// duration, then measure the rest.
pub fn run_once(cfg: &BenchConfig, run: usize) -> Result<RunStats, BenchError> {
    cfg.validate()?;
    let memory = cfg.mode == Mode::Memory;
    if memory && !alloc::is_active() {
        return Err(BenchError::NoTracker);
    }
    let cfg = BenchConfig {
        seed: cfg.seed.wrapping_add((run as u64) << 32),
        ..cfg.clone()
    };
    let baseline = alloc::current_bytes();
    alloc::reset_peak();

    let set = build(&cfg)?;
    let phase = AtomicU8::new(WARMUP);
    let ready = Barrier::new(cfg.threads + 1);
    let warmup = cfg.duration / 10;
    let (counts, measured) = std::thread::scope(|sc| {
        let workers: Vec<_> = (0..cfg.threads)
            .map(|tid| {
                let (set, cfg, phase, ready) = (&*set, &cfg, &phase, &ready);
                sc.spawn(move || worker(set, cfg, tid, phase, ready))
            })
            .collect();
        ready.wait();
        std::thread::sleep(warmup);
        phase.store(MEASURE, Relaxed);
        let t = Instant::now();
        std::thread::sleep(cfg.duration - warmup);
        phase.store(STOP, Relaxed);
        let measured = t.elapsed();
        let mut total = Counts::default();
        for w in workers {
            let c = w.join().expect("bench worker panicked");
            total.ops += c.ops;
            total.updates += c.updates;
            total.removes_hit += c.removes_hit;
            total.lookups_hit += c.lookups_hit;
        }
        (total, measured)
    });
    let peak = alloc::peak_bytes().saturating_sub(baseline) as u64;
    let final_len = set.len();
    drop(set);

    Ok(RunStats {
        ops_per_sec: counts.ops as f64 / measured.as_secs_f64(),
        peak_bytes: memory.then_some(peak),
        ops: counts.ops,
        updates: counts.updates,
        removes_hit: counts.removes_hit,
        lookups_hit: counts.lookups_hit,
        measured,
        final_len,
    })
}

fn run_all(cfg: &BenchConfig) -> Result<BenchResult, BenchError> {
    cfg.validate()?;
    let runs = (0..cfg.runs)
        .map(|r| {
            run_once(cfg, r).map(|s| RunRecord {
                ops_per_sec: s.ops_per_sec,
                peak_bytes: s.peak_bytes,
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(BenchResult::from_runs(cfg, runs))
}

/// Throughput mode: the median over an odd number of runs.
pub fn run_throughput(cfg: &BenchConfig) -> Result<BenchResult, BenchError> {
    run_all(&BenchConfig {
        mode: Mode::Throughput,
        ..cfg.clone()
    })
}

/// Memory mode: all updates, peak bytes above the pre-build baseline, the
/// maximum over the runs.
pub fn run_memory(cfg: &BenchConfig) -> Result<BenchResult, BenchError> {
    run_all(&BenchConfig {
        mode: Mode::Memory,
        ..cfg.clone()
    })
}

pub fn run(cfg: &BenchConfig) -> Result<BenchResult, BenchError> {
    run_all(cfg)
}
