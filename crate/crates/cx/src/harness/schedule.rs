//! Deterministic fault injection at the construct's pause points.

use std::collections::{HashMap, HashSet};
use std::str::FromStr;
use std::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering::SeqCst};
use std::sync::{Arc, Condvar, Mutex};
use std::time::{Duration, Instant};

use cx_core::adapters::{SequentialSet, WaitFreeSet};
use cx_core::rwlock::LockSnapshot;
use cx_core::{Config, Hooks, PausePoint, ProbeReport, ReclaimStats};

use super::history::{HistoryEvent, Recorder, SetOp};
use super::HarnessError;

#[derive(Default)]
struct Ctl {
    armed: HashMap<(PausePoint, usize), usize>,
    paused: HashMap<usize, (PausePoint, Instant)>,
    release: HashSet<usize>,
    hits: HashMap<PausePoint, u64>,
    draining: bool,
}

/// Hook implementation that suspends armed threads until released.
#[derive(Default)]
pub struct PauseController {
    ctl: Mutex<Ctl>,
    cv: Condvar,
}

impl PauseController {
    pub fn new() -> Arc<Self> {
        Arc::new(Self::default())
    }

    /// The next time `tid` reaches `point`, it stops there.
    pub fn arm(&self, point: PausePoint, tid: usize) {
        *self.ctl.lock().unwrap().armed.entry((point, tid)).or_default() += 1;
    }

    pub fn is_paused(&self, tid: usize) -> bool {
        self.ctl.lock().unwrap().paused.contains_key(&tid)
    }

    pub fn paused_at(&self, tid: usize) -> Option<PausePoint> {
        self.ctl.lock().unwrap().paused.get(&tid).map(|p| p.0)
    }

    /// Blocks until `tid` is paused, or `timeout` passes.
    pub fn wait_paused(&self, tid: usize, timeout: Duration) -> bool {
        let deadline = Instant::now() + timeout;
        let mut g = self.ctl.lock().unwrap();
        while !g.paused.contains_key(&tid) {
            let now = Instant::now();
            if now >= deadline {
                return false;
            }
            g = self.cv.wait_timeout(g, deadline - now).unwrap().0;
        }
        true
    }

    pub fn release(&self, tid: usize) {
        let mut g = self.ctl.lock().unwrap();
        if g.paused.contains_key(&tid) {
            g.release.insert(tid);
            self.cv.notify_all();
        }
    }

    /// Releases every paused thread and makes future pause points no-ops.
    pub fn drain(&self) {
        let mut g = self.ctl.lock().unwrap();
        g.draining = true;
        g.armed.clear();
        let tids: Vec<usize> = g.paused.keys().copied().collect();
        g.release.extend(tids);
        self.cv.notify_all();
    }

    pub fn hits(&self, point: PausePoint) -> u64 {
        self.ctl.lock().unwrap().hits.get(&point).copied().unwrap_or(0)
    }

    fn paused_snapshot(&self) -> Vec<(usize, PausePoint, Instant)> {
        let g = self.ctl.lock().unwrap();
        g.paused.iter().map(|(&t, &(p, at))| (t, p, at)).collect()
    }
}

impl Hooks for PauseController {
    fn pause(&self, point: PausePoint, tid: usize) {
        let mut g = self.ctl.lock().unwrap();
        *g.hits.entry(point).or_default() += 1;
        if g.draining {
            return;
        }
        let key = (point, tid);
        match g.armed.get_mut(&key) {
            Some(n) if *n > 0 => {
                *n -= 1;
                if *n == 0 {
                    g.armed.remove(&key);
                }
            }
            _ => return,
        }
        g.paused.insert(tid, (point, Instant::now()));
        self.cv.notify_all();
        while !g.release.remove(&tid) {
            g = self.cv.wait(g).unwrap();
        }
        g.paused.remove(&tid);
        self.cv.notify_all();
    }
}

/// Yields the processor at pause points with probability `1/every`, to
/// shake out interleavings on machines with few cores.
pub struct JitterHooks {
    state: AtomicU64,
    every: u64,
}

impl JitterHooks {
    pub fn new(seed: u64, every: u64) -> Self {
        Self {
            state: AtomicU64::new(seed | 1),
            every: every.max(1),
        }
    }
}

impl Hooks for JitterHooks {
    fn pause(&self, _point: PausePoint, _tid: usize) {
        // xorshift; races between threads only perturb the sequence
        let mut x = self.state.load(SeqCst);
        x ^= x << 13;
        x ^= x >> 7;
        x ^= x << 17;
        self.state.store(x, SeqCst);
        if x.is_multiple_of(self.every) {
            std::thread::yield_now();
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Resume {
    /// Never resumed during the run: the thread counts as dead.
    Never,
    /// Once `worker` has completed `ops` operations.
    AfterOps { worker: usize, ops: usize },
    /// After being paused this long.
    After(Duration),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct ScheduleEntry {
    pub point: PausePoint,
    pub tid: usize,
    pub resume: Resume,
}

impl ScheduleEntry {
    pub fn new(point: &str, tid: usize, resume: Resume) -> Result<Self, HarnessError> {
        let point = PausePoint::from_str(point).map_err(|_| HarnessError::UnknownPausePoint(point.to_string()))?;
        Ok(Self { point, tid, resume })
    }
}

#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct FaultSchedule {
    pub entries: Vec<ScheduleEntry>,
}

impl FaultSchedule {
    pub fn new(entries: Vec<ScheduleEntry>) -> Self {
        Self { entries }
    }
}

impl FromStr for FaultSchedule {
    type Err = HarnessError;

    /// One entry per line: `<pause-point> <tid> never|after-ops <worker> <n>|after-ms <ms>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut entries = Vec::new();
        for line in s.lines().map(str::trim).filter(|l| !l.is_empty() && !l.starts_with('#')) {
            let f: Vec<&str> = line.split_whitespace().collect();
            let bad = || HarnessError::Schedule(format!("cannot parse `{line}`"));
            let num = |i: usize| f.get(i).and_then(|x| x.parse::<u64>().ok()).ok_or_else(bad);
            let resume = match f.get(2).copied() {
                Some("never") => Resume::Never,
                Some("after-ops") => Resume::AfterOps {
                    worker: num(3)? as usize,
                    ops: num(4)? as usize,
                },
                Some("after-ms") => Resume::After(Duration::from_millis(num(3)?)),
                _ => return Err(bad()),
            };
            entries.push(ScheduleEntry::new(f[0], num(1)? as usize, resume)?);
        }
        Ok(Self { entries })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WorkItem {
    Op(SetOp, u64),
    /// Wait until the given worker is paused.
    AwaitPaused(usize),
    /// Wait until the given worker has completed this many operations.
    AwaitOps(usize, usize),
}

/// One list of items per worker; worker `i` runs as thread id `i`.
#[derive(Clone, Debug, Default)]
pub struct Workload {
    pub workers: Vec<Vec<WorkItem>>,
}

#[derive(Clone, Debug, Default)]
pub struct InvariantReport {
    pub probes: ProbeReport,
    pub reclaim: ReclaimStats,
    /// Most slots seen held at once by the orchestrator's sampling.
    pub max_slots_held: usize,
}

impl InvariantReport {
    pub fn violations(&self) -> u64 {
        self.probes.violations() + self.reclaim.uaf_detected
    }
}

#[derive(Clone, Debug)]
pub struct ScheduleRun {
    pub history: Vec<HistoryEvent>,
    pub report: InvariantReport,
    /// Paused with `Resume::Never` when the run ended.
    pub dead: Vec<usize>,
    /// Neither finished nor dead when the deadline passed.
    pub timed_out: Vec<usize>,
    pub completed_ops: Vec<usize>,
}

fn held(states: &[LockSnapshot]) -> usize {
    states.iter().filter(|s| s.is_held()).count()
}

/// Runs `workload` on a fresh set, pausing threads as `schedule` says.
/// The run ends when every worker has finished or is dead, or after
/// `deadline`; the history and report are captured at that instant.
pub fn run_with_schedule<S: SequentialSet>(
    initial: S,
    config: Config,
    workload: &Workload,
    schedule: &FaultSchedule,
    deadline: Duration,
) -> Result<ScheduleRun, HarnessError> {
    let n = workload.workers.len();
    if n > config.max_threads {
        return Err(HarnessError::Schedule(format!(
            "{n} workers but max_threads = {}",
            config.max_threads
        )));
    }
    for e in &schedule.entries {
        if e.tid >= n {
            return Err(HarnessError::Schedule(format!("entry for unknown worker {}", e.tid)));
        }
    }
    let ctl = PauseController::new();
    let set = WaitFreeSet::new(initial, config.hooks(ctl.clone()))?;
    for e in &schedule.entries {
        ctl.arm(e.point, e.tid);
    }
    let rec = Recorder::new();
    let done: Vec<AtomicUsize> = (0..n).map(|_| AtomicUsize::new(0)).collect();
    let finished: Vec<AtomicBool> = (0..n).map(|_| AtomicBool::new(false)).collect();
    let stop = AtomicBool::new(false);
    let handles: Vec<_> = (0..n).map(|_| set.register().expect("thread id")).collect();

    let mut run = None;
    std::thread::scope(|s| {
        for (w, h) in handles.into_iter().enumerate() {
            assert_eq!(h.tid(), w);
            let (rec, done, finished, stop, ctl) = (&rec, &done, &finished, &stop, &ctl);
            let items = &workload.workers[w];
            s.spawn(move || {
                for item in items {
                    if stop.load(SeqCst) {
                        break;
                    }
                    match *item {
                        WorkItem::Op(op, key) => {
                            rec.invoke(w, op, key);
                            let r = match op {
                                SetOp::Add => h.add(key),
                                SetOp::Remove => h.remove(key),
                                SetOp::Contains => h.contains(key),
                            };
                            rec.respond(w, op, key, r);
                            done[w].fetch_add(1, SeqCst);
                        }
                        WorkItem::AwaitPaused(other) => {
                            while !stop.load(SeqCst) && !ctl.wait_paused(other, Duration::from_millis(5)) {}
                        }
                        WorkItem::AwaitOps(other, ops) => {
                            while !stop.load(SeqCst) && done[other].load(SeqCst) < ops {
                                std::thread::sleep(Duration::from_micros(200));
                            }
                        }
                    }
                }
                finished[w].store(true, SeqCst);
            });
        }

        let start = Instant::now();
        let mut consumed = vec![false; schedule.entries.len()];
        let mut max_held = 0;
        let mut dead = Vec::new();
        loop {
            let paused = ctl.paused_snapshot();
            dead.clear();
            for &(tid, point, since) in &paused {
                let Some(i) = (0..schedule.entries.len())
                    .find(|&i| !consumed[i] && schedule.entries[i].tid == tid && schedule.entries[i].point == point)
                else {
                    continue;
                };
                let go = match schedule.entries[i].resume {
                    Resume::Never => {
                        dead.push(tid);
                        false
                    }
                    Resume::AfterOps { worker, ops } => done[worker].load(SeqCst) >= ops,
                    Resume::After(d) => since.elapsed() >= d,
                };
                if go {
                    consumed[i] = true;
                    ctl.release(tid);
                }
            }
            max_held = max_held.max(held(&set.construct().slot_states()));
            let settled = (0..n).all(|w| finished[w].load(SeqCst) || dead.contains(&w));
            if settled || start.elapsed() >= deadline {
                break;
            }
            std::thread::sleep(Duration::from_micros(500));
        }
        rec.freeze();
        let cx = set.construct();
        let report = InvariantReport {
            probes: cx.probe_report(),
            reclaim: cx.reclaim_stats(),
            max_slots_held: max_held,
        };
        dead.sort_unstable();
        let timed_out = (0..n)
            .filter(|w| !finished[*w].load(SeqCst) && !dead.contains(w))
            .collect();
        run = Some(ScheduleRun {
            history: rec.events(),
            report,
            dead,
            timed_out,
            completed_ops: done.iter().map(|d| d.load(SeqCst)).collect(),
        });
        stop.store(true, SeqCst);
        ctl.drain();
    });
    Ok(run.unwrap())
}
