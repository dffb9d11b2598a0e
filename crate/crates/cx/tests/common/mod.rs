//! Scenarios shared by the schedule tests and the acceptance suite.
#![allow(dead_code)]

use std::sync::Arc;
use std::time::Duration;

use cx::core::adapters::AvlSet;
use cx::core::Config;
use cx::harness::{
    run_with_schedule, FaultSchedule, Resume, ScheduleEntry, ScheduleRun, SetOp, WorkItem, Workload,
};
use cx::StdPlatform;

pub fn config(threads: usize, slots: usize) -> Config {
    Config::new(threads)
        .max_objs(slots)
        .probes(true)
        .tracking(true)
        .platform(Arc::new(StdPlatform))
}

fn add(k: u64) -> WorkItem {
    WorkItem::Op(SetOp::Add, k)
}

/// Three writers park before their curComb CAS, each holding an exclusive
/// slot and a shared hold on the slot that was current when it got there.
/// Worker 3 keeps updating between the stalls.
pub fn stalled_writers() -> ScheduleRun {
    use WorkItem::*;
    let workload = Workload {
        workers: vec![
            vec![add(1)],
            vec![AwaitOps(3, 1), add(2)],
            vec![AwaitOps(3, 2), add(3)],
            vec![AwaitPaused(0), add(10), AwaitPaused(1), add(11), AwaitPaused(2), add(12), add(13)],
        ],
    };
    let schedule = FaultSchedule::new(
        (0..3)
            .map(|t| ScheduleEntry::new("before-curcomb-cas", t, Resume::Never).unwrap())
            .collect(),
    );
    run_with_schedule(AvlSet::default(), config(4, 8), &workload, &schedule, Duration::from_secs(10)).unwrap()
}

/// Two slots, and the one writer that holds both is parked forever.
/// Worker 1 tries an update; worker 2 issues `reads` lookups.
pub fn blocked_update_with_readers(reads: usize, deadline: Duration) -> ScheduleRun {
    use WorkItem::*;
    let mut reader = vec![AwaitPaused(0)];
    reader.extend((0..reads).map(|i| Op(SetOp::Contains, i as u64 % 4)));
    let workload = Workload {
        workers: vec![vec![add(1)], vec![AwaitPaused(0), add(2)], reader],
    };
    let schedule = FaultSchedule::new(vec![ScheduleEntry::new("before-curcomb-cas", 0, Resume::Never).unwrap()]);
    run_with_schedule(AvlSet::default(), config(3, 2), &workload, &schedule, deadline).unwrap()
}

/// Worker 0 stops after applying its node and downgrading; worker 1 then
/// applies the same node on another slot before worker 0 resumes.
pub fn shared_application() -> ScheduleRun {
    use WorkItem::*;
    let workload = Workload {
        workers: vec![vec![add(1), add(3)], vec![AwaitPaused(0), add(2), Op(SetOp::Contains, 1)]],
    };
    let schedule = FaultSchedule::new(vec![ScheduleEntry::new(
        "after-downgrade",
        0,
        Resume::AfterOps { worker: 1, ops: 1 },
    )
    .unwrap()]);
    run_with_schedule(AvlSet::default(), config(2, 4), &workload, &schedule, Duration::from_secs(10)).unwrap()
}
