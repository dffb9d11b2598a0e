//! Correctness machinery: history recording, the linearizability checker
//! and deterministic fault injection at the construct's pause points.

mod checker;
mod history;
mod random;
mod schedule;

pub use checker::{check_linearizable, SetModel, Verdict};
pub use history::{read_history, write_history, EventKind, HistoryEvent, Recorder, SetOp};
pub use random::{random_ops, record_history};
pub use schedule::{
    run_with_schedule, FaultSchedule, InvariantReport, JitterHooks, PauseController, Resume,
    ScheduleEntry, ScheduleRun, WorkItem, Workload,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("malformed history: {0}")]
    Malformed(String),
    #[error("history too long for the brute-force checker ({0} operations, limit {max})", max = checker::MAX_OPS)]
    TooLong(usize),
    #[error("unknown pause point `{0}`")]
    UnknownPausePoint(String),
    #[error("bad schedule: {0}")]
    Schedule(String),
    #[error("configuration: {0}")]
    Config(#[from] cx_core::ConfigError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
