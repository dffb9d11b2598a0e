use std::io::{Read, Write};
use std::sync::atomic::{AtomicBool, AtomicU64, Ordering::SeqCst};
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EventKind {
    #[serde(rename = "inv")]
    Invocation,
    #[serde(rename = "res")]
    Response,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SetOp {
    Add,
    Remove,
    Contains,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct HistoryEvent {
    pub kind: EventKind,
    pub op: SetOp,
    pub key: u64,
    pub result: Option<bool>,
    pub tid: usize,
    pub ts: u64,
}

impl HistoryEvent {
    pub fn inv(tid: usize, op: SetOp, key: u64, ts: u64) -> Self {
        Self {
            kind: EventKind::Invocation,
            op,
            key,
            result: None,
            tid,
            ts,
        }
    }

    pub fn res(tid: usize, op: SetOp, key: u64, result: bool, ts: u64) -> Self {
        Self {
            kind: EventKind::Response,
            op,
            key,
            result: Some(result),
            tid,
            ts,
        }
    }
}

/// Thread-safe, append-only event log with a logical clock.
#[derive(Default)]
pub struct Recorder {
    clock: AtomicU64,
    events: Mutex<Vec<HistoryEvent>>,
    frozen: AtomicBool,
}

impl Recorder {
    pub fn new() -> Self {
        Self::default()
    }

    fn push(&self, mut ev: HistoryEvent) {
        let mut events = self.events.lock().unwrap();
        if self.frozen.load(SeqCst) {
            return;
        }
        ev.ts = self.clock.fetch_add(1, SeqCst);
        events.push(ev);
    }

    pub fn invoke(&self, tid: usize, op: SetOp, key: u64) {
        self.push(HistoryEvent::inv(tid, op, key, 0));
    }

    pub fn respond(&self, tid: usize, op: SetOp, key: u64, result: bool) {
        self.push(HistoryEvent::res(tid, op, key, result, 0));
    }

    /// Stops recording; later events are dropped.
    pub fn freeze(&self) {
        let _g = self.events.lock().unwrap();
        self.frozen.store(true, SeqCst);
    }

    pub fn events(&self) -> Vec<HistoryEvent> {
        self.events.lock().unwrap().clone()
    }
}

/// Writes one event per line: kind, op, key, result, tid, timestamp.
pub fn write_history<W: Write>(w: W, events: &[HistoryEvent]) -> Result<(), HarnessError> {
    let mut wr = csv::WriterBuilder::new().has_headers(false).from_writer(w);
    for ev in events {
        wr.serialize(ev)?;
    }
    wr.flush()?;
    Ok(())
}

pub fn read_history<R: Read>(r: R) -> Result<Vec<HistoryEvent>, HarnessError> {
    let mut rd = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(r);
    let mut out = Vec::new();
    for (line, rec) in rd.deserialize::<HistoryEvent>().enumerate() {
        let ev = rec.map_err(|e| HarnessError::Malformed(format!("line {}: {e}", line + 1)))?;
        match (ev.kind, ev.result) {
            (EventKind::Invocation, Some(_)) => {
                return Err(HarnessError::Malformed(format!("line {}: invocation carries a result", line + 1)))
            }
            (EventKind::Response, None) => {
                return Err(HarnessError::Malformed(format!("line {}: response without a result", line + 1)))
            }
            _ => out.push(ev),
        }
    }
    Ok(out)
}
