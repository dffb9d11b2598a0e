//! Wing–Gong style search for a legal sequential order, with memoisation on
//! (set of linearized operations, abstract state).

use std::collections::{BTreeMap, BTreeSet, HashSet};

use super::history::{EventKind, HistoryEvent, SetOp};
use super::HarnessError;

pub(crate) const MAX_OPS: usize = 128;

/// Sequential specification of a set of keys.
#[derive(Clone, Copy, Debug, Default)]
pub struct SetModel;

impl SetModel {
    pub fn apply(&self, state: &BTreeSet<u64>, op: SetOp, key: u64) -> (BTreeSet<u64>, bool) {
        let mut s = state.clone();
        let r = match op {
            SetOp::Add => s.insert(key),
            SetOp::Remove => s.remove(&key),
            SetOp::Contains => s.contains(&key),
        };
        (s, r)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Verdict {
    Linearizable,
    /// The shortest prefix of the (timestamp-ordered) history that already
    /// has no legal linearization.
    Violation { prefix: Vec<HistoryEvent> },
}

impl Verdict {
    pub fn is_linearizable(&self) -> bool {
        matches!(self, Verdict::Linearizable)
    }
}

#[derive(Clone, Debug)]
struct Call {
    op: SetOp,
    key: u64,
    inv: u64,
    // None while pending.
    res: Option<(u64, bool)>,
}

/// Pairs invocations with responses after checking well-formedness.
/// Returns the calls and the events sorted by timestamp.
fn pair(history: &[HistoryEvent]) -> Result<(Vec<Call>, Vec<HistoryEvent>), HarnessError> {
    let mut events = history.to_vec();
    events.sort_by_key(|e| e.ts);
    if events.windows(2).any(|w| w[0].ts == w[1].ts) {
        return Err(HarnessError::Malformed("duplicate timestamp".into()));
    }
    let mut open: BTreeMap<usize, usize> = BTreeMap::new();
    let mut calls = Vec::new();
    for ev in &events {
        match ev.kind {
            EventKind::Invocation => {
                if ev.result.is_some() {
                    return Err(HarnessError::Malformed(format!("invocation at ts {} carries a result", ev.ts)));
                }
                if open.contains_key(&ev.tid) {
                    return Err(HarnessError::Malformed(format!(
                        "thread {} invokes at ts {} with a call still open",
                        ev.tid, ev.ts
                    )));
                }
                open.insert(ev.tid, calls.len());
                calls.push(Call {
                    op: ev.op,
                    key: ev.key,
                    inv: ev.ts,
                    res: None,
                });
            }
            EventKind::Response => {
                let Some(i) = open.remove(&ev.tid) else {
                    return Err(HarnessError::Malformed(format!(
                        "response at ts {} without an invocation on thread {}",
                        ev.ts, ev.tid
                    )));
                };
                let c = &mut calls[i];
                if c.op != ev.op || c.key != ev.key {
                    return Err(HarnessError::Malformed(format!("response at ts {} does not match its invocation", ev.ts)));
                }
                let Some(r) = ev.result else {
                    return Err(HarnessError::Malformed(format!("response at ts {} has no result", ev.ts)));
                };
                c.res = Some((ev.ts, r));
            }
        }
    }
    if calls.len() > MAX_OPS {
        return Err(HarnessError::TooLong(calls.len()));
    }
    Ok((calls, events))
}

struct Search<'a> {
    calls: &'a [Call],
    model: &'a SetModel,
    complete: u128,
    failed: HashSet<(u128, BTreeSet<u64>)>,
}

impl Search<'_> {
    fn dfs(&mut self, done: u128, state: &BTreeSet<u64>) -> bool {
        if done & self.complete == self.complete {
            return true;
        }
        // An operation may go next only if it was invoked before every
        // remaining completed operation returned.
        let horizon = self
            .calls
            .iter()
            .enumerate()
            .filter(|(i, _)| done & (1 << i) == 0)
            .filter_map(|(_, c)| c.res.map(|(t, _)| t))
            .min()
            .unwrap_or(u64::MAX);
        for (i, c) in self.calls.iter().enumerate() {
            let bit = 1u128 << i;
            if done & bit != 0 || c.inv > horizon {
                continue;
            }
            let (next, r) = self.model.apply(state, c.op, c.key);
            if let Some((_, expect)) = c.res {
                if r != expect {
                    continue;
                }
            }
            let key = (done | bit, next);
            if self.failed.contains(&key) {
                continue;
            }
            if self.dfs(key.0, &key.1) {
                return true;
            }
            self.failed.insert(key);
        }
        false
    }
}

fn linearizable(calls: &[Call], model: &SetModel) -> bool {
    let complete = calls
        .iter()
        .enumerate()
        .filter(|(_, c)| c.res.is_some())
        .fold(0u128, |m, (i, _)| m | (1 << i));
    let mut s = Search {
        calls,
        model,
        complete,
        failed: HashSet::new(),
    };
    s.dfs(0, &BTreeSet::new())
}

/// Decides whether `history` can be explained by some order of its
/// operations that respects real time and the set specification.
/// Operations without a response may be placed anywhere after their
/// invocation, or left out.
pub fn check_linearizable(history: &[HistoryEvent], model: &SetModel) -> Result<Verdict, HarnessError> {
    let (calls, events) = pair(history)?;
    if linearizable(&calls, model) {
        return Ok(Verdict::Linearizable);
    }
    // Linearizability is prefix-closed, so the first failing prefix ending
    // in a response is the minimal witness.
    for end in 0..events.len() {
        if events[end].kind != EventKind::Response {
            continue;
        }
        let prefix = &events[..=end];
        let (calls, _) = pair(prefix)?;
        if !linearizable(&calls, model) {
            return Ok(Verdict::Violation { prefix: prefix.to_vec() });
        }
    }
    unreachable!("full history failed but no prefix did")
}
