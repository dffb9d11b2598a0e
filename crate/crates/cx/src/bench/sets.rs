use std::sync::{Arc, Mutex};
use std::time::{Duration, Instant};

use cx_core::adapters::{AvlSet, HashSet1000, SequentialSet, SetHandle, SortedListSet, WaitFreeSet};
use cx_core::Config;

use super::{BenchConfig, BenchError, Impl, Structure};
use crate::platform::{flag, StdPlatform, PROBES_ENV, TRACKING_ENV};

/// A shared set under benchmark.
pub(crate) trait SharedSet: Sync {
    fn session(&self) -> Box<dyn Session + '_>;
    fn len(&self) -> usize;
}

/// One worker's view of a [`SharedSet`].
pub(crate) trait Session {
    fn add(&self, key: u64) -> bool;
    fn remove(&self, key: u64) -> bool;
    fn contains(&self, key: u64) -> bool;
}

struct Lock<S>(Mutex<S>);

impl<S: SequentialSet> SharedSet for Lock<S> {
    fn session(&self) -> Box<dyn Session + '_> {
        Box::new(&self.0)
    }

    fn len(&self) -> usize {
        self.0.lock().unwrap().len()
    }
}

impl<S: SequentialSet> Session for &Mutex<S> {
    fn add(&self, key: u64) -> bool {
        self.lock().unwrap().insert(key)
    }

    fn remove(&self, key: u64) -> bool {
        self.lock().unwrap().erase(key)
    }

    fn contains(&self, key: u64) -> bool {
        self.lock().unwrap().find(key)
    }
}

impl<S: SequentialSet> SharedSet for WaitFreeSet<S> {
    fn session(&self) -> Box<dyn Session + '_> {
        Box::new(self.register().expect("more workers than max_threads"))
    }

    fn len(&self) -> usize {
        self.register().expect("no free thread id").len()
    }
}

impl<S: SequentialSet> Session for SetHandle<'_, S> {
    fn add(&self, key: u64) -> bool {
        SetHandle::add(self, key)
    }

    fn remove(&self, key: u64) -> bool {
        SetHandle::remove(self, key)
    }

    fn contains(&self, key: u64) -> bool {
        SetHandle::contains(self, key)
    }
}

/// Keys `0..keys`, inserted high to low so the sorted list prepends.
fn prefilled<S: SequentialSet + Default>(keys: u64) -> S {
    let mut s = S::default();
    for k in (0..keys).rev() {
        s.insert(k);
    }
    s
}

/// Shortest of three clones of `s`.
fn clone_time<S: SequentialSet>(s: &S) -> Duration {
    (0..3)
        .map(|_| {
            let t = Instant::now();
            let c = s.clone();
            let d = t.elapsed();
            drop(c);
            d
        })
        .min()
        .unwrap()
}

fn construct_config(cfg: &BenchConfig, slots: usize) -> Config {
    // Instrumentation is off unless the environment asks for it.
    Config::new(cfg.threads)
        .max_objs(slots)
        .probes(flag(PROBES_ENV).unwrap_or(false))
        .tracking(flag(TRACKING_ENV).unwrap_or(false))
        .platform(Arc::new(StdPlatform))
}

fn build_typed<S: SequentialSet + Default>(cfg: &BenchConfig) -> Result<Box<dyn SharedSet>, BenchError> {
    let initial: S = prefilled(cfg.keys);
    let Some(slots) = cfg.slots() else {
        return Ok(Box::new(Lock(Mutex::new(initial))));
    };
    let budget = clone_time(&initial);
    let set = WaitFreeSet::new(initial, construct_config(cfg, slots))
        .map_err(|e| BenchError::Usage(e.to_string()))?;
    if cfg.implementation == Impl::CxTimed {
        set.construct()
            .set_fast_path(4.min(slots), budget)
            .map_err(|e| BenchError::Usage(e.to_string()))?;
    }
    Ok(Box::new(set))
}

pub(crate) fn build(cfg: &BenchConfig) -> Result<Box<dyn SharedSet>, BenchError> {
    match cfg.structure {
        Structure::Linkedlist => build_typed::<SortedListSet>(cfg),
        Structure::Hash => build_typed::<HashSet1000>(cfg),
        Structure::Tree => build_typed::<AvlSet>(cfg),
    }
}
