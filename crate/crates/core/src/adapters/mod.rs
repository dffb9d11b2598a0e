//! Sequential sets and the wait-free set built from them.

mod hash;
mod list;
mod tree;

use alloc::vec::Vec;

pub use hash::HashSet1000;
pub use list::SortedListSet;
pub use tree::AvlSet;

use crate::config::{Config, ConfigError};
use crate::construct::{Cx, ThreadHandle};

/// A single-threaded set of 64-bit keys. `Clone` must be a deep copy.
pub trait SequentialSet: Clone + Send + Sync + 'static {
    fn insert(&mut self, key: u64) -> bool;
    fn erase(&mut self, key: u64) -> bool;
    fn find(&self, key: u64) -> bool;
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Keys in ascending order.
    fn keys(&self) -> Vec<u64>;
}

pub struct WaitFreeSet<S: SequentialSet> {
    cx: Cx<S>,
}

impl<S: SequentialSet> WaitFreeSet<S> {
    pub fn new(inner: S, config: Config) -> Result<Self, ConfigError> {
        Ok(Self {
            cx: Cx::new(inner, config)?,
        })
    }

    pub fn register(&self) -> Option<SetHandle<'_, S>> {
        self.cx.register().map(|h| SetHandle { h })
    }

    pub fn construct(&self) -> &Cx<S> {
        &self.cx
    }

    pub fn construct_mut(&mut self) -> &mut Cx<S> {
        &mut self.cx
    }
}

/// Per-thread access to a [`WaitFreeSet`].
pub struct SetHandle<'a, S: SequentialSet> {
    h: ThreadHandle<'a, S>,
}

impl<S: SequentialSet> SetHandle<'_, S> {
    pub fn tid(&self) -> usize {
        self.h.tid()
    }

    pub fn add(&self, key: u64) -> bool {
        self.h.apply_update(move |s: &mut S| s.insert(key) as u64) != 0
    }

    pub fn remove(&self, key: u64) -> bool {
        self.h.apply_update(move |s: &mut S| s.erase(key) as u64) != 0
    }

    pub fn contains(&self, key: u64) -> bool {
        self.h.apply_read(move |s: &S| s.find(key) as u64) != 0
    }

    pub fn len(&self) -> usize {
        self.h.apply_read(|s: &S| s.len() as u64) as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// See [`ThreadHandle::abandon`].
    pub fn abandon(self) {
        self.h.abandon();
    }
}

#[cfg(test)]
pub(crate) mod conformance {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    #[derive(Clone, Debug)]
    pub enum Op {
        Insert(u64),
        Erase(u64),
        Find(u64),
        Snapshot,
    }

    pub fn ops(key_range: u64) -> impl Strategy<Value = Vec<Op>> {
        proptest::collection::vec(
            prop_oneof![
                3 => (0..key_range).prop_map(Op::Insert),
                2 => (0..key_range).prop_map(Op::Erase),
                2 => (0..key_range).prop_map(Op::Find),
                1 => Just(Op::Snapshot),
            ],
            0..300,
        )
    }

    /// Runs `ops` against `s` and a `BTreeSet`, checking every answer and
    /// that clones are deep.
    pub fn check<S: SequentialSet + core::fmt::Debug>(mut s: S, ops: &[Op]) -> Result<(), TestCaseError> {
        let mut model = BTreeSet::new();
        for op in ops {
            match *op {
                Op::Insert(k) => prop_assert_eq!(s.insert(k), model.insert(k)),
                Op::Erase(k) => prop_assert_eq!(s.erase(k), model.remove(&k)),
                Op::Find(k) => prop_assert_eq!(s.find(k), model.contains(&k)),
                Op::Snapshot => {
                    let mut copy = s.clone();
                    prop_assert_eq!(copy.keys(), s.keys());
                    let probe = u64::MAX - 1;
                    copy.insert(probe);
                    if let Some(&k) = model.iter().next() {
                        copy.erase(k);
                    }
                    prop_assert!(!s.find(probe));
                    prop_assert_eq!(s.keys(), model.iter().copied().collect::<Vec<_>>());
                }
            }
            prop_assert_eq!(s.len(), model.len());
        }
        prop_assert_eq!(s.keys(), model.into_iter().collect::<Vec<_>>());
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn basic<S: SequentialSet + Default>() {
        let set = WaitFreeSet::new(S::default(), Config::new(2)).unwrap();
        let h = set.register().unwrap();
        assert!(h.add(33));
        assert!(h.contains(33));
        assert!(!h.add(33));
        assert!(h.remove(33));
        assert!(!h.contains(33));
        assert!(!h.remove(33));
        assert!(h.is_empty());
    }

    #[test]
    fn basic_all() {
        basic::<SortedListSet>();
        basic::<HashSet1000>();
        basic::<AvlSet>();
    }

    #[test]
    fn one_remover_wins() {
        const THREADS: usize = 6;
        let set = WaitFreeSet::new(AvlSet::default(), Config::new(THREADS)).unwrap();
        for round in 0..50u64 {
            assert!(set.register().unwrap().add(round));
            let wins = std::sync::atomic::AtomicUsize::new(0);
            std::thread::scope(|s| {
                for _ in 0..THREADS {
                    let h = set.register().unwrap();
                    let wins = &wins;
                    s.spawn(move || {
                        if h.remove(round) {
                            wins.fetch_add(1, core::sync::atomic::Ordering::SeqCst);
                        }
                    });
                }
            });
            assert_eq!(wins.into_inner(), 1);
        }
    }
}
