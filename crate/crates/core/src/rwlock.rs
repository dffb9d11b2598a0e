//! Reader-writer lock with strong trylock semantics and a handover state.
//!
//! Readers announce themselves in a per-thread indicator; a writer claims the
//! writer word with a CAS and then checks that every indicator is clear,
//! backing out if it sees a reader. The handover state is a distinguished
//! writer-word value: it keeps writers out while admitting readers, and any
//! thread may release it.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::fmt;
use core::sync::atomic::{AtomicBool, AtomicUsize, Ordering::SeqCst};

use crossbeam_utils::CachePadded;

const UNLOCKED: usize = 0;
const HANDOVER: usize = 1;
// EXCLUSIVE(tid) is stored as tid + EXCLUSIVE_BASE.
const EXCLUSIVE_BASE: usize = 2;

/// Writer side of a lock snapshot.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WriterState {
    Unlocked,
    Handover,
    Exclusive(usize),
}

/// Point-in-time view of a lock, for diagnostics and tests.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct LockSnapshot {
    pub writer: WriterState,
    pub readers: usize,
}

impl LockSnapshot {
    /// Whether the lock is held in any mode (including handover).
    pub fn is_held(&self) -> bool {
        self.writer != WriterState::Unlocked || self.readers > 0
    }
}

pub struct StrongTryRwLock {
    readers: Box<[CachePadded<AtomicBool>]>,
    writer: AtomicUsize,
}

impl StrongTryRwLock {
    pub fn new(max_threads: usize) -> Self {
        assert!(max_threads >= 1, "max_threads must be at least 1");
        let readers = (0..max_threads)
            .map(|_| CachePadded::new(AtomicBool::new(false)))
            .collect::<Vec<_>>()
            .into_boxed_slice();
        Self {
            readers,
            writer: AtomicUsize::new(UNLOCKED),
        }
    }

    /// A lock that starts out in the handover state.
    pub fn new_handover(max_threads: usize) -> Self {
        let lock = Self::new(max_threads);
        lock.writer.store(HANDOVER, SeqCst);
        lock
    }

    pub fn max_threads(&self) -> usize {
        self.readers.len()
    }

    #[inline]
    fn check_tid(&self, tid: usize) {
        assert!(
            tid < self.readers.len(),
            "tid {tid} out of range (max_threads = {})",
            self.readers.len()
        );
    }

    pub fn shared_try_lock(&self, tid: usize) -> bool {
        self.check_tid(tid);
        let ind = &self.readers[tid];
        debug_assert!(!ind.load(SeqCst), "tid {tid} already holds shared mode");
        ind.store(true, SeqCst);
        let w = self.writer.load(SeqCst);
        if w == UNLOCKED || w == HANDOVER {
            return true;
        }
        ind.store(false, SeqCst);
        false
    }

    pub fn shared_unlock(&self, tid: usize) {
        self.check_tid(tid);
        let was = self.readers[tid].swap(false, SeqCst);
        assert!(was, "shared_unlock by tid {tid} without a shared hold");
    }

    pub fn exclusive_try_lock(&self, tid: usize) -> bool {
        self.exclusive_try_lock_counted(tid).0
    }

    /// Same as [`exclusive_try_lock`](Self::exclusive_try_lock), also
    /// returning the number of shared-memory accesses performed.
    pub fn exclusive_try_lock_counted(&self, tid: usize) -> (bool, usize) {
        self.check_tid(tid);
        let mut steps = 1;
        if self.writer.load(SeqCst) != UNLOCKED {
            return (false, steps);
        }
        steps += 1;
        if self
            .writer
            .compare_exchange(UNLOCKED, EXCLUSIVE_BASE + tid, SeqCst, SeqCst)
            .is_err()
        {
            return (false, steps);
        }
        for ind in self.readers.iter() {
            steps += 1;
            if ind.load(SeqCst) {
                steps += 1;
                self.writer.store(UNLOCKED, SeqCst);
                return (false, steps);
            }
        }
        (true, steps)
    }

    /// Upper bound on the steps taken by one `exclusive_try_lock` call.
    pub fn exclusive_step_budget(&self) -> usize {
        3 + self.readers.len()
    }

    pub fn exclusive_unlock(&self) {
        let w = self.writer.load(SeqCst);
        assert!(w >= EXCLUSIVE_BASE, "exclusive_unlock without an exclusive hold");
        self.writer.store(UNLOCKED, SeqCst);
    }

    pub fn downgrade_to_handover(&self) {
        let w = self.writer.load(SeqCst);
        assert!(w >= EXCLUSIVE_BASE, "downgrade_to_handover without an exclusive hold");
        self.writer.store(HANDOVER, SeqCst);
    }

    pub fn handover_unlock(&self) {
        let res = self
            .writer
            .compare_exchange(HANDOVER, UNLOCKED, SeqCst, SeqCst);
        assert!(res.is_ok(), "handover_unlock on a lock not in handover");
    }

    pub fn snapshot(&self) -> LockSnapshot {
        let writer = match self.writer.load(SeqCst) {
            UNLOCKED => WriterState::Unlocked,
            HANDOVER => WriterState::Handover,
            w => WriterState::Exclusive(w - EXCLUSIVE_BASE),
        };
        let readers = self.readers.iter().filter(|r| r.load(SeqCst)).count();
        LockSnapshot { writer, readers }
    }

    /// Clears every hold. Only for callers with exclusive access to the
    /// whole structure (e.g. during teardown).
    pub(crate) fn reset(&mut self, handover: bool) {
        for r in self.readers.iter() {
            r.store(false, SeqCst);
        }
        self.writer
            .store(if handover { HANDOVER } else { UNLOCKED }, SeqCst);
    }
}

impl fmt::Debug for StrongTryRwLock {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StrongTryRwLock")
            .field("state", &self.snapshot())
            .finish()
    }
}
