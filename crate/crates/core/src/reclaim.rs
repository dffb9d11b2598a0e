//! Node reclamation: hazard slots for in-flight traversals, reference counts
//! for slot heads, and per-thread retirement buffers scanned only when full.
//!
//! A retired node is first self-linked, which marks its successor as
//! `pred_unlinked`. A node can only be freed once its own predecessor has
//! been unlinked, so a reader that validated `pred.next == node` after
//! publishing its hazard is always seen by the scan.

use alloc::boxed::Box;
use alloc::collections::VecDeque;
use alloc::vec::Vec;
use core::cell::UnsafeCell;
use core::ptr;
use core::sync::atomic::{AtomicPtr, AtomicU64, AtomicUsize, Ordering::SeqCst};

use crossbeam_utils::CachePadded;

use crate::queue::{Node, Operation, MAGIC_ALIVE, MAGIC_POISON};

pub(crate) const HP_TAIL: usize = 0;
pub(crate) const HP_NEXT: usize = 1;
pub(crate) const HP_MINE: usize = 2;
// Two slots, used alternately while walking the queue.
pub(crate) const HP_TRAV: usize = 3;
pub(crate) const HP_PER_THREAD: usize = 5;

/// Freed nodes kept poisoned (not returned to the allocator) per thread
/// while tracking is on.
pub(crate) const QUARANTINE: usize = 1024;

pub(crate) struct HazardTable {
    slots: Box<[CachePadded<[AtomicPtr<()>; HP_PER_THREAD]>]>,
}

impl HazardTable {
    pub(crate) fn new(max_threads: usize) -> Self {
        let slots = (0..max_threads)
            .map(|_| CachePadded::new(core::array::from_fn(|_| AtomicPtr::new(ptr::null_mut()))))
            .collect::<Vec<_>>()
            .into_boxed_slice();
        Self { slots }
    }

    #[inline]
    pub(crate) fn set<T>(&self, tid: usize, idx: usize, p: *mut T) {
        self.slots[tid][idx].store(p.cast(), SeqCst);
    }

    #[inline]
    pub(crate) fn clear(&self, tid: usize, idx: usize) {
        self.slots[tid][idx].store(ptr::null_mut(), SeqCst);
    }

    pub(crate) fn clear_all(&self, tid: usize) {
        for s in self.slots[tid].iter() {
            s.store(ptr::null_mut(), SeqCst);
        }
    }

    /// Publishes the value of `src` in slot `idx`, retrying until the
    /// published value is still the one in `src`.
    pub(crate) fn protect<T>(&self, tid: usize, idx: usize, src: &AtomicPtr<T>) -> *mut T {
        let mut p = src.load(SeqCst);
        loop {
            self.set(tid, idx, p);
            let q = src.load(SeqCst);
            if q == p {
                return p;
            }
            p = q;
        }
    }

    #[cfg(test)]
    pub(crate) fn get(&self, tid: usize, idx: usize) -> *mut () {
        self.slots[tid][idx].load(SeqCst)
    }

    fn snapshot(&self, out: &mut Vec<usize>) {
        out.clear();
        for t in self.slots.iter() {
            for s in t.iter() {
                let p = s.load(SeqCst);
                if !p.is_null() {
                    out.push(p as usize);
                }
            }
        }
        out.sort_unstable();
    }
}

struct Local<C> {
    // Retired, not yet self-linked. Oldest first.
    ring: Vec<*mut Node<C>>,
    // Self-linked, waiting for pred_unlinked / refcnt / hazards.
    pending: Vec<*mut Node<C>>,
    quarantine: VecDeque<*mut Node<C>>,
    hazards: Vec<usize>,
    ready: Vec<bool>,
}

/// Per-thread retirement counts.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct RetireCounts {
    pub buffered: usize,
    pub pending: usize,
}

pub(crate) struct Reclaimer<C> {
    local: Box<[CachePadded<UnsafeCell<Local<C>>>]>,
    size_circbuff: usize,
    tracking: bool,
    pub(crate) live_nodes: AtomicUsize,
    pub(crate) live_replicas: AtomicUsize,
    pub(crate) freed_nodes: AtomicU64,
    pub(crate) uaf_detected: AtomicU64,
}

impl<C> Reclaimer<C> {
    pub(crate) fn new(max_threads: usize, size_circbuff: usize, tracking: bool) -> Self {
        let local = (0..max_threads)
            .map(|_| {
                CachePadded::new(UnsafeCell::new(Local {
                    ring: Vec::with_capacity(size_circbuff),
                    pending: Vec::new(),
                    quarantine: VecDeque::new(),
                    hazards: Vec::new(),
                    ready: Vec::new(),
                }))
            })
            .collect::<Vec<_>>()
            .into_boxed_slice();
        Self {
            local,
            size_circbuff,
            tracking,
            live_nodes: AtomicUsize::new(0),
            live_replicas: AtomicUsize::new(0),
            freed_nodes: AtomicU64::new(0),
            uaf_detected: AtomicU64::new(0),
        }
    }

    pub(crate) fn alloc_node(&self, op: Operation<C>, tid: usize) -> *mut Node<C> {
        self.live_nodes.fetch_add(1, SeqCst);
        Box::into_raw(Box::new(Node::new(op, tid)))
    }

    pub(crate) fn alloc_sentinel(&self) -> *mut Node<C> {
        self.live_nodes.fetch_add(1, SeqCst);
        Box::into_raw(Box::new(Node::sentinel()))
    }

    /// Records a dereference of `node`; with tracking on, flags nodes that
    /// have already been freed.
    #[inline]
    pub(crate) fn check(&self, node: *const Node<C>) {
        if self.tracking {
            // SAFETY: tracked frees keep the memory in quarantine, so the
            // magic word stays readable for the checks this is meant to catch.
            let m = unsafe { (*node).magic.load(SeqCst) };
            if m != MAGIC_ALIVE {
                self.uaf_detected.fetch_add(1, SeqCst);
            }
        }
    }

    /// # Safety
    /// Only the thread registered as `tid` may call this.
    #[allow(clippy::mut_from_ref)]
    unsafe fn local(&self, tid: usize) -> &mut Local<C> {
        unsafe { &mut *self.local[tid].get() }
    }

    /// Buffers `node`; scans when the buffer reaches `size_circbuff`.
    ///
    /// # Safety
    /// Caller is the thread registered as `tid`, and `node` is no longer the
    /// head of the current slot nor the tail.
    pub(crate) unsafe fn retire(&self, tid: usize, node: *mut Node<C>, hz: &HazardTable) {
        let l = unsafe { self.local(tid) };
        l.ring.push(node);
        if l.ring.len() >= self.size_circbuff {
            unsafe { self.scan(tid, hz) };
        }
    }

    /// # Safety
    /// Caller is the thread registered as `tid`.
    pub(crate) unsafe fn scan(&self, tid: usize, hz: &HazardTable) {
        let l = unsafe { self.local(tid) };
        for &n in l.ring.iter() {
            unsafe { self_link(n) };
        }
        l.pending.append(&mut l.ring);
        // Order matters: pred_unlinked, then hazards, then refcnt.
        l.ready.clear();
        l.ready
            .extend(l.pending.iter().map(|&n| unsafe { (*n).pred_unlinked.load(SeqCst) }));
        hz.snapshot(&mut l.hazards);
        let mut keep = 0;
        for i in 0..l.pending.len() {
            let n = l.pending[i];
            let free = l.ready[i]
                && l.hazards.binary_search(&(n as usize)).is_err()
                && unsafe { (*n).refcnt.load(SeqCst) } == 0;
            if free {
                unsafe { self.free(&mut l.quarantine, n) };
            } else {
                l.pending[keep] = n;
                keep += 1;
            }
        }
        l.pending.truncate(keep);
    }

    unsafe fn free(&self, quarantine: &mut VecDeque<*mut Node<C>>, n: *mut Node<C>) {
        self.live_nodes.fetch_sub(1, SeqCst);
        self.freed_nodes.fetch_add(1, SeqCst);
        if self.tracking {
            unsafe { (*n).magic.store(MAGIC_POISON, SeqCst) };
            quarantine.push_back(n);
            if quarantine.len() > QUARANTINE {
                let old = quarantine.pop_front().unwrap();
                drop(unsafe { Box::from_raw(old) });
            }
        } else {
            drop(unsafe { Box::from_raw(n) });
        }
    }

    pub(crate) fn counts(&mut self, tid: usize) -> RetireCounts {
        let l = self.local[tid].get_mut();
        RetireCounts {
            buffered: l.ring.len(),
            pending: l.pending.len(),
        }
    }

    /// Takes every retired-but-live node out of the buffers, and deallocates
    /// quarantined ones.
    pub(crate) fn take_all(&mut self, out: &mut Vec<*mut Node<C>>) {
        for l in self.local.iter_mut() {
            let l = l.get_mut();
            out.append(&mut l.ring);
            out.append(&mut l.pending);
            for q in l.quarantine.drain(..) {
                drop(unsafe { Box::from_raw(q) });
            }
        }
    }

    /// Frees a node outside the retirement protocol. Requires exclusive
    /// access to the whole construct.
    pub(crate) unsafe fn free_now(&mut self, n: *mut Node<C>) {
        self.live_nodes.fetch_sub(1, SeqCst);
        self.freed_nodes.fetch_add(1, SeqCst);
        drop(unsafe { Box::from_raw(n) });
    }
}

/// Self-links `n` and tells its successor that its predecessor is gone.
unsafe fn self_link<C>(n: *mut Node<C>) {
    let node = unsafe { &*n };
    let succ = node.next.swap(n, SeqCst);
    if !succ.is_null() && succ != n {
        unsafe { (*succ).pred_unlinked.store(true, SeqCst) };
    }
}
