//! Turn queue of mutation nodes.
//!
//! Enqueuers announce their node in a per-thread slot and help whichever
//! announced node comes next in turn order (counting from the enqueuer of
//! the current tail). The helper that links a node also stamps its ticket
//! before swinging the tail, so tickets are consecutive and fixed before the
//! node can be observed as tail.

use alloc::boxed::Box;
use alloc::vec::Vec;
use core::ptr;
use core::sync::atomic::{AtomicBool, AtomicPtr, AtomicU64, AtomicU8, AtomicUsize, Ordering::SeqCst};

use crossbeam_utils::CachePadded;

use crate::probes::Probes;
use crate::reclaim::{HazardTable, HP_NEXT, HP_TAIL};

pub(crate) type UpdateFn<C> = Box<dyn Fn(&mut C) -> u64 + Send + Sync>;
pub(crate) type ReadFn<C> = Box<dyn Fn(&C) -> u64 + Send + Sync>;

pub(crate) enum Operation<C> {
    Identity,
    Update(UpdateFn<C>),
    Read(ReadFn<C>),
}

pub(crate) const MAGIC_ALIVE: u64 = 0x0a11_ce0f_c0de_0001;
pub(crate) const MAGIC_POISON: u64 = 0xdead_dead_dead_dead;

const CELL_EMPTY: u8 = 0;
const CELL_BUSY: u8 = 1;
const CELL_SET: u8 = 2;

/// One 64-bit result slot. Racing helpers all store into it; with probes on,
/// the first value is kept aside and later writes are compared against it.
pub struct ResultCell {
    value: AtomicU64,
    ready: AtomicBool,
    state: AtomicU8,
    first: AtomicU64,
}

impl ResultCell {
    pub fn new() -> Self {
        Self {
            value: AtomicU64::new(0),
            ready: AtomicBool::new(false),
            state: AtomicU8::new(CELL_EMPTY),
            first: AtomicU64::new(0),
        }
    }

    pub(crate) fn store(&self, v: u64, probes: Option<&Probes>) {
        if let Some(p) = probes {
            match self
                .state
                .compare_exchange(CELL_EMPTY, CELL_BUSY, SeqCst, SeqCst)
            {
                Ok(_) => {
                    self.first.store(v, SeqCst);
                    self.state.store(CELL_SET, SeqCst);
                }
                Err(_) => {
                    Probes::bump(&p.result_rewrites);
                    // The first writer is between two stores; give it a
                    // bounded grace period, then skip the comparison.
                    let mut spins = 0u32;
                    while self.state.load(SeqCst) != CELL_SET && spins < (1 << 20) {
                        core::hint::spin_loop();
                        spins += 1;
                    }
                    if self.state.load(SeqCst) == CELL_SET && self.first.load(SeqCst) != v {
                        Probes::bump(&p.result_mismatches);
                    }
                }
            }
        }
        self.value.store(v, SeqCst);
        self.ready.store(true, SeqCst);
    }

    pub fn is_ready(&self) -> bool {
        self.ready.load(SeqCst)
    }

    pub fn load(&self) -> u64 {
        self.value.load(SeqCst)
    }
}

impl Default for ResultCell {
    fn default() -> Self {
        Self::new()
    }
}

pub(crate) struct Node<C> {
    pub(crate) op: Operation<C>,
    pub(crate) result: ResultCell,
    pub(crate) next: AtomicPtr<Node<C>>,
    // 0 until stamped; only the sentinel legitimately carries 0.
    pub(crate) ticket: AtomicU64,
    pub(crate) enq_tid: usize,
    pub(crate) refcnt: AtomicUsize,
    // Set once the predecessor has been self-linked.
    pub(crate) pred_unlinked: AtomicBool,
    pub(crate) magic: AtomicU64,
}

impl<C> Node<C> {
    pub(crate) fn new(op: Operation<C>, enq_tid: usize) -> Self {
        Self {
            op,
            result: ResultCell::new(),
            next: AtomicPtr::new(ptr::null_mut()),
            ticket: AtomicU64::new(0),
            enq_tid,
            refcnt: AtomicUsize::new(0),
            pred_unlinked: AtomicBool::new(false),
            magic: AtomicU64::new(MAGIC_ALIVE),
        }
    }

    pub(crate) fn sentinel() -> Self {
        let n = Self::new(Operation::Identity, 0);
        n.pred_unlinked.store(true, SeqCst);
        n
    }

    #[inline]
    pub(crate) fn ticket(&self) -> u64 {
        self.ticket.load(SeqCst)
    }

    pub(crate) fn apply(&self, obj: &mut C) -> u64 {
        match &self.op {
            Operation::Identity => 0,
            Operation::Update(f) => f(obj),
            Operation::Read(f) => f(obj),
        }
    }
}

/// Reads `node.next` and protects it in hazard slot `idx`. `None` means the
/// link is null or self-linked, i.e. the caller's view is invalidated.
pub(crate) fn protected_next<C>(
    node: &Node<C>,
    hz: &HazardTable,
    tid: usize,
    idx: usize,
) -> Option<*mut Node<C>> {
    let me = node as *const Node<C> as *mut Node<C>;
    loop {
        let n = node.next.load(SeqCst);
        if n.is_null() || n == me {
            return None;
        }
        hz.set(tid, idx, n);
        // next moves null -> successor -> self at most, so this retries at
        // most twice.
        if node.next.load(SeqCst) == n {
            return Some(n);
        }
    }
}

pub(crate) struct TurnQueue<C> {
    tail: CachePadded<AtomicPtr<Node<C>>>,
    enqueuers: Box<[CachePadded<AtomicPtr<Node<C>>>]>,
}

impl<C> TurnQueue<C> {
    pub(crate) fn new(sentinel: *mut Node<C>, max_threads: usize) -> Self {
        let enqueuers = (0..max_threads)
            .map(|_| CachePadded::new(AtomicPtr::new(ptr::null_mut())))
            .collect::<Vec<_>>()
            .into_boxed_slice();
        Self {
            tail: CachePadded::new(AtomicPtr::new(sentinel)),
            enqueuers,
        }
    }

    pub(crate) fn tail_ptr(&self) -> *mut Node<C> {
        self.tail.load(SeqCst)
    }

    /// Ticket of the current tail. Uses the tail hazard slot.
    pub(crate) fn tail_ticket(&self, tid: usize, hz: &HazardTable) -> u64 {
        let t = hz.protect(tid, HP_TAIL, &self.tail);
        // SAFETY: protected and validated against the tail.
        let tk = unsafe { (*t).ticket() };
        hz.clear(tid, HP_TAIL);
        tk
    }

    /// Node announced by `tid` and not yet observed as tail, if any.
    pub(crate) fn announced(&self, tid: usize) -> *mut Node<C> {
        self.enqueuers[tid].load(SeqCst)
    }

    pub(crate) fn clear_announce(&mut self, tid: usize) {
        self.enqueuers[tid].store(ptr::null_mut(), SeqCst);
    }

    /// Appends `node` (already allocated, ticket 0) and returns the number
    /// of helping rounds it took.
    ///
    /// # Safety
    /// `node` must be a live, unshared node that the caller protects for the
    /// duration of the call.
    pub(crate) unsafe fn enqueue(&self, node: *mut Node<C>, tid: usize, hz: &HazardTable) -> u64 {
        let n = self.enqueuers.len();
        self.enqueuers[tid].store(node, SeqCst);
        let mut rounds = 0;
        while !self.enqueuers[tid].load(SeqCst).is_null() {
            rounds += 1;
            let ltail = hz.protect(tid, HP_TAIL, &self.tail);
            // SAFETY: protected and validated against the tail above.
            let lt = unsafe { &*ltail };
            let owner = &self.enqueuers[lt.enq_tid];
            if owner.load(SeqCst) == ltail {
                let _ = owner.compare_exchange(ltail, ptr::null_mut(), SeqCst, SeqCst);
            }
            for j in 1..=n {
                let help = self.enqueuers[(lt.enq_tid + j) % n].load(SeqCst);
                if help.is_null() {
                    continue;
                }
                let _ = lt
                    .next
                    .compare_exchange(ptr::null_mut(), help, SeqCst, SeqCst);
                break;
            }
            let lnext = lt.next.load(SeqCst);
            if lnext.is_null() || lnext == ltail {
                continue;
            }
            hz.set(tid, HP_NEXT, lnext);
            if self.tail.load(SeqCst) != ltail {
                continue;
            }
            // SAFETY: lnext is ltail's successor and ltail is still the tail,
            // so lnext is not retired; it is now protected.
            let ln = unsafe { &*lnext };
            let _ = ln
                .ticket
                .compare_exchange(0, lt.ticket() + 1, SeqCst, SeqCst);
            let _ = self.tail.compare_exchange(ltail, lnext, SeqCst, SeqCst);
        }
        hz.clear(tid, HP_TAIL);
        hz.clear(tid, HP_NEXT);
        rounds
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::reclaim::{HP_TRAV, HP_PER_THREAD};
    use std::sync::Arc;

    struct Q {
        queue: TurnQueue<u64>,
        hz: HazardTable,
        sentinel: *mut Node<u64>,
    }

    unsafe impl Send for Q {}
    unsafe impl Sync for Q {}

    impl Q {
        fn new(threads: usize) -> Self {
            let sentinel = Box::into_raw(Box::new(Node::sentinel()));
            Self {
                queue: TurnQueue::new(sentinel, threads),
                hz: HazardTable::new(threads),
                sentinel,
            }
        }

        fn push(&self, tid: usize) -> *mut Node<u64> {
            let node = Box::into_raw(Box::new(Node::new(Operation::Identity, tid)));
            unsafe { self.queue.enqueue(node, tid, &self.hz) };
            node
        }

        // Tickets from start.next up to stop, or None on invalidation.
        fn traverse(&self, start: *mut Node<u64>, stop: u64) -> Option<Vec<u64>> {
            let mut out = Vec::new();
            let mut cur = unsafe { &*start };
            let mut k = 0;
            while cur.ticket() < stop {
                let nx = protected_next(cur, &self.hz, 0, HP_TRAV + (k & 1))?;
                k += 1;
                cur = unsafe { &*nx };
                out.push(cur.ticket());
            }
            Some(out)
        }
    }

    impl Drop for Q {
        fn drop(&mut self) {
            let mut cur = self.sentinel;
            while !cur.is_null() {
                let b = unsafe { Box::from_raw(cur) };
                let nx = b.next.load(SeqCst);
                cur = if nx == cur { ptr::null_mut() } else { nx };
            }
        }
    }

    #[test]
    fn first_ticket_is_one() {
        let q = Q::new(2);
        let a = q.push(0);
        assert_eq!(unsafe { (*a).ticket() }, 1);
        let b = q.push(1);
        assert_eq!(unsafe { (*b).ticket() }, 2);
        assert_eq!(q.queue.tail_ticket(0, &q.hz), 2);
    }

    #[test]
    fn traverse_from_sentinel() {
        let q = Q::new(1);
        let nodes: Vec<_> = (0..3).map(|_| q.push(0)).collect();
        assert_eq!(q.traverse(q.sentinel, 3), Some(vec![1, 2, 3]));
        assert_eq!(q.traverse(nodes[1], 2), Some(vec![]));
        assert_eq!(q.traverse(nodes[0], 3), Some(vec![2, 3]));
    }

    #[test]
    fn traverse_hits_self_link() {
        let q = Q::new(1);
        let nodes: Vec<_> = (0..4).map(|_| q.push(0)).collect();
        // tombstone node 2 the way reclamation does
        unsafe { (*nodes[1]).next.store(nodes[1], SeqCst) };
        assert_eq!(q.traverse(q.sentinel, 4), None);
        assert_eq!(q.traverse(nodes[2], 4), Some(vec![4]));
        // repair so Drop can walk the chain
        unsafe { (*nodes[1]).next.store(nodes[2], SeqCst) };
    }

    #[test]
    fn concurrent_tickets_have_no_gaps() {
        const THREADS: usize = 6;
        const PER: usize = 500;
        let q = Arc::new(Q::new(THREADS));
        let handles: Vec<_> = (0..THREADS)
            .map(|tid| {
                let q = q.clone();
                std::thread::spawn(move || {
                    let mut tickets = Vec::new();
                    let mut max_rounds = 0;
                    for _ in 0..PER {
                        let node = Box::into_raw(Box::new(Node::new(Operation::Identity, tid)));
                        let r = unsafe { q.queue.enqueue(node, tid, &q.hz) };
                        max_rounds = max_rounds.max(r);
                        tickets.push(unsafe { (*node).ticket() });
                    }
                    (tickets, max_rounds)
                })
            })
            .collect();
        let mut all = Vec::new();
        for h in handles {
            let (t, rounds) = h.join().unwrap();
            // own tickets increase
            assert!(t.windows(2).all(|w| w[0] < w[1]));
            assert!(rounds as usize <= THREADS + 1, "rounds {rounds}");
            all.extend(t);
        }
        all.sort_unstable();
        let expect: Vec<u64> = (1..=(THREADS * PER) as u64).collect();
        assert_eq!(all, expect);
        let walked = q.traverse(q.sentinel, (THREADS * PER) as u64).unwrap();
        assert_eq!(walked, expect);
        assert_eq!(HP_PER_THREAD, 5);
    }

    #[test]
    fn result_cell_comparator() {
        let p = Probes::default();
        let c = ResultCell::new();
        assert!(!c.is_ready());
        c.store(7, Some(&p));
        c.store(7, Some(&p));
        assert_eq!(c.load(), 7);
        assert!(c.is_ready());
        let r = p.report();
        assert_eq!((r.result_rewrites, r.result_mismatches), (1, 0));
        c.store(8, Some(&p));
        assert_eq!(p.report().result_mismatches, 1);
    }
}
