//! The universal construct.
//!
//! Updates are appended to the turn queue, then applied to some replica slot
//! the caller locks exclusively; the slot is downgraded to handover and
//! swapped in as the current one with a CAS. Reads run directly on the
//! current slot under a shared lock, falling back to an enqueued read node
//! when updaters keep moving the current slot.
//!
//! `cur_comb` packs the head ticket of the current slot with its index, so
//! anyone can tell how far the current replica has progressed without
//! touching the slot.

use alloc::boxed::Box;
use alloc::collections::BTreeSet;
use alloc::sync::Arc;
use alloc::vec::Vec;
use core::cell::{Cell, UnsafeCell};
use core::marker::PhantomData;
use core::ptr;
use core::sync::atomic::{AtomicBool, AtomicU64, AtomicUsize, Ordering::SeqCst};
use core::time::Duration;

use crossbeam_utils::CachePadded;

use crate::config::{Config, ConfigError};
#[cfg(feature = "hooks")]
use crate::hooks::Hooks;
use crate::hooks::{PausePoint, Platform};
use crate::probes::{ProbeReport, Probes};
use crate::queue::{protected_next, Node, Operation, TurnQueue};
use crate::reclaim::{HazardTable, Reclaimer, RetireCounts, HP_MINE, HP_TRAV};
use crate::rwlock::{LockSnapshot, StrongTryRwLock};

const IDX_BITS: u32 = 8;
const IDX_MASK: u64 = (1 << IDX_BITS) - 1;

#[inline]
fn pack(idx: usize, ticket: u64) -> u64 {
    (ticket << IDX_BITS) | idx as u64
}

#[inline]
fn unpack(w: u64) -> (usize, u64) {
    ((w & IDX_MASK) as usize, w >> IDX_BITS)
}

struct Combined<C> {
    lock: StrongTryRwLock,
    // Written under the exclusive lock, read under shared or exclusive.
    head: UnsafeCell<*mut Node<C>>,
    obj: UnsafeCell<Option<Box<C>>>,
}

/// Counters maintained by the reclamation layer.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct ReclaimStats {
    pub live_nodes: usize,
    pub live_replicas: usize,
    pub freed_nodes: u64,
    pub uaf_detected: u64,
}

/// Breakdown of live nodes, taken with exclusive access.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Census {
    pub live_nodes: usize,
    /// Nodes from the current slot's head to the tail, inclusive.
    pub chain: usize,
    /// Slot heads outside that chain.
    pub pinned: usize,
    /// Everything else: retired nodes still waiting in some buffer.
    pub unreclaimed: usize,
    pub live_replicas: usize,
    pub per_thread: Vec<RetireCounts>,
}

pub struct Cx<C> {
    combs: Box<[CachePadded<Combined<C>>]>,
    cur_comb: CachePadded<AtomicU64>,
    queue: TurnQueue<C>,
    hz: HazardTable,
    reclaim: Reclaimer<C>,
    registry: Box<[AtomicBool]>,
    probes: Probes,
    probes_on: bool,
    max_threads: usize,
    size_circbuff: usize,
    max_read_tries: usize,
    fast_slots: AtomicUsize,
    fast_budget: AtomicU64,
    platform: Option<Arc<dyn Platform>>,
    #[cfg(feature = "hooks")]
    hooks: Option<Arc<dyn Hooks>>,
}

// SAFETY: slot contents are only touched under the slot lock, per-thread
// reclamation state only by the registered owner of that tid.
unsafe impl<C: Send + Sync> Send for Cx<C> {}
unsafe impl<C: Send + Sync> Sync for Cx<C> {}

impl<C: Clone + Send + Sync + 'static> Cx<C> {
    pub fn new(initial: C, config: Config) -> Result<Self, ConfigError> {
        config.validate()?;
        let reclaim = Reclaimer::new(config.max_threads, config.size_circbuff, config.tracking);
        let sentinel = reclaim.alloc_sentinel();
        let combs = (0..config.max_objs)
            .map(|i| {
                let lock = if i == 0 {
                    StrongTryRwLock::new_handover(config.max_threads)
                } else {
                    StrongTryRwLock::new(config.max_threads)
                };
                CachePadded::new(Combined {
                    lock,
                    head: UnsafeCell::new(ptr::null_mut()),
                    obj: UnsafeCell::new(None),
                })
            })
            .collect::<Vec<_>>()
            .into_boxed_slice();
        // SAFETY: not shared yet.
        unsafe {
            (*sentinel).refcnt.store(1, SeqCst);
            *combs[0].head.get() = sentinel;
            *combs[0].obj.get() = Some(Box::new(initial));
        }
        reclaim.live_replicas.store(1, SeqCst);
        Ok(Self {
            combs,
            cur_comb: CachePadded::new(AtomicU64::new(pack(0, 0))),
            queue: TurnQueue::new(sentinel, config.max_threads),
            hz: HazardTable::new(config.max_threads),
            reclaim,
            registry: (0..config.max_threads).map(|_| AtomicBool::new(false)).collect(),
            probes: Probes::default(),
            probes_on: config.probes,
            max_threads: config.max_threads,
            size_circbuff: config.size_circbuff,
            max_read_tries: config.max_read_tries,
            fast_slots: AtomicUsize::new(0),
            fast_budget: AtomicU64::new(0),
            platform: config.platform,
            #[cfg(feature = "hooks")]
            hooks: config.hooks,
        })
    }

    pub fn max_threads(&self) -> usize {
        self.max_threads
    }

    pub fn max_objs(&self) -> usize {
        self.combs.len()
    }

    /// Claims the lowest free thread id.
    pub fn register(&self) -> Option<ThreadHandle<'_, C>> {
        let tid = self
            .registry
            .iter()
            .position(|r| r.compare_exchange(false, true, SeqCst, SeqCst).is_ok())?;
        Some(ThreadHandle {
            cx: self,
            tid,
            _not_sync: PhantomData,
        })
    }

    fn deregister(&self, tid: usize) {
        // SAFETY: called from the handle that owns `tid`.
        unsafe { self.reclaim.scan(tid, &self.hz) };
        self.hz.clear_all(tid);
        self.registry[tid].store(false, SeqCst);
    }

    /// Timed fast path: for `budget` after the start of each update, only
    /// slots `[0, slot_limit)` are tried; afterwards the whole array.
    pub fn set_fast_path(&self, slot_limit: usize, budget: Duration) -> Result<(), ConfigError> {
        if slot_limit > self.combs.len() {
            return Err(ConfigError::SlotLimit {
                slot_limit,
                max_objs: self.combs.len(),
            });
        }
        if !budget.is_zero() && self.platform.is_none() {
            return Err(ConfigError::NoClock);
        }
        let nanos = u64::try_from(budget.as_nanos()).unwrap_or(u64::MAX);
        self.fast_budget.store(nanos, SeqCst);
        self.fast_slots.store(slot_limit, SeqCst);
        Ok(())
    }

    /// Index and head ticket of the current slot.
    pub fn current(&self) -> (usize, u64) {
        unpack(self.cur_comb.load(SeqCst))
    }

    pub fn slot_states(&self) -> Vec<LockSnapshot> {
        self.combs.iter().map(|c| c.lock.snapshot()).collect()
    }

    pub fn probe_report(&self) -> ProbeReport {
        self.probes.report()
    }

    pub fn reset_probes(&self) {
        self.probes.reset();
    }

    pub fn reclaim_stats(&self) -> ReclaimStats {
        ReclaimStats {
            live_nodes: self.reclaim.live_nodes.load(SeqCst),
            live_replicas: self.reclaim.live_replicas.load(SeqCst),
            freed_nodes: self.reclaim.freed_nodes.load(SeqCst),
            uaf_detected: self.reclaim.uaf_detected.load(SeqCst),
        }
    }

    /// Bound on the nodes one update may have to apply.
    pub fn apply_loop_bound(&self) -> u64 {
        (self.size_circbuff * self.max_threads + self.max_threads) as u64
    }

    #[inline]
    fn probes(&self) -> Option<&Probes> {
        self.probes_on.then_some(&self.probes)
    }

    #[inline]
    fn pause(&self, _point: PausePoint, _tid: usize) {
        #[cfg(feature = "hooks")]
        if let Some(h) = &self.hooks {
            h.pause(_point, _tid);
        }
    }

    #[inline]
    fn node<'a>(&self, p: *mut Node<C>) -> &'a Node<C> {
        self.reclaim.check(p);
        // SAFETY: callers only pass protected or pinned nodes.
        unsafe { &*p }
    }

    #[inline]
    fn head_of(&self, c: &Combined<C>) -> *mut Node<C> {
        // SAFETY: caller holds c's lock in some mode.
        unsafe { *c.head.get() }
    }

    /// Repoints `c.head`, moving the slot's pin from the old head to `new`.
    /// Caller holds `c` exclusively and protects `new`.
    fn set_head(&self, c: &Combined<C>, new: *mut Node<C>) {
        let old = self.head_of(c);
        if old == new {
            return;
        }
        if !new.is_null() {
            self.node(new).refcnt.fetch_add(1, SeqCst);
        }
        // SAFETY: exclusive lock held.
        unsafe { *c.head.get() = new };
        if !old.is_null() {
            self.node(old).refcnt.fetch_sub(1, SeqCst);
        }
    }

    /// Replaces `dst`'s replica with a copy of `src`'s and takes its head.
    /// Caller holds `dst` exclusively and `src` shared.
    fn update_head_obj(&self, dst: &Combined<C>, src: &Combined<C>) {
        // SAFETY: lock modes as above; the old replica has no readers since
        // dst is exclusively held.
        unsafe {
            if (*dst.obj.get()).take().is_some() {
                self.reclaim.live_replicas.fetch_sub(1, SeqCst);
            }
            let copy = (*src.obj.get()).as_deref().map(|o| Box::new(o.clone()));
            if copy.is_some() {
                self.reclaim.live_replicas.fetch_add(1, SeqCst);
            }
            *dst.obj.get() = copy;
        }
        self.set_head(dst, self.head_of(src));
        if let Some(p) = self.probes() {
            Probes::bump(&p.copies);
        }
    }

    fn fast_deadline(&self) -> Option<(usize, u64)> {
        let slots = self.fast_slots.load(SeqCst);
        let budget = self.fast_budget.load(SeqCst);
        if slots == 0 || budget == 0 {
            return None;
        }
        let now = self.platform.as_ref()?.now_nanos();
        Some((slots, now.saturating_add(budget)))
    }

    fn relax(&self) {
        match &self.platform {
            Some(p) => p.relax(),
            None => core::hint::spin_loop(),
        }
    }

    /// Scans the slots for one that can be locked exclusively. One pass is
    /// enough when `max_objs >= 2 * max_threads`; otherwise keeps scanning.
    fn acquire_exclusive(&self, tid: usize) -> usize {
        let n = self.combs.len();
        let fast = self.fast_deadline();
        let mut retried = false;
        loop {
            let limit = match (fast, &self.platform) {
                (Some((slots, deadline)), Some(p)) if p.now_nanos() < deadline => slots,
                _ => n,
            };
            let start = tid % limit;
            for k in 0..limit {
                let i = (start + k) % limit;
                if self.combs[i].lock.exclusive_try_lock(tid) {
                    return i;
                }
            }
            if limit == n && !retried {
                retried = true;
                if let Some(p) = self.probes() {
                    Probes::bump(&p.scan_retries);
                }
            }
            self.relax();
        }
    }

    /// Shared-locks the current slot if its head is still behind `tkt`.
    /// `None` means the current slot already contains ticket `tkt`.
    fn get_combined(&self, tkt: u64, tid: usize) -> Option<usize> {
        let mut attempts = 0;
        loop {
            let cur = self.cur_comb.load(SeqCst);
            let (idx, head_tkt) = unpack(cur);
            if head_tkt >= tkt {
                return None;
            }
            attempts += 1;
            if attempts == self.max_threads + 1 {
                if let Some(p) = self.probes() {
                    Probes::bump(&p.get_combined_overruns);
                }
            }
            let cc = &self.combs[idx].lock;
            if !cc.shared_try_lock(tid) {
                continue;
            }
            if self.cur_comb.load(SeqCst) != cur {
                cc.shared_unlock(tid);
                continue;
            }
            return Some(idx);
        }
    }

    pub(crate) fn apply_update_op(&self, tid: usize, op: Operation<C>) -> u64 {
        debug_assert!(self.registry[tid].load(SeqCst));
        let my = self.reclaim.alloc_node(op, tid);
        self.hz.set(tid, HP_MINE, my);
        // SAFETY: my is fresh and protected.
        let rounds = unsafe { self.queue.enqueue(my, tid, &self.hz) };
        let my_node = self.node(my);
        let tkt = my_node.ticket();
        if let Some(p) = self.probes() {
            Probes::max(&p.max_enqueue_iterations, rounds);
        }
        self.pause(PausePoint::AfterEnqueue, tid);

        let ci = self.acquire_exclusive(tid);
        let c = &*self.combs[ci];
        let mut held = 1u64;
        self.pause(PausePoint::AfterExclusiveLock, tid);

        let mut mn = self.head_of(c);
        if !mn.is_null() && self.node(mn).ticket() >= tkt {
            c.lock.exclusive_unlock();
            return self.finish_update(tid, my, tkt);
        }

        let mut iters = 0u64;
        let mut hp_turn = 0;
        while mn != my {
            let next = if mn.is_null() {
                None
            } else {
                let n = protected_next(self.node(mn), &self.hz, tid, HP_TRAV + (hp_turn & 1));
                hp_turn += 1;
                n
            };
            let Some(next) = next else {
                // Replica is missing or its head has been reclaimed.
                match self.get_combined(tkt, tid) {
                    None => {
                        // The current slot already holds our node. Keep the
                        // replica consistent with how far it got.
                        self.set_head(c, mn);
                        c.lock.exclusive_unlock();
                        self.record_apply(iters, held);
                        return self.finish_update(tid, my, tkt);
                    }
                    Some(src) => {
                        held += 1;
                        self.update_head_obj(c, &self.combs[src]);
                        self.combs[src].lock.shared_unlock(tid);
                        held -= 1;
                        mn = self.head_of(c);
                        continue;
                    }
                }
            };
            let node = self.node(next);
            // SAFETY: exclusive lock on c; a non-null head implies a replica.
            let obj = unsafe { (*c.obj.get()).as_deref_mut() }.expect("slot head without replica");
            let r = node.apply(obj);
            node.result.store(r, self.probes());
            iters += 1;
            mn = next;
        }
        self.set_head(c, my);
        self.record_apply(iters, held);
        c.lock.downgrade_to_handover();
        self.pause(PausePoint::AfterDowngrade, tid);

        let mine = pack(ci, tkt);
        let mut attempts = 0;
        loop {
            let cur = self.cur_comb.load(SeqCst);
            let (idx, head_tkt) = unpack(cur);
            if head_tkt >= tkt {
                c.lock.handover_unlock();
                break;
            }
            attempts += 1;
            if attempts == self.max_threads + 1 {
                if let Some(p) = self.probes() {
                    Probes::bump(&p.cas_loop_overruns);
                }
            }
            let old = &*self.combs[idx];
            if !old.lock.shared_try_lock(tid) {
                continue;
            }
            if self.cur_comb.load(SeqCst) != cur {
                old.lock.shared_unlock(tid);
                continue;
            }
            self.pause(PausePoint::BeforeCurCombCas, tid);
            let tail_tkt = self.probes().map(|_| self.queue.tail_ticket(tid, &self.hz));
            if self
                .cur_comb
                .compare_exchange(cur, mine, SeqCst, SeqCst)
                .is_ok()
            {
                if let (Some(p), Some(tail)) = (self.probes(), tail_tkt) {
                    self.record_transition(p, cur, mine, tail);
                }
                // Nodes from the old head up to ours are no longer needed by
                // the current slot. The old slot still pins its head while we
                // hold it.
                let mut n = self.head_of(old);
                while n != my {
                    let nx = self.node(n).next.load(SeqCst);
                    // SAFETY: this transition owns the range exclusively.
                    unsafe { self.reclaim.retire(tid, n, &self.hz) };
                    n = nx;
                }
                old.lock.handover_unlock();
                old.lock.shared_unlock(tid);
                break;
            }
            old.lock.shared_unlock(tid);
        }
        self.finish_update(tid, my, tkt)
    }

    fn record_apply(&self, iters: u64, held: u64) {
        if let Some(p) = self.probes() {
            Probes::max(&p.max_apply_iterations, iters);
            if iters > self.apply_loop_bound() {
                Probes::bump(&p.loop_violations);
            }
            Probes::max(&p.max_slots_held, held);
            if held > 2 {
                Probes::bump(&p.slot_budget_violations);
            }
        }
    }

    fn record_transition(&self, p: &Probes, old: u64, new: u64, tail_tkt: u64) {
        Probes::bump(&p.transitions);
        let (oi, ot) = unpack(old);
        let (ni, nt) = unpack(new);
        if nt <= ot || ni == oi {
            Probes::bump(&p.monotonic_violations);
        }
        let lag = tail_tkt.saturating_sub(nt);
        Probes::max(&p.max_lag, lag);
        if lag > self.max_threads as u64 {
            Probes::bump(&p.lag_violations);
        }
    }

    fn finish_update(&self, tid: usize, my: *mut Node<C>, tkt: u64) -> u64 {
        let node = self.node(my);
        let r = node.result.load();
        if let Some(p) = self.probes() {
            let (_, head_tkt) = self.current();
            if head_tkt < tkt || !node.result.is_ready() {
                Probes::bump(&p.visibility_violations);
            }
        }
        self.hz.clear_all(tid);
        r
    }

    pub(crate) fn apply_read_op<F>(&self, tid: usize, f: F) -> u64
    where
        F: Fn(&C) -> u64 + Send + Sync + 'static,
    {
        debug_assert!(self.registry[tid].load(SeqCst));
        let mut f = Some(f);
        let mut my: *mut Node<C> = ptr::null_mut();
        let mut tkt = 0;
        let bound = self.max_read_tries + self.max_threads;
        let mut i = 0;
        loop {
            if i == self.max_read_tries && my.is_null() {
                let func = f.take().unwrap();
                my = self
                    .reclaim
                    .alloc_node(Operation::Read(Box::new(func)), tid);
                self.hz.set(tid, HP_MINE, my);
                // SAFETY: fresh and protected.
                unsafe { self.queue.enqueue(my, tid, &self.hz) };
                tkt = self.node(my).ticket();
                if let Some(p) = self.probes() {
                    Probes::bump(&p.read_fallbacks);
                }
            }
            let cur = self.cur_comb.load(SeqCst);
            let (idx, _) = unpack(cur);
            let cc = &*self.combs[idx];
            if cc.lock.shared_try_lock(tid) {
                if self.cur_comb.load(SeqCst) == cur {
                    // SAFETY: shared lock on the current slot.
                    let obj = unsafe { (*cc.obj.get()).as_deref() }.expect("current slot without replica");
                    let r = match &f {
                        Some(f) => f(obj),
                        None => match &self.node(my).op {
                            Operation::Read(g) => g(obj),
                            _ => unreachable!(),
                        },
                    };
                    cc.lock.shared_unlock(tid);
                    self.hz.clear(tid, HP_MINE);
                    return r;
                }
                cc.lock.shared_unlock(tid);
            }
            i += 1;
            if i >= bound && !my.is_null() {
                // A writer must have completed our read by now.
                let (_, head_tkt) = self.current();
                if head_tkt >= tkt {
                    let r = self.node(my).result.load();
                    if let Some(p) = self.probes() {
                        Probes::bump(&p.read_helped);
                    }
                    self.hz.clear(tid, HP_MINE);
                    return r;
                }
                if i == bound {
                    if let Some(p) = self.probes() {
                        Probes::bump(&p.read_overruns);
                    }
                }
            }
        }
    }

    // ---- exclusive-access maintenance ----

    /// Counts live nodes by role. Needs exclusive access: handles of live
    /// threads borrow the construct, so only dead (forgotten) ones remain.
    pub fn census(&mut self) -> Census {
        let (cur, _) = self.current();
        let tail = self.queue.tail_ptr();
        let mut chain = BTreeSet::new();
        let mut n = self.head_of(&self.combs[cur]);
        loop {
            chain.insert(n as usize);
            if n == tail {
                break;
            }
            // SAFETY: nodes between the current head and the tail are live.
            n = unsafe { (*n).next.load(SeqCst) };
        }
        let pinned = self
            .combs
            .iter()
            .map(|c| self.head_of(c))
            .filter(|h| !h.is_null() && !chain.contains(&(*h as usize)))
            .map(|h| h as usize)
            .collect::<BTreeSet<_>>()
            .len();
        let live_nodes = self.reclaim.live_nodes.load(SeqCst);
        let per_thread = (0..self.max_threads).map(|t| self.reclaim.counts(t)).collect();
        Census {
            live_nodes,
            chain: chain.len(),
            pinned,
            unreclaimed: live_nodes.saturating_sub(chain.len() + pinned),
            live_replicas: self.reclaim.live_replicas.load(SeqCst),
            per_thread,
        }
    }

    /// Brings the construct to its minimal state: pending nodes are applied
    /// to the current replica, every other replica is dropped and every node
    /// but the tail is freed. Thread ids held by dead handles stay taken.
    pub fn quiesce(&mut self) {
        let (cur, _) = self.current();
        let tail = self.queue.tail_ptr();
        {
            let c = &self.combs[cur];
            let mut n = self.head_of(c);
            // SAFETY: exclusive access to the whole construct.
            let obj = unsafe { (*c.obj.get()).as_deref_mut() }.expect("current slot without replica");
            while n != tail {
                n = unsafe { (*n).next.load(SeqCst) };
                let node = unsafe { &*n };
                let r = node.apply(obj);
                node.result.store(r, None);
            }
        }
        let all = self.all_nodes();
        for &n in all.iter() {
            let n = n as *mut Node<C>;
            if n != tail {
                // SAFETY: collected exactly once; no users remain.
                unsafe { self.reclaim.free_now(n) };
            }
        }
        let mut dropped = 0;
        for (i, c) in self.combs.iter_mut().enumerate() {
            let c = &mut **c;
            if i == cur {
                *c.head.get_mut() = tail;
                c.lock.reset(true);
            } else {
                *c.head.get_mut() = ptr::null_mut();
                if c.obj.get_mut().take().is_some() {
                    dropped += 1;
                }
                c.lock.reset(false);
            }
        }
        self.reclaim.live_replicas.fetch_sub(dropped, SeqCst);
        // SAFETY: the tail survives and is now the only node.
        unsafe {
            (*tail).next.store(ptr::null_mut(), SeqCst);
            (*tail).refcnt.store(1, SeqCst);
            (*tail).pred_unlinked.store(true, SeqCst);
        }
        for t in 0..self.max_threads {
            self.queue.clear_announce(t);
            self.hz.clear_all(t);
        }
        let tail_tkt = unsafe { (*tail).ticket() };
        self.cur_comb.store(pack(cur, tail_tkt), SeqCst);
    }
}

impl<C> Cx<C> {
    /// Every node still allocated: buffered retirees, plus whatever is
    /// reachable from slot heads, the tail and the announce array.
    /// Quarantined nodes are released on the way.
    fn all_nodes(&mut self) -> BTreeSet<usize> {
        let mut buffered = Vec::new();
        self.reclaim.take_all(&mut buffered);
        let mut seen: BTreeSet<usize> = buffered.iter().map(|&n| n as usize).collect();
        let mut starts: Vec<*mut Node<C>> = self.combs.iter_mut().map(|c| *c.head.get_mut()).collect();
        starts.push(self.queue.tail_ptr());
        for t in 0..self.registry.len() {
            starts.push(self.queue.announced(t));
        }
        for mut n in starts {
            while !n.is_null() && seen.insert(n as usize) {
                // SAFETY: no concurrent users, and a node reachable through
                // a link that is not a self-link has not been freed.
                let nx = unsafe { (*n).next.load(SeqCst) };
                if nx == n {
                    break;
                }
                n = nx;
            }
        }
        seen
    }
}

impl<C> Drop for Cx<C> {
    fn drop(&mut self) {
        for n in self.all_nodes() {
            // SAFETY: each node collected once.
            unsafe { self.reclaim.free_now(n as *mut Node<C>) };
        }
    }
}

/// A registered thread id. Dropping it releases the id after scanning the
/// thread's retirement buffer.
pub struct ThreadHandle<'a, C: Clone + Send + Sync + 'static> {
    cx: &'a Cx<C>,
    tid: usize,
    _not_sync: PhantomData<Cell<()>>,
}

impl<'a, C: Clone + Send + Sync + 'static> ThreadHandle<'a, C> {
    pub fn tid(&self) -> usize {
        self.tid
    }

    pub fn construct(&self) -> &'a Cx<C> {
        self.cx
    }

    /// Applies `f` to the object. `f` may run several times on different
    /// replicas and on other threads, so it must be deterministic.
    pub fn apply_update<F>(&self, f: F) -> u64
    where
        F: Fn(&mut C) -> u64 + Send + Sync + 'static,
    {
        self.cx.apply_update_op(self.tid, Operation::Update(Box::new(f)))
    }

    pub fn apply_read<F>(&self, f: F) -> u64
    where
        F: Fn(&C) -> u64 + Send + Sync + 'static,
    {
        self.cx.apply_read_op(self.tid, f)
    }

    /// Leaks the id as if the thread had died: its buffers are never scanned
    /// again and the id stays taken.
    pub fn abandon(self) {
        core::mem::forget(self);
    }
}

impl<C: Clone + Send + Sync + 'static> Drop for ThreadHandle<'_, C> {
    fn drop(&mut self) {
        self.cx.deregister(self.tid);
    }
}
