use std::sync::Barrier;

use cx_core::adapters::{AvlSet, HashSet1000, SequentialSet, SortedListSet, WaitFreeSet};
use cx_core::{Config, Cx};

struct Yield;

impl cx_core::Platform for Yield {
    fn now_nanos(&self) -> u64 {
        0
    }

    fn relax(&self) {
        std::thread::yield_now();
    }
}

fn config(threads: usize) -> Config {
    Config::new(threads)
        .probes(true)
        .tracking(true)
        .size_circbuff(16)
        .platform(std::sync::Arc::new(Yield))
}

#[test]
fn counter_under_mixed_load() {
    const THREADS: usize = 4;
    const OPS: u64 = 2000;
    let mut cx = Cx::new(0u64, config(THREADS)).unwrap();
    let start = Barrier::new(THREADS);
    std::thread::scope(|s| {
        for t in 0..THREADS as u64 {
            let (cx, start) = (&cx, &start);
            s.spawn(move || {
                let h = cx.register().unwrap();
                start.wait();
                let mut last = 0;
                for i in 0..OPS {
                    if (i + t) % 3 == 0 {
                        // Reads never go backwards.
                        let v = h.apply_read(|x| *x);
                        assert!(v >= last);
                        last = v;
                    } else {
                        let before = h.apply_update(|x| {
                            *x += 1;
                            *x - 1
                        });
                        assert!(before >= last);
                        last = before + 1;
                    }
                }
            });
        }
    });
    let updates: u64 = (0..THREADS as u64).map(|t| (0..OPS).filter(|i| (i + t) % 3 != 0).count() as u64).sum();
    assert_eq!(cx.register().unwrap().apply_read(|x| *x), updates);
    let p = cx.probe_report();
    assert_eq!(p.violations(), 0, "{p:?}");
    assert!(p.transitions > 0);
    assert_eq!(cx.reclaim_stats().uaf_detected, 0);
    cx.quiesce();
    let st = cx.reclaim_stats();
    assert_eq!((st.live_nodes, st.live_replicas), (1, 1), "{st:?}");
}

fn set_churn<S: SequentialSet + Default>() {
    const THREADS: usize = 3;
    let set = WaitFreeSet::new(S::default(), config(THREADS).max_objs(3)).unwrap();
    let start = Barrier::new(THREADS);
    std::thread::scope(|s| {
        for t in 0..THREADS as u64 {
            let (set, start) = (&set, &start);
            s.spawn(move || {
                let h = set.register().unwrap();
                start.wait();
                // Each thread owns keys congruent to t mod THREADS.
                for round in 0..300u64 {
                    let k = t + THREADS as u64 * (round % 20);
                    assert_eq!(h.add(k), round < 20, "add {k} in round {round}");
                    assert!(h.contains(k));
                    if round >= 20 {
                        assert!(h.remove(k));
                        assert!(h.add(k));
                    }
                }
            });
        }
    });
    let h = set.register().unwrap();
    assert_eq!(h.len(), 60);
    drop(h);
    let p = set.construct().probe_report();
    assert_eq!(p.violations(), 0, "{p:?}");
    assert_eq!(set.construct().reclaim_stats().uaf_detected, 0);
}

#[test]
fn blocking_sets_under_churn() {
    set_churn::<SortedListSet>();
    set_churn::<HashSet1000>();
    set_churn::<AvlSet>();
}

#[test]
fn abandoned_handle_strands_at_most_its_buffer() {
    let mut cx = Cx::new(0u64, config(2)).unwrap();
    let dead = cx.register().unwrap();
    for _ in 0..40 {
        dead.apply_update(|x| {
            *x += 1;
            0
        });
    }
    dead.abandon();
    let live = cx.register().unwrap();
    for _ in 0..200 {
        live.apply_update(|x| {
            *x += 1;
            0
        });
    }
    drop(live);
    let c = cx.census();
    assert!(c.unreclaimed <= 2 * 16, "{c:?}");
    assert_eq!(cx.reclaim_stats().uaf_detected, 0);
}
