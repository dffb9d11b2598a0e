use std::sync::{Arc, Barrier, Mutex};

use cx::core::adapters::{AvlSet, HashSet1000, SequentialSet, SortedListSet};
use cx::core::Config;
use cx::harness::{check_linearizable, random_ops, record_history, JitterHooks, Recorder, SetModel, SetOp};
use rand::rngs::SmallRng;
use rand::SeedableRng;

fn config(seed: u64) -> Config {
    Config::new(3)
        .probes(true)
        .tracking(true)
        .hooks(Arc::new(JitterHooks::new(seed, 2)))
}

fn suite<S: SequentialSet + Default>(seed: u64, n: usize) {
    let mut rng = SmallRng::seed_from_u64(seed);
    for i in 0..n {
        let ops = random_ops(&mut rng, 3, 6, 3);
        let h = record_history(S::default(), config(seed ^ i as u64), &ops).unwrap();
        let v = check_linearizable(&h, &SetModel).unwrap();
        assert!(v.is_linearizable(), "history {i}: {v:?}");
    }
}

#[test]
fn list_histories() {
    suite::<SortedListSet>(1, 500);
}

#[test]
fn hash_histories() {
    suite::<HashSet1000>(2, 500);
}

#[test]
fn tree_histories() {
    suite::<AvlSet>(3, 500);
}

#[test]
fn mutex_baseline_histories() {
    let mut rng = SmallRng::seed_from_u64(4);
    for _ in 0..200 {
        let ops = random_ops(&mut rng, 3, 6, 3);
        let set = Mutex::new(AvlSet::default());
        let rec = Recorder::new();
        let start = Barrier::new(3);
        std::thread::scope(|s| {
            for (tid, list) in ops.iter().enumerate() {
                let (set, rec, start) = (&set, &rec, &start);
                s.spawn(move || {
                    start.wait();
                    for &(op, key) in list {
                        rec.invoke(tid, op, key);
                        let mut g = set.lock().unwrap();
                        let r = match op {
                            SetOp::Add => g.insert(key),
                            SetOp::Remove => g.erase(key),
                            SetOp::Contains => g.find(key),
                        };
                        drop(g);
                        rec.respond(tid, op, key, r);
                    }
                });
            }
        });
        assert!(check_linearizable(&rec.events(), &SetModel).unwrap().is_linearizable());
    }
}
