use std::sync::Barrier;

use cx_core::adapters::{SequentialSet, WaitFreeSet};
use cx_core::Config;
use rand::Rng;

use super::{HarnessError, HistoryEvent, Recorder, SetOp};

/// Per-thread operation lists: `threads` lists of `1..=max_ops` operations
/// on keys `1..=keys`.
pub fn random_ops<R: Rng>(rng: &mut R, threads: usize, max_ops: usize, keys: u64) -> Vec<Vec<(SetOp, u64)>> {
    (0..threads)
        .map(|_| {
            let n = rng.gen_range(1..=max_ops);
            (0..n)
                .map(|_| {
                    let op = match rng.gen_range(0..3) {
                        0 => SetOp::Add,
                        1 => SetOp::Remove,
                        _ => SetOp::Contains,
                    };
                    (op, rng.gen_range(1..=keys))
                })
                .collect()
        })
        .collect()
}

/// Runs each list on its own thread against a fresh set (all threads start
/// together) and returns the recorded history. Hooks in `config`, such as
/// [`super::JitterHooks`], stay attached.
pub fn record_history<S: SequentialSet>(
    initial: S,
    config: Config,
    ops: &[Vec<(SetOp, u64)>],
) -> Result<Vec<HistoryEvent>, HarnessError> {
    if ops.len() > config.max_threads {
        return Err(HarnessError::Schedule(format!(
            "{} workers but max_threads = {}",
            ops.len(),
            config.max_threads
        )));
    }
    let set = WaitFreeSet::new(initial, config)?;
    let rec = Recorder::new();
    let start = Barrier::new(ops.len());
    std::thread::scope(|s| {
        for list in ops {
            let (set, rec, start) = (&set, &rec, &start);
            s.spawn(move || {
                let h = set.register().expect("thread id");
                let tid = h.tid();
                start.wait();
                for &(op, key) in list {
                    rec.invoke(tid, op, key);
                    let r = match op {
                        SetOp::Add => h.add(key),
                        SetOp::Remove => h.remove(key),
                        SetOp::Contains => h.contains(key),
                    };
                    rec.respond(tid, op, key, r);
                }
            });
        }
    });
    Ok(rec.events())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::{check_linearizable, SetModel};
    use cx_core::adapters::AvlSet;
    use rand::rngs::SmallRng;
    use rand::SeedableRng;

    #[test]
    fn shapes_and_round_trip() {
        let mut rng = SmallRng::seed_from_u64(3);
        for _ in 0..50 {
            let ops = random_ops(&mut rng, 3, 6, 3);
            assert_eq!(ops.len(), 3);
            assert!(ops.iter().all(|l| (1..=6).contains(&l.len())));
            assert!(ops.iter().flatten().all(|&(_, k)| (1..=3).contains(&k)));
            let h = record_history(AvlSet::default(), Config::new(3), &ops).unwrap();
            assert_eq!(h.len(), 2 * ops.iter().map(Vec::len).sum::<usize>());
            assert!(check_linearizable(&h, &SetModel).unwrap().is_linearizable());
        }
    }
}
