//! Hand-built histories with known verdicts. Lines are
//! `kind,op,key,result,tid,ts`.

use cx::harness::{check_linearizable, read_history, EventKind, HarnessError, SetModel, Verdict};

fn verdict(text: &str) -> Verdict {
    let h = read_history(text.trim().as_bytes()).unwrap();
    check_linearizable(&h, &SetModel).unwrap()
}

fn ok(text: &str) {
    assert!(verdict(text).is_linearizable(), "expected linearizable:\n{text}");
}

/// Expects a violation whose minimal prefix ends at timestamp `last`.
fn bad(text: &str, last: u64) {
    match verdict(text) {
        Verdict::Violation { prefix } => {
            let end = prefix.last().unwrap();
            assert_eq!(end.kind, EventKind::Response);
            assert_eq!(end.ts, last, "prefix {prefix:?}");
        }
        Verdict::Linearizable => panic!("expected a violation:\n{text}"),
    }
}

#[test]
fn empty_history() {
    ok("");
}

#[test]
fn sequential_add_contains_remove() {
    ok("
inv,add,1,,0,0
res,add,1,true,0,1
inv,contains,1,,0,2
res,contains,1,true,0,3
inv,remove,1,,0,4
res,remove,1,true,0,5
inv,contains,1,,0,6
res,contains,1,false,0,7
");
}

#[test]
fn sequential_lookup_of_missing_key_claims_present() {
    bad("
inv,add,1,,0,0
res,add,1,true,0,1
inv,contains,2,,0,2
res,contains,2,true,0,3
", 3);
}

#[test]
fn double_add_both_succeed_sequentially() {
    bad("
inv,add,1,,0,0
res,add,1,true,0,1
inv,add,1,,1,2
res,add,1,true,1,3
", 3);
}

#[test]
fn concurrent_adds_one_wins() {
    ok("
inv,add,1,,0,0
inv,add,1,,1,1
res,add,1,false,0,2
res,add,1,true,1,3
");
}

#[test]
fn concurrent_adds_both_win() {
    bad("
inv,add,1,,0,0
inv,add,1,,1,1
res,add,1,true,0,2
res,add,1,true,1,3
", 3);
}

#[test]
fn overlapping_lookup_may_see_either_state() {
    // contains overlaps the add: both answers are legal.
    for seen in ["true", "false"] {
        ok(&format!("
inv,add,2,,0,0
inv,contains,2,,1,1
res,contains,2,{seen},1,2
res,add,2,true,0,3
"));
    }
}

#[test]
fn stale_read_after_completed_remove() {
    bad("
inv,add,3,,0,0
res,add,3,true,0,1
inv,remove,3,,1,2
res,remove,3,true,1,3
inv,contains,3,,0,4
res,contains,3,true,0,5
", 5);
}

#[test]
fn pending_add_explains_a_later_read() {
    // Thread 0 never responds, but its add may take effect.
    ok("
inv,add,1,,0,0
inv,contains,1,,1,1
res,contains,1,true,1,2
");
}

#[test]
fn pending_add_may_also_be_dropped() {
    ok("
inv,add,1,,0,0
inv,contains,1,,1,1
res,contains,1,false,1,2
inv,contains,1,,1,3
res,contains,1,false,1,4
");
}

#[test]
fn reads_flip_back_without_a_writer() {
    // One pending add cannot explain present-then-absent.
    bad("
inv,add,1,,0,0
inv,contains,1,,1,1
res,contains,1,true,1,2
inv,contains,1,,2,3
res,contains,1,false,2,4
", 4);
}

#[test]
fn three_threads_interleaved() {
    ok("
inv,add,1,,0,0
inv,add,2,,1,1
inv,remove,1,,2,2
res,add,2,true,1,3
res,remove,1,true,2,4
res,add,1,true,0,5
inv,contains,1,,1,6
res,contains,1,false,1,7
inv,contains,2,,0,8
res,contains,2,true,0,9
");
}

#[test]
fn remove_must_follow_add_in_real_time() {
    // The remove returned before the add began, so it cannot have
    // removed that key.
    bad("
inv,remove,5,,1,0
res,remove,5,true,1,1
inv,add,5,,0,2
res,add,5,true,0,3
", 1);
}

#[test]
fn violation_prefix_is_minimal_not_full() {
    bad("
inv,contains,1,,0,0
res,contains,1,true,0,1
inv,add,1,,0,2
res,add,1,true,0,3
inv,add,2,,1,4
res,add,2,true,1,5
", 1);
}

#[test]
fn malformed_histories_are_rejected() {
    for text in [
        "res,add,1,true,0,0",
        "inv,add,1,,0,0\ninv,add,2,,0,1",
        "inv,add,1,,0,0\nres,remove,1,true,0,1",
        "inv,add,1,,0,0\nres,add,1,true,0,0",
    ] {
        let h = read_history(text.as_bytes()).unwrap();
        assert!(
            matches!(check_linearizable(&h, &SetModel), Err(HarnessError::Malformed(_))),
            "{text}"
        );
    }
}
