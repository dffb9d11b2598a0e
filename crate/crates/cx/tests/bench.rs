use std::process::Command;
use std::time::Duration;

use cx::bench::{self, parse_csv, BenchConfig, BenchError, Impl, Mode, Structure};

const BIN: &str = env!("CARGO_BIN_EXE_cx-bench");

fn short(implementation: Impl, structure: Structure) -> BenchConfig {
    BenchConfig {
        implementation,
        structure,
        keys: 1000,
        threads: 2,
        duration: Duration::from_millis(200),
        runs: 1,
        ..BenchConfig::default()
    }
}

#[test]
fn update_fraction_matches_ratio() {
    for ratio in [0, 10, 50, 100] {
        let cfg = BenchConfig { update_ratio: ratio, ..short(Impl::Cx, Structure::Hash) };
        let s = bench::run_once(&cfg, 0).unwrap();
        assert!(s.ops > 1000, "{s:?}");
        let f = s.update_fraction() * 100.0;
        assert!((f - ratio as f64).abs() <= 1.0, "ratio {ratio}: measured {f}");
    }
}

#[test]
fn updates_preserve_cardinality() {
    let impls = [Impl::Cx, Impl::CxBlock(2), Impl::CxTimed, Impl::GlobalLock];
    let structures = [Structure::Linkedlist, Structure::Hash, Structure::Tree];
    for i in impls {
        for st in structures {
            for threads in [1, 2] {
                let cfg = BenchConfig { update_ratio: 50, threads, ..short(i, st) };
                let s = bench::run_once(&cfg, 0).unwrap();
                assert_eq!(s.final_len, 1000, "{i} {st}");
                if threads == 1 {
                    // Alone, every key is present whenever it is drawn.
                    assert_eq!(s.removes_hit, s.updates, "{i} {st}");
                    assert_eq!(s.lookups_hit, s.ops - s.updates, "{i} {st}");
                }
            }
        }
    }
}

#[test]
fn memory_mode_requires_the_tracker() {
    let cfg = BenchConfig { mode: Mode::Memory, ..short(Impl::Cx, Structure::Tree) };
    assert!(matches!(bench::run(&cfg), Err(BenchError::NoTracker)));
}

#[test]
fn cli_writes_parseable_csv() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("out.csv");
    let out = Command::new(BIN)
        .args(["--impl", "cxblock-3", "--structure", "linkedlist", "--keys", "500", "--threads", "2"])
        .args(["--duration-secs", "0.1", "--runs", "3", "--update-ratio", "20", "--csv"])
        .arg(&path)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let from_stdout = parse_csv(&out.stdout[..]).unwrap();
    let from_file = parse_csv(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(from_stdout, from_file);
    let r = &from_file[0];
    assert_eq!((r.implementation, r.structure, r.keys, r.update_ratio, r.threads), (Impl::CxBlock(3), Structure::Linkedlist, 500, 20, 2));
    assert_eq!(r.runs.len(), 3);
    assert_eq!(r.ops_per_sec, bench::median(r.runs.iter().map(|x| x.ops_per_sec).collect()));
    assert!(r.peak_bytes.is_none());
}

#[test]
fn cli_memory_mode_reports_peak() {
    let out = Command::new(BIN)
        .args(["--mode", "memory", "--keys", "2000", "--threads", "2", "--duration-secs", "0.1"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = parse_csv(&out.stdout[..]).unwrap().remove(0);
    assert_eq!(r.update_ratio, 100);
    assert_eq!(r.runs.len(), 2);
    assert!(r.peak_bytes.unwrap() > 2000 * 8);
}

#[test]
fn cli_usage_errors_exit_2() {
    for args in [
        &["--update-ratio", "150"][..],
        &["--runs", "2"],
        &["--impl", "cxblock-1"],
        &["--threads", "0"],
        &["--structure", "skiplist"],
        &["--duration-secs", "-1"],
    ] {
        let out = Command::new(BIN).args(args).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
}
