use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BenchError, BenchResult, RunRecord};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    #[serde(rename = "impl")]
    implementation: String,
    structure: String,
    keys: u64,
    update_ratio: u32,
    threads: usize,
    /// 1-based run number, or `median`.
    run: String,
    ops_per_sec: f64,
    peak_bytes: Option<u64>,
}

const MEDIAN: &str = "median";

/// Writes one row per run plus a `median` row per result.
pub fn emit_csv<W: Write>(results: &[BenchResult], out: W) -> Result<(), BenchError> {
    let mut w = csv::Writer::from_writer(out);
    for r in results {
        let row = |run: String, ops_per_sec: f64, peak_bytes: Option<u64>| Row {
            implementation: r.implementation.to_string(),
            structure: r.structure.to_string(),
            keys: r.keys,
            update_ratio: r.update_ratio,
            threads: r.threads,
            run,
            ops_per_sec,
            peak_bytes,
        };
        for (i, run) in r.runs.iter().enumerate() {
            w.serialize(row((i + 1).to_string(), run.ops_per_sec, run.peak_bytes))?;
        }
        w.serialize(row(MEDIAN.into(), r.ops_per_sec, r.peak_bytes))?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_csv(results: &[BenchResult], path: &Path) -> Result<(), BenchError> {
    emit_csv(results, std::fs::File::create(path)?)
}

/// Inverse of [`emit_csv`].
pub fn parse_csv<R: Read>(input: R) -> Result<Vec<BenchResult>, BenchError> {
    let bad = |m: String| BenchError::Parse(m);
    let mut out = Vec::new();
    let mut runs: Vec<RunRecord> = Vec::new();
    for row in csv::Reader::from_reader(input).deserialize() {
        let row: Row = row?;
        if row.run == MEDIAN {
            out.push(BenchResult {
                implementation: row.implementation.parse().map_err(bad)?,
                structure: row.structure.parse().map_err(bad)?,
                keys: row.keys,
                update_ratio: row.update_ratio,
                threads: row.threads,
                runs: std::mem::take(&mut runs),
                ops_per_sec: row.ops_per_sec,
                peak_bytes: row.peak_bytes,
            });
            continue;
        }
        let n: usize = row.run.parse().map_err(|_| bad(format!("run `{}`", row.run)))?;
        if n != runs.len() + 1 {
            return Err(bad(format!("run {n} out of order")));
        }
        runs.push(RunRecord {
            ops_per_sec: row.ops_per_sec,
            peak_bytes: row.peak_bytes,
        });
    }
    if !runs.is_empty() {
        return Err(bad("runs without a median row".into()));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bench::{Impl, Structure};
    use proptest::prelude::*;

    fn result() -> impl Strategy<Value = BenchResult> {
        let imp = prop_oneof![
            Just(Impl::Cx),
            Just(Impl::CxTimed),
            Just(Impl::GlobalLock),
            (2usize..64).prop_map(Impl::CxBlock),
        ];
        let st = prop_oneof![Just(Structure::Linkedlist), Just(Structure::Hash), Just(Structure::Tree)];
        let run = (0.0f64..1e9, proptest::option::of(any::<u64>()))
            .prop_map(|(ops_per_sec, peak_bytes)| RunRecord { ops_per_sec, peak_bytes });
        (imp, st, 1u64..1_000_000, 0u32..=100, 1usize..64, proptest::collection::vec(run, 1..6), 0.0f64..1e9)
            .prop_map(|(implementation, structure, keys, update_ratio, threads, runs, med)| {
                let peak_bytes = runs.iter().filter_map(|r| r.peak_bytes).max();
                BenchResult { implementation, structure, keys, update_ratio, threads, runs, ops_per_sec: med, peak_bytes }
            })
    }

    proptest! {
        #[test]
        fn round_trip(rs in proptest::collection::vec(result(), 0..4)) {
            let mut buf = Vec::new();
            emit_csv(&rs, &mut buf).unwrap();
            prop_assert_eq!(parse_csv(&buf[..]).unwrap(), rs);
        }
    }

    #[test]
    fn header_and_median_row() {
        let r = BenchResult {
            implementation: Impl::CxBlock(4),
            structure: Structure::Hash,
            keys: 10,
            update_ratio: 50,
            threads: 2,
            runs: vec![RunRecord { ops_per_sec: 1.5, peak_bytes: None }],
            ops_per_sec: 1.5,
            peak_bytes: None,
        };
        let mut buf = Vec::new();
        emit_csv(&[r], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines[0], "impl,structure,keys,update_ratio,threads,run,ops_per_sec,peak_bytes");
        assert_eq!(lines[1], "cxblock-4,hash,10,50,2,1,1.5,");
        assert_eq!(lines[2], "cxblock-4,hash,10,50,2,median,1.5,");
    }

    #[test]
    fn rejects_dangling_runs() {
        let text = "impl,structure,keys,update_ratio,threads,run,ops_per_sec,peak_bytes\ncx,tree,1,0,1,1,2.0,\n";
        assert!(matches!(parse_csv(text.as_bytes()), Err(BenchError::Parse(_))));
    }
}
