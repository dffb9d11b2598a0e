use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::Parser;
use cx::bench::{self, BenchConfig, BenchError, Impl, Mode, Structure};

#[global_allocator]
static ALLOC: cx::alloc::TrackingAllocator = cx::alloc::TrackingAllocator;

/// Set microbenchmark for the universal construct and its baselines.
#[derive(Parser, Debug)]
#[command(name = "cx-bench")]
struct Args {
    /// cx, cxblock-K, cxtimed or globallock.
    #[arg(long = "impl", default_value = "cx")]
    implementation: Impl,
    #[arg(long, value_enum, default_value_t = Structure::Tree)]
    structure: Structure,
    #[arg(long, default_value_t = 10_000)]
    keys: u64,
    /// Percentage of operations that are updates. Ignored in memory mode.
    #[arg(long, default_value_t = 10)]
    update_ratio: u32,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long, default_value_t = 2.0)]
    duration_secs: f64,
    /// Defaults to 5 in throughput mode and 2 in memory mode.
    #[arg(long)]
    runs: Option<usize>,
    /// Override the slot count.
    #[arg(long)]
    max_objs: Option<usize>,
    #[arg(long, value_enum, default_value_t = Mode::Throughput)]
    mode: Mode,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also write the results here.
    #[arg(long)]
    csv: Option<PathBuf>,
}

fn config(a: &Args) -> Result<BenchConfig, BenchError> {
    if !(a.duration_secs.is_finite() && a.duration_secs > 0.0) {
        return Err(BenchError::Usage(format!("duration {} must be positive", a.duration_secs)));
    }
    let cfg = BenchConfig {
        implementation: a.implementation,
        structure: a.structure,
        keys: a.keys,
        update_ratio: a.update_ratio,
        threads: a.threads,
        duration: Duration::from_secs_f64(a.duration_secs),
        runs: a.runs.unwrap_or(match a.mode {
            Mode::Throughput => 5,
            Mode::Memory => 2,
        }),
        max_objs: a.max_objs,
        mode: a.mode,
        seed: a.seed,
    };
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let args = Args::parse();
    let cfg = match config(&args) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("cx-bench: {e}");
            return ExitCode::from(2);
        }
    };
    let result = match bench::run(&cfg) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("cx-bench: {e}");
            return ExitCode::from(if matches!(e, BenchError::Usage(_)) { 2 } else { 1 });
        }
    };
    let results = [result];
    let written = bench::emit_csv(&results, std::io::stdout().lock())
        .and_then(|()| args.csv.as_deref().map_or(Ok(()), |p| bench::write_csv(&results, p)));
    match written {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("cx-bench: {e}");
            ExitCode::from(1)
        }
    }
}
