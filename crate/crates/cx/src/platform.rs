use std::sync::{Arc, OnceLock};
use std::time::Instant;

use cx_core::{Config, Platform};

/// Environment variable that turns node poisoning on (`1`) or off (`0`).
/// Unset means on in debug builds and off in release builds.
pub const TRACKING_ENV: &str = "CX_DEBUG_TRACKING";
/// Same for the invariant probes.
pub const PROBES_ENV: &str = "CX_PROBES";

#[derive(Debug, Default)]
pub struct StdPlatform;

fn epoch() -> Instant {
    static EPOCH: OnceLock<Instant> = OnceLock::new();
    *EPOCH.get_or_init(Instant::now)
}

impl Platform for StdPlatform {
    fn now_nanos(&self) -> u64 {
        epoch().elapsed().as_nanos() as u64
    }

    fn relax(&self) {
        std::thread::yield_now();
    }
}

pub(crate) fn flag(name: &str) -> Option<bool> {
    match std::env::var(name).ok()?.trim() {
        "1" | "true" | "on" | "yes" => Some(true),
        "0" | "false" | "off" | "no" => Some(false),
        _ => None,
    }
}

/// Default configuration with the std platform attached and tracking and
/// probes taken from the environment.
pub fn config_from_env(max_threads: usize) -> Config {
    let mut c = Config::new(max_threads).platform(Arc::new(StdPlatform));
    if let Some(t) = flag(TRACKING_ENV) {
        c = c.tracking(t);
    }
    if let Some(p) = flag(PROBES_ENV) {
        c = c.probes(p);
    }
    c
}
