//! Environment plumbing: time and backoff for the construct, plus the pause
//! points used by fault-injection tests.

use core::fmt;
use core::str::FromStr;

/// Services the construct cannot get from `core` alone.
pub trait Platform: Send + Sync {
    /// Monotonic time in nanoseconds. Only used by the timed fast path.
    fn now_nanos(&self) -> u64;

    /// Called between passes of a blocking slot scan.
    fn relax(&self) {
        core::hint::spin_loop();
    }
}

/// Named locations inside `apply_update` where a test may suspend a thread.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum PausePoint {
    AfterEnqueue,
    AfterExclusiveLock,
    BeforeCurCombCas,
    AfterDowngrade,
}

impl PausePoint {
    pub const ALL: [PausePoint; 4] = [
        PausePoint::AfterEnqueue,
        PausePoint::AfterExclusiveLock,
        PausePoint::BeforeCurCombCas,
        PausePoint::AfterDowngrade,
    ];

    pub fn name(self) -> &'static str {
        match self {
            PausePoint::AfterEnqueue => "after-enqueue",
            PausePoint::AfterExclusiveLock => "after-exclusive-lock",
            PausePoint::BeforeCurCombCas => "before-curcomb-cas",
            PausePoint::AfterDowngrade => "after-downgrade",
        }
    }
}

impl fmt::Display for PausePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct UnknownPausePoint;

impl fmt::Display for UnknownPausePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("unknown pause point")
    }
}

impl FromStr for PausePoint {
    type Err = UnknownPausePoint;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        PausePoint::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or(UnknownPausePoint)
    }
}

/// Callback invoked at every pause point. Implementations may block.
pub trait Hooks: Send + Sync {
    fn pause(&self, point: PausePoint, tid: usize);
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for p in PausePoint::ALL {
            assert_eq!(p.name().parse::<PausePoint>(), Ok(p));
        }
        assert!("after-lunch".parse::<PausePoint>().is_err());
    }
}
