use std::fmt;
use std::str::FromStr;
use std::time::Duration;

use clap::ValueEnum;

use super::BenchError;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Impl {
    /// Wait-free: `max_objs = 2 * threads` unless overridden.
    Cx,
    /// Blocking, with this many slots.
    CxBlock(usize),
    /// `Cx` with the timed four-slot fast path.
    CxTimed,
    /// The sequential set behind one mutex.
    GlobalLock,
}

impl fmt::Display for Impl {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Impl::Cx => f.write_str("cx"),
            Impl::CxBlock(k) => write!(f, "cxblock-{k}"),
            Impl::CxTimed => f.write_str("cxtimed"),
            Impl::GlobalLock => f.write_str("globallock"),
        }
    }
}

impl FromStr for Impl {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "cx" => Ok(Impl::Cx),
            "cxtimed" => Ok(Impl::CxTimed),
            "globallock" => Ok(Impl::GlobalLock),
            _ => match s.strip_prefix("cxblock-").map(str::parse::<usize>) {
                Some(Ok(k)) => Ok(Impl::CxBlock(k)),
                _ => Err(format!(
                    "unknown implementation `{s}` (expected cx, cxblock-K, cxtimed or globallock)"
                )),
            },
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Structure {
    Linkedlist,
    Hash,
    Tree,
}

impl fmt::Display for Structure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.to_possible_value().unwrap().get_name())
    }
}

impl FromStr for Structure {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        <Structure as ValueEnum>::from_str(s, false)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    Throughput,
    Memory,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub implementation: Impl,
    pub structure: Structure,
    pub keys: u64,
    pub update_ratio: u32,
    pub threads: usize,
    pub duration: Duration,
    pub runs: usize,
    pub max_objs: Option<usize>,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for BenchConfig {
    fn default() -> Self {
        Self {
            implementation: Impl::Cx,
            structure: Structure::Tree,
            keys: 10_000,
            update_ratio: 10,
            threads: 1,
            duration: Duration::from_secs(2),
            runs: 5,
            max_objs: None,
            mode: Mode::Throughput,
            seed: 0,
        }
    }
}

impl BenchConfig {
    pub fn effective_update_ratio(&self) -> u32 {
        match self.mode {
            Mode::Memory => 100,
            Mode::Throughput => self.update_ratio,
        }
    }

    /// Slot count the construct will be built with (`None` for the lock
    /// baseline).
    pub fn slots(&self) -> Option<usize> {
        match self.implementation {
            Impl::GlobalLock => None,
            Impl::CxBlock(k) => Some(self.max_objs.unwrap_or(k)),
            Impl::Cx | Impl::CxTimed => Some(self.max_objs.unwrap_or(2 * self.threads)),
        }
    }

    pub fn validate(&self) -> Result<(), BenchError> {
        let usage = |m: String| Err(BenchError::Usage(m));
        if self.update_ratio > 100 {
            return usage(format!("update ratio {} is not a percentage", self.update_ratio));
        }
        if self.keys == 0 {
            return usage("keys must be at least 1".into());
        }
        if self.threads == 0 {
            return usage("threads must be at least 1".into());
        }
        if self.runs == 0 {
            return usage("runs must be at least 1".into());
        }
        if self.mode == Mode::Throughput && self.runs.is_multiple_of(2) {
            return usage(format!("runs = {} must be odd so the median is a measured run", self.runs));
        }
        if self.duration.is_zero() {
            return usage("duration must be positive".into());
        }
        if let Some(k) = self.slots() {
            if !(2..=cx_core::MAX_SLOTS).contains(&k) {
                return usage(format!("slot count {k} outside 2..={}", cx_core::MAX_SLOTS));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn impl_names() {
        for s in ["cx", "cxblock-2", "cxblock-16", "cxtimed", "globallock"] {
            assert_eq!(s.parse::<Impl>().unwrap().to_string(), s);
        }
        assert!("cxblock-".parse::<Impl>().is_err());
        assert!("lockfree".parse::<Impl>().is_err());
        assert_eq!("linkedlist".parse::<Structure>(), Ok(Structure::Linkedlist));
    }

    #[test]
    fn validation() {
        let ok = BenchConfig::default();
        assert!(ok.validate().is_ok());
        for bad in [
            BenchConfig { update_ratio: 101, ..ok.clone() },
            BenchConfig { keys: 0, ..ok.clone() },
            BenchConfig { runs: 4, ..ok.clone() },
            BenchConfig { threads: 0, ..ok.clone() },
            BenchConfig { implementation: Impl::CxBlock(1), ..ok.clone() },
        ] {
            assert!(matches!(bad.validate(), Err(BenchError::Usage(_))), "{bad:?}");
        }
        let mem = BenchConfig { mode: Mode::Memory, runs: 2, update_ratio: 0, ..ok };
        assert!(mem.validate().is_ok());
        assert_eq!(mem.effective_update_ratio(), 100);
    }
}
