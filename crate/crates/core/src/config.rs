use alloc::sync::Arc;
use core::fmt;

#[cfg(feature = "hooks")]
use crate::hooks::Hooks;
use crate::hooks::Platform;

/// Slot indices share a word with the head ticket, eight bits wide.
pub const MAX_SLOTS: usize = 256;

#[derive(Clone)]
pub struct Config {
    pub max_threads: usize,
    /// Number of replica slots. Updates are wait-free when this is at least
    /// `2 * max_threads`, blocking otherwise.
    pub max_objs: usize,
    /// Retirement buffer length per thread.
    pub size_circbuff: usize,
    /// Direct read attempts before a read is enqueued for helpers.
    pub max_read_tries: usize,
    /// Maintain the invariant probes.
    pub probes: bool,
    /// Poison freed nodes and count accesses to them.
    pub tracking: bool,
    pub platform: Option<Arc<dyn Platform>>,
    #[cfg(feature = "hooks")]
    pub hooks: Option<Arc<dyn Hooks>>,
}

impl Config {
    pub fn new(max_threads: usize) -> Self {
        Self {
            max_threads,
            max_objs: 2 * max_threads,
            size_circbuff: 1000,
            max_read_tries: 4,
            probes: cfg!(debug_assertions),
            tracking: cfg!(debug_assertions),
            platform: None,
            #[cfg(feature = "hooks")]
            hooks: None,
        }
    }

    pub fn max_objs(mut self, n: usize) -> Self {
        self.max_objs = n;
        self
    }

    pub fn size_circbuff(mut self, n: usize) -> Self {
        self.size_circbuff = n;
        self
    }

    pub fn max_read_tries(mut self, n: usize) -> Self {
        self.max_read_tries = n;
        self
    }

    pub fn probes(mut self, on: bool) -> Self {
        self.probes = on;
        self
    }

    pub fn tracking(mut self, on: bool) -> Self {
        self.tracking = on;
        self
    }

    pub fn platform(mut self, p: Arc<dyn Platform>) -> Self {
        self.platform = Some(p);
        self
    }

    #[cfg(feature = "hooks")]
    pub fn hooks(mut self, h: Arc<dyn Hooks>) -> Self {
        self.hooks = Some(h);
        self
    }

    pub fn is_wait_free(&self) -> bool {
        self.max_objs >= 2 * self.max_threads
    }

    pub(crate) fn validate(&self) -> Result<(), ConfigError> {
        if self.max_threads == 0 {
            return Err(ConfigError::NoThreads);
        }
        if self.max_objs < 2 {
            return Err(ConfigError::TooFewSlots(self.max_objs));
        }
        if self.max_objs > MAX_SLOTS {
            return Err(ConfigError::TooManySlots(self.max_objs));
        }
        if self.size_circbuff == 0 {
            return Err(ConfigError::EmptyRetireBuffer);
        }
        Ok(())
    }
}

impl fmt::Debug for Config {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Config")
            .field("max_threads", &self.max_threads)
            .field("max_objs", &self.max_objs)
            .field("size_circbuff", &self.size_circbuff)
            .field("max_read_tries", &self.max_read_tries)
            .field("probes", &self.probes)
            .field("tracking", &self.tracking)
            .field("platform", &self.platform.is_some())
            .finish()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum ConfigError {
    NoThreads,
    TooFewSlots(usize),
    TooManySlots(usize),
    EmptyRetireBuffer,
    SlotLimit { slot_limit: usize, max_objs: usize },
    NoClock,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConfigError::NoThreads => f.write_str("max_threads must be at least 1"),
            ConfigError::TooFewSlots(n) => {
                write!(f, "max_objs = {n}: need at least 2 slots (current replica plus a workspace)")
            }
            ConfigError::TooManySlots(n) => write!(f, "max_objs = {n} exceeds {MAX_SLOTS}"),
            ConfigError::EmptyRetireBuffer => f.write_str("size_circbuff must be at least 1"),
            ConfigError::SlotLimit { slot_limit, max_objs } => {
                write!(f, "fast-path slot limit {slot_limit} exceeds max_objs {max_objs}")
            }
            ConfigError::NoClock => f.write_str("a timed fast path needs a platform clock"),
        }
    }
}

impl core::error::Error for ConfigError {}
