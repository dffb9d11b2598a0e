//! A wait-free universal construct: turns any sequential object with a deep
//! copy into a linearizable concurrent one.
//!
//! The crate is `no_std` and only needs `alloc`. Time, backoff and
//! fault-injection hooks are supplied by the embedding through
//! [`Platform`] and [`Hooks`].

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod adapters;
mod config;
mod construct;
pub mod hooks;
mod probes;
mod queue;
mod reclaim;
pub mod rwlock;

pub use config::{Config, ConfigError, MAX_SLOTS};
pub use construct::{Census, Cx, ReclaimStats, ThreadHandle};
pub use hooks::{Hooks, PausePoint, Platform};
pub use probes::ProbeReport;
pub use queue::ResultCell;
pub use reclaim::RetireCounts;
