//! Std companion to `cx-core`: clock and backoff, a byte-counting global
//! allocator, the linearizability and fault-injection harness, and the
//! set microbenchmark behind the `cx-bench` binary.

pub mod alloc;
pub mod bench;
pub mod harness;
pub mod platform;

pub use cx_core as core;
pub use platform::{config_from_env, StdPlatform};
