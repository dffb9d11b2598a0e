//! Debug invariant probes. Counters are only touched when probes are enabled.

use core::sync::atomic::{AtomicU64, Ordering::Relaxed};

macro_rules! probe_counters {
    ($($name:ident),* $(,)?) => {
        #[derive(Default)]
        pub(crate) struct Probes {
            $(pub(crate) $name: AtomicU64,)*
        }

        /// Snapshot of the probe counters.
        #[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
        pub struct ProbeReport {
            $(pub $name: u64,)*
        }

        impl Probes {
            pub(crate) fn report(&self) -> ProbeReport {
                ProbeReport { $($name: self.$name.load(Relaxed),)* }
            }

            pub(crate) fn reset(&self) {
                $(self.$name.store(0, Relaxed);)*
            }
        }
    };
}

probe_counters! {
    // curComb transitions observed by the winning CAS.
    transitions,
    // Transition whose new head ticket is not above the old one, or whose
    // slot index equals the previous one.
    monotonic_violations,
    // Largest tail.ticket - head.ticket seen at a transition.
    max_lag,
    lag_violations,
    // Largest number of nodes applied by a single apply_update call.
    max_apply_iterations,
    loop_violations,
    // Most slot locks one thread held at once.
    max_slots_held,
    slot_budget_violations,
    // apply_update returned before curComb contained its node.
    visibility_violations,
    // Second and later writes to a result cell.
    result_rewrites,
    // Writes that disagreed with the first value.
    result_mismatches,
    // Replica copies made by update_head_obj.
    copies,
    // Slot scans needing more than one pass.
    scan_retries,
    // Loops that ran past the bound the proofs give for their regime.
    cas_loop_overruns,
    get_combined_overruns,
    read_overruns,
    // Reads that had to enqueue a node, and those answered through it.
    read_fallbacks,
    read_helped,
    // Most iterations of one enqueue loop.
    max_enqueue_iterations,
}

impl ProbeReport {
    /// Sum of every counter that indicates a broken invariant.
    pub fn violations(&self) -> u64 {
        self.monotonic_violations
            + self.lag_violations
            + self.loop_violations
            + self.slot_budget_violations
            + self.visibility_violations
            + self.result_mismatches
    }
}

impl Probes {
    #[inline]
    pub(crate) fn bump(counter: &AtomicU64) {
        counter.fetch_add(1, Relaxed);
    }

    #[inline]
    pub(crate) fn max(counter: &AtomicU64, v: u64) {
        counter.fetch_max(v, Relaxed);
    }
}
