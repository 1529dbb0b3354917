//! Slot-level simulator of the coexisting networks.
//!
//! Each step is one transmission slot: every contending node whose
//! back-off counter is zero transmits, the others count down. Real time is
//! kept in integer ticks so that scan windows, which are anchored to
//! absolute time every `T`, are tested for overlap without rounding.
//! A scan is busy when any primary airtime overlaps it; secondaries only
//! contend after an idle scan (sensing), outside the silent window (silent
//! period) or always (coexist), and stop at the next period boundary.

mod compare;
mod engine;
mod estimate;
mod stats;

use rayon::prelude::*;

pub use compare::{
    compare_to_analytical, compare_with_bias, write_discrepancy_rows, CheckStatus, Discrepancy,
    MetricCheck, Tolerance, DISCREPANCY_CSV_HEADER,
};
pub use engine::{
    run_simulation, run_simulation_traced, NetState, SimConfig, SlotKind, TICKS_PER_SLOT,
};
pub use estimate::{invert_success_collision_ratio, success_collision_ratio, TauEstimates};
pub use stats::{
    analytic_values, summarize, write_stats_csv, write_summary_csv, Counters, Metric, SimStats,
    SimSummary, STATS_CSV_HEADER,
};

use crate::error::Result;

/// Independent replications of `config`, on streams `0..replications` of
/// its seed. Runs in parallel; results are in stream order.
pub fn run_replications(config: &SimConfig, replications: usize) -> Result<Vec<SimStats>> {
    (0..replications as u64)
        .into_par_iter()
        .map(|stream| {
            let c = SimConfig {
                stream,
                ..config.clone()
            };
            run_simulation(&c)
        })
        .collect()
}
