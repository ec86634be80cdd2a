//! Discrete-event simulation of the request protocol.
//!
//! One run is single-threaded and fully determined by `(seed, stream)`.
//! Replications use consecutive streams of one seed and may run in
//! parallel; their reports merge in stream order.

mod engine;
mod report;

pub use engine::{simulate_stream, Horizon};
pub use report::{estimate_reliability, MeanEstimate, RouterOccupancy, RunningStat, SimReport};

use std::ops::Range;

use crate::error::SimError;
use crate::exec::{par_map_range, Execution};
use crate::scenario::{IncrementPolicy, Scenario};

/// Runs stream 0 of `seed`.
pub fn simulate(
    scenario: &Scenario,
    ttl: f64,
    seed: u64,
    horizon: Horizon,
) -> Result<SimReport, SimError> {
    simulate_stream(scenario, ttl, seed, 0, horizon)
}

/// Independent runs on streams `0..replications`, merged in order.
pub fn simulate_replicated(
    scenario: &Scenario,
    ttl: f64,
    seed: u64,
    replications: u64,
    horizon: Horizon,
    exec: Execution,
) -> Result<SimReport, SimError> {
    simulate_streams(scenario, ttl, seed, 0..replications, horizon, exec)
}

/// Independent runs on the given streams of `seed`, merged in order.
pub fn simulate_streams(
    scenario: &Scenario,
    ttl: f64,
    seed: u64,
    streams: Range<u64>,
    horizon: Horizon,
    exec: Execution,
) -> Result<SimReport, SimError> {
    if streams.is_empty() {
        return Err(SimError::NoReplications);
    }
    let first = streams.start;
    let runs = par_map_range(exec, (streams.end - first) as usize, |i| {
        simulate_stream(scenario, ttl, seed, first + i as u64, horizon)
    });
    let mut merged = SimReport::default();
    for run in runs {
        merged.merge(&run?);
    }
    merged.seed = seed;
    Ok(merged)
}

/// Long-run cache occupancy per router under counter-driven placement.
///
/// Counters are forced on and increment only where a request enters a
/// tier; a router holding a copy answers requests that enter it. The TTL
/// is the scenario's `ttl`, or 0 when unset.
pub fn run_placement_convergence(
    scenario: &Scenario,
    seed: u64,
    duration: f64,
) -> Result<Vec<RouterOccupancy>, SimError> {
    let mut s = scenario.clone();
    s.counters.dynamic = true;
    s.counters.increment = IncrementPolicy::EscalationOnly;
    s.protocol.entry_check = true;
    let ttl = s.ttl.unwrap_or(0.0);
    Ok(simulate(&s, ttl, seed, Horizon::Duration(duration))?.occupancy)
}
