//! One noiseless walk across the cell edge: search, silent tracking of the
//! neighbour, then a soft handover on the beam pair found beforehand.
//!
//!     cargo run --example walk_handover

use silent_tracker::engine::SimConfig;
use silent_tracker::{run_trial, Scenario};

pub fn main() {
    let cfg = SimConfig::scenario(Scenario::Walk);
    let report = run_trial(&cfg, 0).expect("default walk runs");
    for rec in &report.action_log {
        println!("{:>5} ms  {:<18} {:?}", rec.t_ms, rec.phase.name(), rec.action);
    }
    println!(
        "outcome {} after {} ms: discovery latency {:?} s, alignment {:?}, interruption {:?} s",
        report.outcome.name(),
        report.end_ms,
        report.discovery_latency_s,
        report.alignment_ratio,
        report.interruption_s
    );
}
