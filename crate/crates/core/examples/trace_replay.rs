//! Record a shadowed trial's RSS trace, write it out, read it back, and
//! replay it through a fresh protocol instance: the action logs agree.
//!
//!     cargo run --example trace_replay

use silent_tracker::engine::SimConfig;
use silent_tracker::io::{format_action_log, load_trace, replay, write_trace};
use silent_tracker::{run_trial, Protocol, Scenario};

pub fn main() {
    let mut cfg = SimConfig::scenario(Scenario::Vehicular);
    cfg.mobile.channel.shadowing_sigma_db = 3.0;
    let report = run_trial(&cfg, 1).expect("trial runs");

    let path = std::env::temp_dir().join(format!("silent-tracker-example-{}.csv", std::process::id()));
    write_trace(&path, &report.rss_trace).expect("trace written");
    let rows = load_trace(&path).expect("trace reads back");
    let _ = std::fs::remove_file(&path);

    let resolved = cfg.resolve().unwrap();
    let protocol = Protocol::new(resolved.protocol, resolved.books);
    let log = replay(&rows, &protocol, Some(report.end_ms)).expect("replay runs");
    let same = format_action_log(&log) == format_action_log(&report.action_log);
    println!("{} rows, {} actions, outcome {}", rows.len(), log.len(), report.outcome.name());
    print!("{}", format_action_log(&log));
    println!("replay matches the closed loop: {same}");
}
