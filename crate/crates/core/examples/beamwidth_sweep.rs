//! A small Monte Carlo sweep over mobile beamwidths under 4 dB shadowing,
//! printed as the CSV the `sweep` subcommand writes.
//!
//!     cargo run --release --example beamwidth_sweep

use silent_tracker::engine::SimConfig;
use silent_tracker::io::Report;
use silent_tracker::{run_sweep, CodebookSpec, Scenario};

pub fn main() {
    let mut base = SimConfig::scenario(Scenario::Walk);
    base.mobile.channel.shadowing_sigma_db = 4.0;
    let books = ["20", "60", "omni"].map(|b| CodebookSpec::parse(b).unwrap());
    let report = run_sweep(&base, &[Scenario::Walk, Scenario::Rotation], &books, 40).expect("sweep runs");
    print!("{}", report.to_csv());
}
