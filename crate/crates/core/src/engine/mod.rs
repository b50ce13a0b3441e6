//! Discrete-time simulator driving the protocol with synthetic channel
//! measurements, plus Monte Carlo sweeps.
//!
//! Time advances in 1 ms slots. Each measurement window spans one SSB
//! period; at its last slot the mobile reports either the serving link on
//! the current beam pair or the strongest SSB of the cell it listened to.

pub mod config;
pub mod sim;
pub mod sweep;

pub use config::{ConfigError, SimConfig};
pub use sim::{quantize_rss, run_trial, EngineError, Outcome, TrialReport};
pub use sweep::{aggregate, run_sweep, run_trials, SweepCell, SweepError, SweepReport};
