//! Beam tracking for mm-wave soft handover.
//!
//! A mobile with a directional receive codebook keeps its serving link
//! aligned and, at the cell edge, silently discovers and tracks a neighbour
//! cell from its periodic SSB sweep, so that when the serving link fails it
//! can complete random access on an already aligned beam pair.
//!
//! * [`channel`], [`codebook`], [`mobility`]: the radio and motion models.
//! * [`protocol`]: the handover state machine, a pure transition function.
//! * [`engine`]: a deterministic simulator and Monte Carlo sweeps.
//! * [`io`]: trace, action-log and report formats, and trace replay.

// `!(x > 0.0)` also rejects NaN
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod channel;
pub mod cli;
pub mod codebook;
pub mod engine;
pub mod error;
pub mod io;
pub mod mobility;
pub mod protocol;

pub use channel::{beam_gain, fspl, rss, ChannelParams, Pose};
pub use codebook::{Beam, BeamId, Codebook, CodebookSpec};
pub use engine::{run_sweep, run_trial, SimConfig, SweepReport, TrialReport};
pub use error::DomainError;
pub use mobility::{MobilityModel, Scenario};
pub use protocol::{
    search_schedule, Action, CellId, MeasurementReport, Phase, Protocol, ProtocolConfig, ProtocolInput, ProtocolState,
};
