//! The handover beam-tracking state machine.
//!
//! [`Protocol::step`] is a pure transition function: it consumes one
//! [`ProtocolInput`] (an RSS measurement, a slot tick, or uplink/random
//! access feedback) and returns the successor [`ProtocolState`] together with
//! the [`Action`]s the mobile must carry out.
//!
//! Rules, per tracked cell:
//!
//! * **3 dB rule.** Each cell keeps a reference RSS that ratchets upward
//!   while the receive beam is unchanged. When the latest sample falls 3 dB
//!   or more below it, a probe of the two directionally adjacent receive
//!   beams is opened; once both are sampled the mobile moves to the better
//!   one (if it beats the current beam) and the reference restarts from the
//!   probed sample.
//! * **Serving escalation.** For the serving cell only, when the mobile-side
//!   move did not recover the 3 dB (or neither neighbour beam was better),
//!   the mobile asks the base station to step its transmit beam toward the
//!   side the probe favoured.
//! * **Silent neighbour tracking.** The neighbour cell is followed from its
//!   broadcast sweep alone; nothing is ever transmitted toward it until the
//!   serving link is declared lost.
//! * **Failure and access.** K consecutive serving samples below
//!   sensitivity (or M unanswered uplink requests) switch the serving cell
//!   to the tracked neighbour and start random access with the tracked beam
//!   pair, retried up to `R_max` times.

mod driver;
mod step;

pub use driver::{ActionRecord, Delivered, Driver};

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codebook::{adjacent_ids, BeamId, Codebook};

pub type CellId = u32;

/// One timestamped RSS sample for a `(cell, tx beam, rx beam)` tuple.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeasurementReport {
    pub t_ms: u64,
    pub cell_id: CellId,
    pub tx_beam: BeamId,
    pub rx_beam: BeamId,
    pub rss_dbm: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolInput {
    Measurement(MeasurementReport),
    SlotTick(u64),
    UplinkAck { t_ms: u64, cell: CellId },
    UplinkNack { t_ms: u64, cell: CellId },
    RaResponse { t_ms: u64, success: bool },
}

impl ProtocolInput {
    pub fn t_ms(&self) -> u64 {
        match *self {
            ProtocolInput::Measurement(m) => m.t_ms,
            ProtocolInput::SlotTick(t) => t,
            ProtocolInput::UplinkAck { t_ms, .. }
            | ProtocolInput::UplinkNack { t_ms, .. }
            | ProtocolInput::RaResponse { t_ms, .. } => t_ms,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Action {
    SetRxBeam { cell: CellId, beam: BeamId },
    RequestTxBeamSwitch { cell: CellId, beam: BeamId },
    StartNeighborSearch,
    SendPreamble { cell: CellId, rx_beam: BeamId, tx_beam: BeamId },
    DeclareServingSwitch { cell: CellId },
    DeclareSoftHandover,
    DeclareHardHandover,
}

impl Action {
    pub fn name(&self) -> &'static str {
        match self {
            Action::SetRxBeam { .. } => "SET_RX_BEAM",
            Action::RequestTxBeamSwitch { .. } => "REQUEST_TX_BEAM_SWITCH",
            Action::StartNeighborSearch => "START_NEIGHBOR_SEARCH",
            Action::SendPreamble { .. } => "SEND_PREAMBLE",
            Action::DeclareServingSwitch { .. } => "DECLARE_SERVING_SWITCH",
            Action::DeclareSoftHandover => "DECLARE_SOFT_HANDOVER",
            Action::DeclareHardHandover => "DECLARE_HARD_HANDOVER",
        }
    }

    /// Cell the action concerns, if any.
    pub fn cell(&self) -> Option<CellId> {
        match *self {
            Action::SetRxBeam { cell, .. }
            | Action::RequestTxBeamSwitch { cell, .. }
            | Action::SendPreamble { cell, .. }
            | Action::DeclareServingSwitch { cell } => Some(cell),
            _ => None,
        }
    }

    /// Beam column of the action log. For preambles this is the mobile's
    /// receive (and transmit) beam.
    pub fn beam(&self) -> Option<BeamId> {
        match *self {
            Action::SetRxBeam { beam, .. } | Action::RequestTxBeamSwitch { beam, .. } => Some(beam),
            Action::SendPreamble { rx_beam, .. } => Some(rx_beam),
            _ => None,
        }
    }

    /// True for anything the mobile transmits.
    pub fn is_uplink(&self) -> bool {
        matches!(self, Action::RequestTxBeamSwitch { .. } | Action::SendPreamble { .. })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Phase {
    Search,
    TrackServingOnly,
    DualTrack,
    RadioLinkFailure,
    RandomAccess,
    HandoverComplete,
    HardHandover,
}

impl Phase {
    pub fn name(&self) -> &'static str {
        match self {
            Phase::Search => "SEARCH",
            Phase::TrackServingOnly => "TRACK_SERVING_ONLY",
            Phase::DualTrack => "DUAL_TRACK",
            Phase::RadioLinkFailure => "RADIO_LINK_FAILURE",
            Phase::RandomAccess => "RANDOM_ACCESS",
            Phase::HandoverComplete => "HANDOVER_COMPLETE",
            Phase::HardHandover => "HARD_HANDOVER",
        }
    }

    pub fn is_terminal(&self) -> bool {
        matches!(self, Phase::HandoverComplete | Phase::HardHandover)
    }

    /// Phases in which a preamble is outstanding toward the target cell.
    pub fn in_access(&self) -> bool {
        matches!(self, Phase::RadioLinkFailure | Phase::RandomAccess)
    }
}

/// Thresholds and timers of the state machine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub sensitivity_dbm: f64,
    /// Serving RSS below which the neighbour search starts.
    pub edge_threshold_dbm: f64,
    pub rach_threshold_dbm: f64,
    pub drop_threshold_db: f64,
    /// K: consecutive below-sensitivity samples that end a link.
    pub failure_samples: u32,
    /// M: consecutive unanswered uplink requests that end the serving link.
    pub nack_limit: u32,
    /// R_max: preamble attempts before giving up.
    pub max_ra_attempts: u32,
    pub ssb_period_ms: u64,
    pub ra_retry_period_ms: u64,
    pub ra_timeout_ms: u64,
    /// Optional exponential smoothing of samples before the 3 dB test.
    pub ewma_alpha: Option<f64>,
}

impl ProtocolConfig {
    pub fn for_sensitivity(sensitivity_dbm: f64) -> Self {
        Self {
            sensitivity_dbm,
            edge_threshold_dbm: sensitivity_dbm + 10.0,
            rach_threshold_dbm: sensitivity_dbm + 3.0,
            drop_threshold_db: 3.0,
            failure_samples: 3,
            nack_limit: 3,
            max_ra_attempts: 4,
            ssb_period_ms: 20,
            ra_retry_period_ms: 10,
            ra_timeout_ms: 20,
            ewma_alpha: None,
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if self.failure_samples == 0 || self.nack_limit == 0 || self.max_ra_attempts == 0 {
            return Err("failure_samples, nack_limit and max_ra_attempts must be at least 1".into());
        }
        if self.ssb_period_ms == 0 || self.ra_retry_period_ms == 0 {
            return Err("periods must be positive".into());
        }
        if self.ra_timeout_ms <= self.ra_retry_period_ms {
            return Err("ra_timeout must exceed ra_retry_period".into());
        }
        if !(self.drop_threshold_db > 0.0) {
            return Err("drop_threshold_db must be positive".into());
        }
        if let Some(a) = self.ewma_alpha {
            if !(a > 0.0 && a <= 1.0) {
                return Err("ewma_alpha must lie in (0, 1]".into());
            }
        }
        Ok(())
    }
}

impl Default for ProtocolConfig {
    fn default() -> Self {
        Self::for_sensitivity(crate::channel::ChannelParams::default().sensitivity_dbm)
    }
}

/// Codebook sizes the state machine needs for adjacency.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamBooks {
    pub mobile_beams: usize,
    pub cell_beams: BTreeMap<CellId, usize>,
    pub default_cell_beams: usize,
}

impl BeamBooks {
    pub fn uniform(mobile_beams: usize, cell_beams: usize) -> Self {
        Self { mobile_beams, cell_beams: BTreeMap::new(), default_cell_beams: cell_beams }
    }

    pub fn cell(&self, cell: CellId) -> usize {
        self.cell_beams.get(&cell).copied().unwrap_or(self.default_cell_beams)
    }
}

/// What the mobile believes about one cell's link.
#[derive(Debug, Clone, PartialEq)]
pub struct CellTrack {
    pub cell_id: CellId,
    pub rx_beam: BeamId,
    /// Believed best transmit beam of the base station.
    pub tx_beam: BeamId,
    /// Reference for the 3 dB rule; `-inf` until the first sample after a switch.
    pub ref_rss: f64,
    pub last_rss: f64,
    pub timing_known: bool,
    /// Consecutive samples below sensitivity.
    pub below_count: u32,
    /// Direction (+1/-1) of the last receive-beam step, 0 if none yet.
    pub last_rx_step: i8,
    /// Direction used for transmit-beam requests.
    pub tx_trend: i8,
    /// Outstanding transmit-beam request and the RSS it is meant to improve.
    pub pending_tx: Option<(BeamId, f64)>,
    /// After an acknowledged transmit switch: RSS before the request, compared
    /// against the first sample on the new beam.
    pub tx_check: Option<f64>,
    /// The next regular sample restarts the reference.
    pub awaiting_sample: bool,
}

impl CellTrack {
    pub fn new(cell_id: CellId, rx_beam: BeamId, tx_beam: BeamId) -> Self {
        Self {
            cell_id,
            rx_beam,
            tx_beam,
            ref_rss: f64::NEG_INFINITY,
            last_rss: f64::NEG_INFINITY,
            timing_known: false,
            below_count: 0,
            last_rx_step: 0,
            tx_trend: 1,
            pending_tx: None,
            tx_check: None,
            awaiting_sample: true,
        }
    }

    /// Ratchet the reference upward and record the sample.
    pub fn update_reference(&self, sample: f64) -> CellTrack {
        let mut t = self.clone();
        t.ref_rss = t.ref_rss.max(sample);
        t.last_rss = sample;
        t
    }

    /// Restart the reference from `sample`, as after a beam switch.
    pub fn reset_reference(&mut self, sample: f64) {
        self.ref_rss = sample;
        self.last_rss = sample;
    }

    pub fn dropped(&self, threshold_db: f64) -> bool {
        self.last_rss <= self.ref_rss - threshold_db
    }
}

/// A pending adjacent-beam probe.
#[derive(Debug, Clone, PartialEq)]
pub struct Probe {
    pub cell: CellId,
    pub candidates: Vec<BeamId>,
    /// `(rx beam, tx beam, rss)` per sampled candidate.
    pub samples: Vec<(BeamId, BeamId, f64)>,
    /// Reference RSS when the probe opened.
    pub reference: f64,
}

impl Probe {
    pub fn next_beam(&self) -> Option<BeamId> {
        self.candidates.iter().copied().find(|c| !self.samples.iter().any(|s| s.0 == *c))
    }
}

/// Directional search state: the receive beam of the current dwell and the
/// strongest detection seen in it.
#[derive(Debug, Clone, PartialEq)]
pub struct SearchCursor {
    pub rx_beam: BeamId,
    pub dwell_start_ms: u64,
    pub dwell_end_ms: u64,
    pub dwells_done: usize,
    pub best: Option<MeasurementReport>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Diagnostics {
    pub ignored_measurements: u64,
    pub ignored_feedback: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolState {
    pub phase: Phase,
    pub serving: CellTrack,
    pub neighbor: Option<CellTrack>,
    pub search: Option<SearchCursor>,
    pub probe: Option<Probe>,
    /// Failed preamble attempts so far.
    pub ra_attempts: u32,
    /// Consecutive below-sensitivity serving samples.
    pub failure_count: u32,
    pub unacked_requests: u32,
    pub ra_deadline_ms: Option<u64>,
    pub last_t_ms: Option<u64>,
    pub first_search_ms: Option<u64>,
    pub discovered_ms: Option<u64>,
    pub diagnostics: Diagnostics,
}

impl ProtocolState {
    /// Connected to `serving` on a known beam pair, no neighbour yet.
    pub fn connected(serving: CellId, rx_beam: BeamId, tx_beam: BeamId) -> Self {
        let mut track = CellTrack::new(serving, rx_beam, tx_beam);
        track.timing_known = true;
        Self {
            phase: Phase::TrackServingOnly,
            serving: track,
            neighbor: None,
            search: None,
            probe: None,
            ra_attempts: 0,
            failure_count: 0,
            unacked_requests: 0,
            ra_deadline_ms: None,
            last_t_ms: None,
            first_search_ms: None,
            discovered_ms: None,
            diagnostics: Diagnostics::default(),
        }
    }

    /// Receive beam the mobile should use when measuring `cell` next.
    pub fn measurement_beam(&self, cell: CellId) -> Option<BeamId> {
        if let Some(p) = &self.probe {
            if p.cell == cell {
                return p.next_beam();
            }
        }
        if self.serving.cell_id == cell && !self.phase.in_access() {
            return Some(self.serving.rx_beam);
        }
        self.neighbor.as_ref().filter(|n| n.cell_id == cell).map(|n| n.rx_beam)
    }

    pub fn track(&self, cell: CellId) -> Option<&CellTrack> {
        if self.serving.cell_id == cell {
            Some(&self.serving)
        } else {
            self.neighbor.as_ref().filter(|n| n.cell_id == cell)
        }
    }
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ProtocolError {
    #[error("input at t={got} ms precedes previously consumed t={last} ms")]
    TimestampRegression { last: u64, got: u64 },
    #[error("beam {beam} out of range for cell {cell}")]
    BeamOutOfRange { cell: CellId, beam: BeamId },
    #[error("rss {0} dBm is not finite")]
    NonFiniteRss(f64),
}

/// Immutable context of a run: thresholds plus codebook sizes.
#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub config: ProtocolConfig,
    pub books: BeamBooks,
}

impl Protocol {
    pub fn new(config: ProtocolConfig, books: BeamBooks) -> Self {
        Self { config, books }
    }

    /// Pure transition: `(state, input) -> (state', actions)`.
    pub fn step(
        &self,
        state: &ProtocolState,
        input: ProtocolInput,
    ) -> Result<(ProtocolState, Vec<Action>), ProtocolError> {
        let mut next = state.clone();
        let actions = self.step_mut(&mut next, input)?;
        Ok((next, actions))
    }

    /// In-place variant of [`Protocol::step`]. On error the state is untouched.
    pub fn step_mut(&self, state: &mut ProtocolState, input: ProtocolInput) -> Result<Vec<Action>, ProtocolError> {
        step::apply(self, state, input)
    }

    /// Worst-case directional search time for `rx_beams` receive beams.
    pub fn search_bound_ms(&self) -> u64 {
        self.books.mobile_beams as u64 * self.config.ssb_period_ms
    }

    pub(crate) fn adjacent_rx(&self, beam: BeamId) -> Vec<BeamId> {
        let (l, r) = adjacent_ids(self.books.mobile_beams, beam).unwrap_or((beam, beam));
        let mut v = Vec::with_capacity(2);
        for c in [l, r] {
            if c != beam && !v.contains(&c) {
                v.push(c);
            }
        }
        v
    }
}

/// Worst-case latency of an exhaustive receive-beam search when each beam of
/// `codebook` is held for one full transmit sweep: `N * ssb_period`.
pub fn search_schedule(codebook: &Codebook, ssb_period_s: f64) -> f64 {
    codebook.len() as f64 * ssb_period_s
}
