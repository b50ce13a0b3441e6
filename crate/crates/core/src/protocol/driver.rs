//! Slot-by-slot harness around the state machine.
//!
//! The simulator and the trace replayer both advance the protocol through a
//! [`Driver`], so a recorded measurement trace fed back through it yields the
//! same action log as the closed-loop run that produced it.
//!
//! Uplink feedback is derived from the measurements alone: a request or
//! preamble sent on a beam pair succeeds iff the most recent downlink sample
//! of that cell on the same receive beam clears the relevant threshold
//! (sensitivity for uplink requests, the access threshold for preambles).
//! The link is reciprocal, so that sample is the reverse-link RSS seen by
//! the base station. Acks arrive one slot later, access responses one retry
//! period later.

use std::collections::BTreeMap;

use super::{Action, CellId, MeasurementReport, Phase, Protocol, ProtocolError, ProtocolInput, ProtocolState};
use crate::codebook::BeamId;

/// One line of the action log.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ActionRecord {
    pub t_ms: u64,
    /// Phase after the transition that emitted the action.
    pub phase: Phase,
    pub action: Action,
}

/// Feedback that reached the mobile at the start of a slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Delivered {
    TxSwitched { cell: CellId, beam: BeamId },
    TxRejected { cell: CellId },
    AccessGranted { cell: CellId },
    AccessRejected { cell: CellId },
}

#[derive(Debug, Clone, Copy)]
enum Pending {
    Uplink { cell: CellId, beam: BeamId, ok: bool },
    Access { cell: CellId, ok: bool },
}

#[derive(Debug, Clone)]
pub struct Driver<'p> {
    protocol: &'p Protocol,
    state: ProtocolState,
    pending: BTreeMap<(u64, u64), Pending>,
    seq: u64,
    last_sample: BTreeMap<(CellId, BeamId), f64>,
    log: Vec<ActionRecord>,
}

impl<'p> Driver<'p> {
    pub fn new(protocol: &'p Protocol, state: ProtocolState) -> Self {
        Self { protocol, state, pending: BTreeMap::new(), seq: 0, last_sample: BTreeMap::new(), log: Vec::new() }
    }

    pub fn state(&self) -> &ProtocolState {
        &self.state
    }

    pub fn log(&self) -> &[ActionRecord] {
        &self.log
    }

    pub fn into_log(self) -> Vec<ActionRecord> {
        self.log
    }

    pub fn is_terminal(&self) -> bool {
        self.state.phase.is_terminal()
    }

    pub fn has_pending(&self) -> bool {
        !self.pending.is_empty()
    }

    /// Delivers feedback due by `t`, then ticks the clock.
    pub fn begin_slot(&mut self, t: u64) -> Result<Vec<Delivered>, ProtocolError> {
        let mut delivered = Vec::new();
        while let Some(entry) = self.pending.first_entry() {
            if entry.key().0 > t {
                break;
            }
            let ((due, _), ev) = entry.remove_entry();
            let (input, d) = match ev {
                Pending::Uplink { cell, beam, ok: true } => {
                    (ProtocolInput::UplinkAck { t_ms: due, cell }, Delivered::TxSwitched { cell, beam })
                }
                Pending::Uplink { cell, ok: false, .. } => {
                    (ProtocolInput::UplinkNack { t_ms: due, cell }, Delivered::TxRejected { cell })
                }
                Pending::Access { cell, ok } => (
                    ProtocolInput::RaResponse { t_ms: due, success: ok },
                    if ok { Delivered::AccessGranted { cell } } else { Delivered::AccessRejected { cell } },
                ),
            };
            delivered.push(d);
            self.feed(input)?;
        }
        self.feed(ProtocolInput::SlotTick(t))?;
        Ok(delivered)
    }

    pub fn measure(&mut self, m: MeasurementReport) -> Result<(), ProtocolError> {
        self.last_sample.insert((m.cell_id, m.rx_beam), m.rss_dbm);
        self.feed(ProtocolInput::Measurement(m))
    }

    fn feed(&mut self, input: ProtocolInput) -> Result<(), ProtocolError> {
        let t = input.t_ms();
        let actions = self.protocol.step_mut(&mut self.state, input)?;
        let cfg = &self.protocol.config;
        for action in actions {
            self.log.push(ActionRecord { t_ms: t, phase: self.state.phase, action });
            match action {
                Action::RequestTxBeamSwitch { cell, beam } => {
                    let rx = self.state.track(cell).map(|tr| tr.rx_beam);
                    let ok = rx.is_some_and(|rx| self.reverse_link_at_least(cell, rx, cfg.sensitivity_dbm));
                    self.schedule(t + 1, Pending::Uplink { cell, beam, ok });
                }
                Action::SendPreamble { cell, rx_beam, .. } => {
                    let ok = self.reverse_link_at_least(cell, rx_beam, cfg.rach_threshold_dbm);
                    self.schedule(t + cfg.ra_retry_period_ms, Pending::Access { cell, ok });
                }
                _ => {}
            }
        }
        Ok(())
    }

    fn reverse_link_at_least(&self, cell: CellId, rx: BeamId, threshold: f64) -> bool {
        self.last_sample.get(&(cell, rx)).is_some_and(|&rss| rss >= threshold)
    }

    fn schedule(&mut self, due: u64, ev: Pending) {
        self.pending.insert((due, self.seq), ev);
        self.seq += 1;
    }
}
