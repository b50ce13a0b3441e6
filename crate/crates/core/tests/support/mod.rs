//! Random state-machine input sequences and the invariant checks run over
//! them. Shared by the property suite and the acceptance run.

#![allow(dead_code)]

use proptest::prelude::*;
use silent_tracker::codebook::ring_distance;
use silent_tracker::protocol::{
    Action, BeamBooks, CellId, MeasurementReport, Phase, Protocol, ProtocolConfig, ProtocolInput, ProtocolState,
};

pub const N_BEAMS: usize = 18;

pub fn protocol() -> Protocol {
    Protocol::new(ProtocolConfig::default(), BeamBooks::uniform(N_BEAMS, N_BEAMS))
}

/// Input template, made concrete against the current state so that random
/// sequences follow the beams the mobile is actually listening on.
#[derive(Debug, Clone)]
pub enum Op {
    /// Sample of `cell` on the beam the state asks for, or on `rx` if none.
    Expected {
        cell: CellId,
        tx: usize,
        rx: usize,
        rss: f64,
    },
    Raw {
        cell: CellId,
        tx: usize,
        rx: usize,
        rss: f64,
    },
    Tick,
    Ack(CellId),
    Nack(CellId),
    Ra(bool),
}

pub fn op() -> impl Strategy<Value = (u64, Op)> {
    let rss = -75.0..-30.0f64;
    let op = prop_oneof![
        6 => (0..3u32, 0..N_BEAMS, 0..N_BEAMS, rss.clone()).prop_map(|(cell, tx, rx, rss)| Op::Expected { cell, tx, rx, rss }),
        1 => (0..3u32, 0..N_BEAMS, 0..N_BEAMS, rss).prop_map(|(cell, tx, rx, rss)| Op::Raw { cell, tx, rx, rss }),
        3 => Just(Op::Tick),
        1 => (0..2u32).prop_map(Op::Ack),
        1 => (0..2u32).prop_map(Op::Nack),
        1 => any::<bool>().prop_map(Op::Ra),
    ];
    (0..25u64, op)
}

pub fn concretize(s: &ProtocolState, t: u64, op: &Op) -> ProtocolInput {
    let m = |cell, tx, rx, rss| {
        ProtocolInput::Measurement(MeasurementReport { t_ms: t, cell_id: cell, tx_beam: tx, rx_beam: rx, rss_dbm: rss })
    };
    match *op {
        Op::Expected { cell, tx, rx, rss } => {
            let beam = s.measurement_beam(cell).or(s.search.as_ref().map(|c| c.rx_beam)).unwrap_or(rx);
            m(cell, tx, beam, rss)
        }
        Op::Raw { cell, tx, rx, rss } => m(cell, tx, rx, rss),
        Op::Tick => ProtocolInput::SlotTick(t),
        Op::Ack(cell) => ProtocolInput::UplinkAck { t_ms: t, cell },
        Op::Nack(cell) => ProtocolInput::UplinkNack { t_ms: t, cell },
        Op::Ra(success) => ProtocolInput::RaResponse { t_ms: t, success },
    }
}

/// Runs a sequence and hands every transition to `check`.
pub fn run(
    ops: &[(u64, Op)],
    start_rx: usize,
    start_tx: usize,
    mut check: impl FnMut(&ProtocolState, &ProtocolInput, &ProtocolState, &[Action]),
) {
    let p = protocol();
    let mut s = ProtocolState::connected(0, start_rx, start_tx);
    let mut t = 0;
    for (dt, op) in ops {
        t += dt;
        let input = concretize(&s, t, op);
        let (next, actions) = p.step(&s, input).expect("well-formed input");
        check(&s, &input, &next, &actions);
        s = next;
    }
}

pub fn sequences() -> impl Strategy<Value = Case> {
    (prop::collection::vec(op(), 1..160), 0..N_BEAMS, 0..N_BEAMS)
}

/// A generated case: inputs, starting rx beam, starting tx beam.
pub type Case = (Vec<(u64, Op)>, usize, usize);

pub fn beam_locality((ops, rx, tx): &Case) {
    run(ops, *rx, *tx, |s, _, next, actions| {
        for a in actions {
            match *a {
                // a search commit picks whichever beam detected the cell
                Action::SetRxBeam { .. } if s.phase == Phase::Search => {}
                Action::SetRxBeam { cell, beam } => {
                    let prev = s.track(cell).expect("switching a tracked cell").rx_beam;
                    assert_eq!(ring_distance(N_BEAMS, prev, beam), 1, "{s:?} -> {a:?}");
                }
                Action::RequestTxBeamSwitch { beam, .. } => {
                    assert_eq!(ring_distance(N_BEAMS, next.serving.tx_beam, beam), 1);
                }
                _ => {}
            }
        }
    });
}

pub fn three_db_soundness((ops, rx, tx): &Case) {
    let cfg = ProtocolConfig::default();
    run(ops, *rx, *tx, |s, input, next, actions| {
        // every probe opens on a drop of at least 3 dB below the reference
        if s.probe.is_none() {
            if let Some(pr) = &next.probe {
                let tr = next.track(pr.cell).unwrap();
                assert!(pr.reference - tr.last_rss >= cfg.drop_threshold_db, "{pr:?} {tr:?}");
            }
        }
        for a in actions {
            if let Action::SetRxBeam { cell, beam } = *a {
                if s.phase == Phase::Search {
                    continue;
                }
                let pr = s.probe.as_ref().expect("beam moves only through a probe");
                assert_eq!(pr.cell, cell);
                assert!(pr.candidates.contains(&beam));
                let ProtocolInput::Measurement(m) = input else { panic!("switch outside a measurement") };
                let mut sampled = pr.samples.iter().map(|x| (x.0, x.2)).chain([(m.rx_beam, m.rss_dbm)]);
                let (_, best) = sampled.rfind(|x| x.0 == beam).unwrap();
                assert!(best > s.track(cell).unwrap().last_rss);
            }
        }
        // a regular sample less than 3 dB under the reference changes no beam
        if let ProtocolInput::Measurement(m) = input {
            let regular = s.probe.is_none()
                && matches!(s.phase, Phase::TrackServingOnly | Phase::DualTrack)
                && s.track(m.cell_id)
                    .is_some_and(|tr| tr.rx_beam == m.rx_beam && !tr.awaiting_sample && tr.ref_rss.is_finite());
            if regular {
                let tr = s.track(m.cell_id).unwrap();
                if tr.ref_rss.max(m.rss_dbm) - m.rss_dbm < cfg.drop_threshold_db {
                    assert!(next.probe.is_none());
                    assert!(actions.iter().all(|a| !matches!(a, Action::SetRxBeam { .. })), "{actions:?}");
                    // the only transmit request allowed here undoes a switch that made things worse
                    if actions.iter().any(|a| matches!(a, Action::RequestTxBeamSwitch { .. })) {
                        assert!(tr.tx_check.is_some(), "transmit request without a pending judgement");
                        assert_eq!(next.serving.tx_trend, -tr.tx_trend);
                    }
                }
            }
        }
    });
}

pub fn silence_before_serving_switch((ops, rx, tx): &Case) {
    let mut switched = false;
    run(ops, *rx, *tx, |_, _, _, actions| {
        for a in actions {
            if matches!(a, Action::DeclareServingSwitch { .. }) {
                switched = true;
            }
            if a.is_uplink() && !switched {
                assert_eq!(a.cell(), Some(0), "uplink to a neighbour before the switch: {a:?}");
                assert!(!matches!(a, Action::SendPreamble { .. }));
            }
        }
    });
}

pub fn progress_within_max_attempts((ops, rx, tx): &Case) {
    let cfg = ProtocolConfig::default();
    let mut preambles = 0;
    run(ops, *rx, *tx, |_, _, next, actions| {
        preambles += actions.iter().filter(|a| matches!(a, Action::SendPreamble { .. })).count() as u32;
        assert!(preambles <= cfg.max_ra_attempts);
        assert!(next.ra_attempts < cfg.max_ra_attempts || next.phase.is_terminal());
        if next.phase.in_access() {
            // a pending preamble always has a deadline, so time alone ends access
            assert!(next.ra_deadline_ms.is_some());
            assert!(next.neighbor.is_some());
        }
        if next.phase.is_terminal() {
            assert!(next.probe.is_none());
        }
    });
}

pub fn step_is_pure((ops, rx, tx): &Case) {
    let p = protocol();
    run(ops, *rx, *tx, |s, input, next, actions| {
        let (again, again_actions) = p.step(s, *input).unwrap();
        assert_eq!(&again, next);
        assert_eq!(again_actions, actions);
    });
}

/// Every state-machine invariant on one case.
pub fn all_invariants(case: &Case) {
    beam_locality(case);
    three_db_soundness(case);
    silence_before_serving_switch(case);
    progress_within_max_attempts(case);
    step_is_pure(case);
}
