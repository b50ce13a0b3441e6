//! Driving the state machine by hand: a serving sample 3 dB under its
//! reference opens a probe of both neighbouring receive beams, and the
//! stronger one wins.
//!
//!     cargo run --example protocol_step

use silent_tracker::protocol::BeamBooks;
use silent_tracker::{MeasurementReport, Protocol, ProtocolConfig, ProtocolInput, ProtocolState};

fn sample(t_ms: u64, rx_beam: usize, rss_dbm: f64) -> ProtocolInput {
    ProtocolInput::Measurement(MeasurementReport { t_ms, cell_id: 0, tx_beam: 4, rx_beam, rss_dbm })
}

pub fn main() {
    let protocol = Protocol::new(ProtocolConfig::default(), BeamBooks::uniform(18, 18));
    let mut state = ProtocolState::connected(0, 3, 4);
    let inputs = [
        sample(19, 3, -40.0),
        sample(39, 3, -41.5),
        // 3.5 dB under the best sample so far
        sample(59, 3, -43.5),
        sample(79, 2, -47.0),
        sample(99, 4, -40.5),
        sample(119, 4, -40.2),
    ];
    for input in inputs {
        let (next, actions) = protocol.step(&state, input).expect("valid input");
        let probe = next.probe.as_ref().map(|p| format!("probing {:?}", p.candidates)).unwrap_or_default();
        println!(
            "{input:?}\n    -> {:?}, rx beam {}, reference {:.1} dBm {probe} {actions:?}",
            next.phase, next.serving.rx_beam, next.serving.ref_rss
        );
        state = next;
    }
}
