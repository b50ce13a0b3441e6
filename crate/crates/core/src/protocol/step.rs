use super::{
    Action, CellId, CellTrack, MeasurementReport, Phase, Probe, Protocol, ProtocolError, ProtocolInput, ProtocolState,
    SearchCursor,
};
use crate::codebook::ring_step;

pub(super) fn apply(p: &Protocol, s: &mut ProtocolState, input: ProtocolInput) -> Result<Vec<Action>, ProtocolError> {
    let t = input.t_ms();
    if let Some(last) = s.last_t_ms {
        if t < last {
            return Err(ProtocolError::TimestampRegression { last, got: t });
        }
    }
    if let ProtocolInput::Measurement(m) = input {
        if !m.rss_dbm.is_finite() {
            return Err(ProtocolError::NonFiniteRss(m.rss_dbm));
        }
        if m.rx_beam >= p.books.mobile_beams {
            return Err(ProtocolError::BeamOutOfRange { cell: m.cell_id, beam: m.rx_beam });
        }
        if m.tx_beam >= p.books.cell(m.cell_id) {
            return Err(ProtocolError::BeamOutOfRange { cell: m.cell_id, beam: m.tx_beam });
        }
    }
    s.last_t_ms = Some(t);

    let mut out = Vec::new();
    if s.phase.is_terminal() {
        return Ok(out);
    }
    match input {
        ProtocolInput::Measurement(m) => on_measurement(p, s, m, &mut out),
        ProtocolInput::SlotTick(t) => on_tick(p, s, t, &mut out),
        ProtocolInput::UplinkAck { cell, .. } => on_ack(s, cell),
        ProtocolInput::UplinkNack { t_ms, cell } => on_nack(p, s, cell, t_ms, &mut out),
        ProtocolInput::RaResponse { t_ms, success } => on_ra_response(p, s, success, t_ms, &mut out),
    }
    Ok(out)
}

fn on_measurement(p: &Protocol, s: &mut ProtocolState, m: MeasurementReport, out: &mut Vec<Action>) {
    let cell = m.cell_id;
    if cell == s.serving.cell_id && !s.phase.in_access() {
        serving_measurement(p, s, m, out);
    } else if s.neighbor.as_ref().is_some_and(|n| n.cell_id == cell) {
        neighbor_measurement(p, s, m, out);
    } else if s.phase == Phase::Search && cell != s.serving.cell_id {
        search_measurement(p, s, m);
    } else {
        s.diagnostics.ignored_measurements += 1;
    }
}

/// Records `m` against an open probe of its cell. Returns false when `m` is
/// not a pending probe sample.
fn take_probe_sample(p: &Protocol, s: &mut ProtocolState, m: &MeasurementReport, out: &mut Vec<Action>) -> bool {
    let Some(probe) = s.probe.as_mut() else { return false };
    if probe.cell != m.cell_id
        || !probe.candidates.contains(&m.rx_beam)
        || probe.samples.iter().any(|x| x.0 == m.rx_beam)
    {
        return false;
    }
    probe.samples.push((m.rx_beam, m.tx_beam, m.rss_dbm));
    if probe.next_beam().is_none() {
        let probe = s.probe.take().expect("probe present");
        resolve_probe(p, s, probe, m.t_ms, out);
    }
    true
}

fn smooth(p: &Protocol, track: &CellTrack, raw: f64) -> f64 {
    match p.config.ewma_alpha {
        Some(a) if track.last_rss.is_finite() && !track.awaiting_sample => a * raw + (1.0 - a) * track.last_rss,
        _ => raw,
    }
}

fn absorb_sample(p: &Protocol, track: &mut CellTrack, raw: f64) -> f64 {
    let v = smooth(p, track, raw);
    if track.awaiting_sample {
        track.reset_reference(v);
        track.awaiting_sample = false;
    } else {
        *track = track.update_reference(v);
    }
    v
}

fn serving_measurement(p: &Protocol, s: &mut ProtocolState, m: MeasurementReport, out: &mut Vec<Action>) {
    if take_probe_sample(p, s, &m, out) {
        return;
    }
    if m.rx_beam != s.serving.rx_beam {
        s.diagnostics.ignored_measurements += 1;
        return;
    }
    let cfg = &p.config;
    if m.rss_dbm < cfg.sensitivity_dbm {
        s.failure_count += 1;
    } else {
        s.failure_count = 0;
    }
    let track = &mut s.serving;
    track.below_count = s.failure_count;
    track.tx_beam = m.tx_beam;
    let v = absorb_sample(p, track, m.rss_dbm);
    // the first sample after an acknowledged transmit switch judges it
    let mut revert = false;
    if let Some(before) = track.tx_check.take() {
        if v < before {
            track.tx_trend = -track.tx_trend;
            revert = true;
        }
    }
    if s.failure_count >= cfg.failure_samples {
        serving_failure(p, s, m.t_ms, out);
        return;
    }
    match s.phase {
        Phase::TrackServingOnly if v < cfg.edge_threshold_dbm => {
            enter_search(p, s, m.t_ms, out);
            return;
        }
        Phase::TrackServingOnly | Phase::DualTrack => {}
        _ => return,
    }
    if revert {
        escalate(p, s, f64::NEG_INFINITY, out);
        return;
    }
    if s.serving.dropped(cfg.drop_threshold_db) && s.probe.is_none() {
        open_probe(p, s, s.serving.cell_id, m.t_ms, out);
    }
}

fn neighbor_measurement(p: &Protocol, s: &mut ProtocolState, m: MeasurementReport, out: &mut Vec<Action>) {
    if take_probe_sample(p, s, &m, out) {
        return;
    }
    let cfg = &p.config;
    let track = s.neighbor.as_mut().expect("neighbor present");
    if m.rx_beam != track.rx_beam {
        s.diagnostics.ignored_measurements += 1;
        return;
    }
    // the neighbour's best transmit beam is read off its sweep, no uplink
    track.tx_beam = m.tx_beam;
    if m.rss_dbm < cfg.sensitivity_dbm {
        track.below_count += 1;
    } else {
        track.below_count = 0;
    }
    absorb_sample(p, track, m.rss_dbm);
    if track.below_count >= cfg.failure_samples {
        neighbor_lost(s, out);
        return;
    }
    let cell = track.cell_id;
    if track.dropped(cfg.drop_threshold_db) && s.probe.is_none() {
        open_probe(p, s, cell, m.t_ms, out);
    }
}

fn search_measurement(p: &Protocol, s: &mut ProtocolState, m: MeasurementReport) {
    let Some(cur) = s.search.as_mut() else {
        s.diagnostics.ignored_measurements += 1;
        return;
    };
    if m.t_ms < cur.dwell_start_ms || m.t_ms >= cur.dwell_end_ms || m.rss_dbm < p.config.sensitivity_dbm {
        return;
    }
    if cur.best.is_none_or(|b| m.rss_dbm > b.rss_dbm) {
        cur.best = Some(m);
    }
}

fn track_mut(s: &mut ProtocolState, cell: CellId) -> Option<&mut CellTrack> {
    if s.serving.cell_id == cell {
        Some(&mut s.serving)
    } else {
        s.neighbor.as_mut().filter(|n| n.cell_id == cell)
    }
}

fn open_probe(p: &Protocol, s: &mut ProtocolState, cell: CellId, t: u64, out: &mut Vec<Action>) {
    let Some(track) = s.track(cell) else { return };
    let candidates = p.adjacent_rx(track.rx_beam);
    let probe = Probe { cell, candidates, samples: Vec::new(), reference: track.ref_rss };
    if probe.candidates.is_empty() {
        // single-beam codebook: nothing to probe, resolve at once
        resolve_probe(p, s, probe, t, out);
    } else {
        s.probe = Some(probe);
    }
}

fn resolve_probe(p: &Protocol, s: &mut ProtocolState, probe: Probe, t: u64, out: &mut Vec<Action>) {
    let cfg = p.config;
    let n_rx = p.books.mobile_beams;
    let is_serving = probe.cell == s.serving.cell_id && !s.phase.in_access();
    let Some(track) = track_mut(s, probe.cell) else { return };

    let mut best: Option<(usize, usize, f64)> = None;
    for &(rx, tx, rss) in &probe.samples {
        best = match best {
            None => Some((rx, tx, rss)),
            Some(b) if rss > b.2 => Some((rx, tx, rss)),
            Some(b) if rss == b.2 => {
                let prefer_new = if track.last_rx_step != 0 {
                    ring_step(n_rx, track.rx_beam, rx) == track.last_rx_step
                } else {
                    rx < b.0
                };
                if prefer_new {
                    Some((rx, tx, rss))
                } else {
                    Some(b)
                }
            }
            keep => keep,
        };
    }
    let current = track.last_rss;
    match best.filter(|b| b.2 > current) {
        Some((rx, tx, rss)) => {
            track.last_rx_step = ring_step(n_rx, track.rx_beam, rx);
            track.rx_beam = rx;
            if is_serving {
                // with a fixed heading the base station sees the mobile turn
                // the same way the mobile sees the base station
                track.tx_trend = track.last_rx_step;
            } else {
                track.tx_beam = tx;
            }
            track.reset_reference(rss);
            track.awaiting_sample = false;
            let cell = track.cell_id;
            out.push(Action::SetRxBeam { cell, beam: rx });

            let below = rss < cfg.sensitivity_dbm;
            if is_serving {
                s.failure_count = if below { s.failure_count + 1 } else { 0 };
                s.serving.below_count = s.failure_count;
                if s.failure_count >= cfg.failure_samples {
                    serving_failure(p, s, t, out);
                } else if rss <= probe.reference - cfg.drop_threshold_db {
                    escalate(p, s, rss, out);
                }
            } else {
                track.below_count = if below { track.below_count + 1 } else { 0 };
                if track.below_count >= cfg.failure_samples {
                    neighbor_lost(s, out);
                }
            }
        }
        None => {
            // no better neighbour beam: restart the reference where we are
            track.reset_reference(current);
            if is_serving {
                escalate(p, s, current, out);
            }
        }
    }
}

/// Ask the serving base station to step its transmit beam in the direction
/// of `tx_trend`. `before` is the RSS the switch must beat; a revert passes
/// `-inf` so it is never undone.
fn escalate(p: &Protocol, s: &mut ProtocolState, before: f64, out: &mut Vec<Action>) {
    if !matches!(s.phase, Phase::TrackServingOnly | Phase::DualTrack) {
        return;
    }
    let track = &mut s.serving;
    let n_tx = p.books.cell(track.cell_id);
    if track.pending_tx.is_some() || n_tx < 2 {
        return;
    }
    let target = if track.tx_trend > 0 { (track.tx_beam + 1) % n_tx } else { (track.tx_beam + n_tx - 1) % n_tx };
    track.pending_tx = Some((target, before));
    out.push(Action::RequestTxBeamSwitch { cell: track.cell_id, beam: target });
}

fn enter_search(p: &Protocol, s: &mut ProtocolState, t: u64, out: &mut Vec<Action>) {
    s.phase = Phase::Search;
    s.probe = None;
    let start = t + 1;
    s.search = Some(SearchCursor {
        rx_beam: s.serving.rx_beam,
        dwell_start_ms: start,
        dwell_end_ms: start + p.config.ssb_period_ms,
        dwells_done: 0,
        best: None,
    });
    s.first_search_ms.get_or_insert(start);
    out.push(Action::StartNeighborSearch);
}

fn on_tick(p: &Protocol, s: &mut ProtocolState, t: u64, out: &mut Vec<Action>) {
    if s.phase.in_access() && s.ra_deadline_ms.is_some_and(|d| t >= d) {
        ra_failed(p, s, t, out);
        return;
    }
    if s.phase != Phase::Search {
        return;
    }
    let n_rx = p.books.mobile_beams;
    while let Some(cur) = s.search.as_mut() {
        if t < cur.dwell_end_ms {
            break;
        }
        if let Some(found) = cur.best {
            let mut track = CellTrack::new(found.cell_id, found.rx_beam, found.tx_beam);
            track.timing_known = true;
            track.reset_reference(found.rss_dbm);
            track.awaiting_sample = false;
            s.neighbor = Some(track);
            s.search = None;
            s.phase = Phase::DualTrack;
            s.discovered_ms.get_or_insert(t);
            out.push(Action::SetRxBeam { cell: found.cell_id, beam: found.rx_beam });
            break;
        }
        cur.dwells_done += 1;
        if cur.dwells_done >= n_rx {
            // full cycle without a detection: give the serving link a slot
            s.search = None;
            s.phase = Phase::TrackServingOnly;
            break;
        }
        cur.rx_beam = (cur.rx_beam + 1) % n_rx;
        cur.dwell_start_ms = cur.dwell_end_ms;
        cur.dwell_end_ms += p.config.ssb_period_ms;
    }
}

fn on_ack(s: &mut ProtocolState, cell: CellId) {
    let track = &mut s.serving;
    match track.pending_tx {
        Some((target, before)) if track.cell_id == cell && !s.phase.in_access() => {
            track.tx_beam = target;
            track.pending_tx = None;
            track.awaiting_sample = true;
            track.tx_check = Some(before);
            s.unacked_requests = 0;
        }
        _ => s.diagnostics.ignored_feedback += 1,
    }
}

fn on_nack(p: &Protocol, s: &mut ProtocolState, cell: CellId, t: u64, out: &mut Vec<Action>) {
    if s.serving.cell_id != cell || s.serving.pending_tx.is_none() || s.phase.in_access() {
        s.diagnostics.ignored_feedback += 1;
        return;
    }
    s.serving.pending_tx = None;
    s.unacked_requests += 1;
    if s.unacked_requests >= p.config.nack_limit {
        serving_failure(p, s, t, out);
    }
}

fn serving_failure(p: &Protocol, s: &mut ProtocolState, t: u64, out: &mut Vec<Action>) {
    let serving = s.serving.cell_id;
    if s.probe.as_ref().is_some_and(|pr| pr.cell == serving) {
        s.probe = None;
    }
    match (&s.phase, &s.neighbor) {
        (Phase::DualTrack, Some(n)) => {
            let cell = n.cell_id;
            s.phase = Phase::RadioLinkFailure;
            out.push(Action::DeclareServingSwitch { cell });
            send_preamble(p, s, t, out);
        }
        _ => {
            s.phase = Phase::HardHandover;
            s.search = None;
            s.probe = None;
            out.push(Action::DeclareHardHandover);
        }
    }
}

fn neighbor_lost(s: &mut ProtocolState, out: &mut Vec<Action>) {
    let Some(cell) = s.neighbor.as_ref().map(|n| n.cell_id) else { return };
    if s.probe.as_ref().is_some_and(|pr| pr.cell == cell) {
        s.probe = None;
    }
    if s.phase.in_access() {
        s.phase = Phase::HardHandover;
        s.ra_deadline_ms = None;
        out.push(Action::DeclareHardHandover);
    } else {
        s.neighbor = None;
        s.phase = Phase::TrackServingOnly;
    }
}

fn send_preamble(p: &Protocol, s: &mut ProtocolState, t: u64, out: &mut Vec<Action>) {
    let n = s.neighbor.as_ref().expect("target cell tracked");
    out.push(Action::SendPreamble { cell: n.cell_id, rx_beam: n.rx_beam, tx_beam: n.tx_beam });
    s.ra_deadline_ms = Some(t + p.config.ra_timeout_ms);
}

fn on_ra_response(p: &Protocol, s: &mut ProtocolState, success: bool, t: u64, out: &mut Vec<Action>) {
    if !s.phase.in_access() {
        s.diagnostics.ignored_feedback += 1;
        return;
    }
    if success {
        s.phase = Phase::HandoverComplete;
        s.ra_deadline_ms = None;
        s.probe = None;
        if let Some(n) = s.neighbor.take() {
            s.serving = n;
        }
        out.push(Action::DeclareSoftHandover);
    } else {
        ra_failed(p, s, t, out);
    }
}

fn ra_failed(p: &Protocol, s: &mut ProtocolState, t: u64, out: &mut Vec<Action>) {
    s.ra_attempts += 1;
    s.ra_deadline_ms = None;
    if s.ra_attempts >= p.config.max_ra_attempts {
        s.phase = Phase::HardHandover;
        s.probe = None;
        out.push(Action::DeclareHardHandover);
    } else {
        s.phase = Phase::RandomAccess;
        send_preamble(p, s, t, out);
    }
}
