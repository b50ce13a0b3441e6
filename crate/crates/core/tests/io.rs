use silent_tracker::engine::{run_sweep, run_trial, SimConfig};
use silent_tracker::io::{
    format_action_log, format_trace, parse_action_log, parse_trace, replay, IoError, Report, SWEEP_CSV_HEADER,
};
use silent_tracker::protocol::{BeamBooks, Protocol, ProtocolConfig};
use silent_tracker::{CodebookSpec, MeasurementReport, Scenario};

const HEADER: &str = "t_ms,cell_id,tx_beam,rx_beam,rss_dbm\n";

fn default_protocol() -> Protocol {
    Protocol::new(ProtocolConfig::default(), BeamBooks::uniform(18, 18))
}

#[test]
fn trace_round_trips_through_text() {
    let mut cfg = SimConfig::scenario(Scenario::Rotation);
    cfg.mobile.channel.shadowing_sigma_db = 3.0;
    let r = run_trial(&cfg, 2).unwrap();
    let text = format_trace(&r.rss_trace);
    assert!(text.starts_with(HEADER));
    let back = parse_trace(&text).unwrap();
    assert_eq!(back, r.rss_trace);
    assert_eq!(format_trace(&back), text);
}

#[test]
fn trace_values_print_with_three_decimals() {
    let rows = [MeasurementReport { t_ms: 19, cell_id: 0, tx_beam: 3, rx_beam: 4, rss_dbm: -50.0 }];
    assert_eq!(format_trace(&rows), format!("{HEADER}19,0,3,4,-50.000\n"));
}

#[test]
fn empty_or_header_only_trace_is_empty() {
    assert!(parse_trace("").unwrap().is_empty());
    assert!(parse_trace(HEADER).unwrap().is_empty());
    let log = replay(&[], &default_protocol(), None).unwrap();
    assert!(log.is_empty());
    assert_eq!(format_action_log(&log), "t_ms,phase,action,cell_id,beam_id\n");
}

#[test]
fn bad_rows_name_their_line() {
    let cases = [
        (format!("{HEADER}19,0,3,4,-50\n39,0,3,x,-50\n"), 3),
        (format!("{HEADER}19,0,3,4\n"), 2),
        (format!("{HEADER}19,0,3,4,-50\n39,0,3,4,-200\n"), 3),
        (format!("{HEADER}19,0,3,4,-50\n39,0,3,4,nan\n"), 3),
    ];
    for (text, want) in cases {
        match parse_trace(&text) {
            Err(IoError::Parse { line, .. }) => assert_eq!(line, want, "{text}"),
            other => panic!("{text}: {other:?}"),
        }
    }
}

#[test]
fn time_must_not_run_backwards() {
    let text = format!("{HEADER}39,0,3,4,-50\n19,0,3,4,-50\n");
    match parse_trace(&text) {
        Err(IoError::NonMonotonic { line, prev, got }) => assert_eq!((line, prev, got), (3, 39, 19)),
        other => panic!("{other:?}"),
    }
    // equal timestamps are allowed
    assert_eq!(parse_trace(&format!("{HEADER}19,0,3,4,-50\n19,1,2,5,-60\n")).unwrap().len(), 2);
}

#[test]
fn wrong_header_is_rejected() {
    assert!(matches!(parse_trace("t,cell,tx,rx,rss\n1,0,0,0,-50\n"), Err(IoError::Header { .. })));
}

#[test]
fn action_log_round_trips() {
    let r = run_trial(&SimConfig::scenario(Scenario::Walk), 0).unwrap();
    let text = format_action_log(&r.action_log);
    let rows = parse_action_log(&text).unwrap();
    assert_eq!(rows.len(), r.action_log.len());
    assert_eq!(rows.last().unwrap().action, "DECLARE_SOFT_HANDOVER");
    assert!(rows.iter().any(|x| x.action == "START_NEIGHBOR_SEARCH" && x.cell_id.is_none()));
    for (row, rec) in rows.iter().zip(&r.action_log) {
        assert_eq!(row.t_ms, rec.t_ms);
        assert_eq!(row.beam_id, rec.action.beam());
    }
}

#[test]
fn replay_stops_at_requested_time() {
    let r = run_trial(&SimConfig::scenario(Scenario::Walk), 0).unwrap();
    let p = default_protocol();
    let cut = r.action_log[1].t_ms + 1;
    let log = replay(&r.rss_trace, &p, Some(cut)).unwrap();
    assert!(log.iter().all(|a| a.t_ms < cut));
    assert_eq!(log[..], r.action_log[..log.len()]);
}

#[test]
fn trial_json_uses_three_decimals() {
    let r = run_trial(&SimConfig::scenario(Scenario::Walk), 0).unwrap();
    let json = r.to_json();
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["outcome"], "soft");
    assert!(v["action_log"].as_array().unwrap().len() == r.action_log.len());
    for key in ["discovery_latency_s", "alignment_ratio", "interruption_s"] {
        let line = json.lines().find(|l| l.contains(&format!("\"{key}\""))).unwrap();
        let num = line.split(':').nth(1).unwrap().trim().trim_end_matches(',');
        assert_eq!(num.split('.').nth(1).map(str::len), Some(3), "{line}");
    }
}

#[test]
fn sweep_csv_has_one_row_per_cell() {
    let base = SimConfig::scenario(Scenario::Walk);
    let books = [CodebookSpec::parse("20").unwrap(), CodebookSpec::parse("omni").unwrap()];
    let report = run_sweep(&base, &[Scenario::Walk, Scenario::Vehicular], &books, 2).unwrap();
    let csv = report.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), SWEEP_CSV_HEADER.join(","));
    let rows: Vec<Vec<&str>> = lines.map(|l| l.split(',').collect()).collect();
    assert_eq!(rows.len(), 4);
    for row in &rows {
        assert_eq!(row.len(), SWEEP_CSV_HEADER.len());
        let rate: f64 = row[2].parse().unwrap();
        assert!((0.0..=1.0).contains(&rate));
        assert_eq!(row[2].split('.').nth(1).unwrap().len(), 3);
    }
    assert_eq!((rows[0][0], rows[0][1]), ("walk", "20deg"));
    assert_eq!((rows[3][0], rows[3][1]), ("vehicular", "omni"));
}
