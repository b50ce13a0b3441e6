use silent_tracker::engine::config::preset_mobility;
use silent_tracker::engine::{aggregate, run_trial, run_trials, Outcome, SimConfig};
use silent_tracker::io::{format_action_log, replay};
use silent_tracker::protocol::{Action, Phase, Protocol};
use silent_tracker::{CodebookSpec, Pose, Scenario};

fn protocol_for(cfg: &SimConfig) -> Protocol {
    let r = cfg.resolve().unwrap();
    Protocol::new(r.protocol, r.books)
}

#[test]
fn walk_default_ends_in_soft_handover() {
    let r = run_trial(&SimConfig::scenario(Scenario::Walk), 0).unwrap();
    assert_eq!(r.outcome, Outcome::Soft);
    assert!(r.success);
    assert_eq!(r.neighbor_cell, Some(1));
    assert!(r.discovery_latency_s.unwrap() <= 0.36);
    assert!(r.interruption_s.unwrap() > 0.0);
    assert!(r.end_ms < 10_000);
    assert_eq!(r.action_log.last().unwrap().action, Action::DeclareSoftHandover);
}

#[test]
fn trace_rows_are_time_ordered_and_quantized() {
    let r = run_trial(&SimConfig::scenario(Scenario::Vehicular), 3).unwrap();
    assert!(!r.rss_trace.is_empty());
    for w in r.rss_trace.windows(2) {
        assert!(w[0].t_ms <= w[1].t_ms);
    }
    for row in &r.rss_trace {
        assert_eq!(row.t_ms % 20, 19);
        assert_eq!(row.rss_dbm, format!("{:.3}", row.rss_dbm).parse::<f64>().unwrap());
    }
}

#[test]
fn no_uplink_to_neighbor_before_serving_switch() {
    for sc in [Scenario::Walk, Scenario::Rotation, Scenario::Vehicular] {
        let mut cfg = SimConfig::scenario(sc);
        cfg.mobile.channel.shadowing_sigma_db = 4.0;
        for trial in 0..5 {
            let r = run_trial(&cfg, trial).unwrap();
            let switch = r.serving_switch_ms.unwrap_or(u64::MAX);
            for rec in &r.action_log {
                if rec.action.is_uplink() && rec.action.cell() != Some(0) {
                    assert!(rec.t_ms >= switch, "{sc} trial {trial}: {rec:?}");
                }
            }
        }
    }
}

#[test]
fn closed_loop_matches_replay() {
    let mut cfg = SimConfig::scenario(Scenario::Walk);
    cfg.mobile.channel.shadowing_sigma_db = 2.0;
    for sc in [Scenario::Walk, Scenario::Rotation, Scenario::Vehicular] {
        let cfg = cfg.with_scenario(sc);
        let p = protocol_for(&cfg);
        for trial in 0..3 {
            let r = run_trial(&cfg, trial).unwrap();
            let replayed = replay(&r.rss_trace, &p, Some(r.end_ms)).unwrap();
            assert_eq!(format_action_log(&replayed), format_action_log(&r.action_log), "{sc} trial {trial}");
        }
    }
}

#[test]
fn same_seed_same_trial() {
    let mut cfg = SimConfig::scenario(Scenario::Walk);
    cfg.mobile.channel.shadowing_sigma_db = 4.0;
    let a = run_trial(&cfg, 4).unwrap();
    let b = run_trial(&cfg, 4).unwrap();
    assert_eq!(a, b);
    let c = run_trial(&cfg, 5).unwrap();
    assert_ne!(a.rss_trace, c.rss_trace);
}

#[test]
fn omni_mobile_cannot_hold_the_edge() {
    let cfg = SimConfig::scenario(Scenario::Walk).with_mobile_codebook(CodebookSpec::omni());
    let r = run_trial(&cfg, 0).unwrap();
    assert_eq!(r.outcome, Outcome::Hard);
    assert!(!r.success);
}

#[test]
fn static_mobile_inside_coverage_never_hands_over() {
    let mut cfg = SimConfig::scenario(Scenario::Static);
    cfg.mobile.mobility.start = Some(Pose { x: 3.0, y: 0.0, heading: 0.0 });
    let r = run_trial(&cfg, 0).unwrap();
    assert_eq!(r.outcome, Outcome::Fail);
    assert!(r.search_started_ms.is_none());
    assert!(r.action_log.is_empty());
    assert_eq!(r.rss_trace.len(), 100);
}

#[test]
fn rotation_switches_serving_beam_steadily() {
    let mut cfg = SimConfig::scenario(Scenario::Rotation);
    cfg.mobile.mobility.start = Some(Pose { x: 2.0, y: 0.0, heading: 0.0 });
    let r = run_trial(&cfg, 0).unwrap();
    // three seconds at 120 deg/s sweep 360 degrees: 18 beams
    assert_eq!(r.rx_switches.get(&0).copied(), Some(18));
    assert!(r.action_log.iter().all(|a| a.phase == Phase::TrackServingOnly));
}

#[test]
fn aggregate_ignores_trial_order() {
    let mut cfg = SimConfig::scenario(Scenario::Walk);
    cfg.mobile.channel.shadowing_sigma_db = 4.0;
    let reports = run_trials(&cfg, 12).unwrap();
    let mut reversed = reports.clone();
    reversed.reverse();
    let a = aggregate(Scenario::Walk, "20deg", &reports);
    let b = aggregate(Scenario::Walk, "20deg", &reversed);
    assert_eq!(a, b);
    assert_eq!(a.trials, 12);
    for (i, r) in reports.iter().enumerate() {
        assert_eq!(r.trial_index, i as u64);
        assert_eq!(*r, {
            let mut full = run_trial(&cfg, i as u64).unwrap();
            full.rss_trace.clear();
            full.action_log.clear();
            full
        });
    }
}

#[test]
fn preset_paths_cross_the_overlap() {
    let cfg = SimConfig::scenario(Scenario::Walk);
    let r = cfg.resolve().unwrap();
    let m = preset_mobility(Scenario::Walk);
    let end = m.pose_at(cfg.duration_s).unwrap();
    assert!(end.distance_to(&r.cells[0].pose) > r.cells[0].coverage_radius_m);
    assert!(end.distance_to(&r.cells[1].pose) < r.cells[1].coverage_radius_m);
}
