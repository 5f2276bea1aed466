use liveclock::engine::{inject_oracle, run, Simulation};
use liveclock::scenario::presets::static_pair;
use liveclock::scenario::{parse_scenario, DriftConfig, Scenario};
use liveclock::trace::{writer_for, EventKind, TraceFormat, TraceRow};
use liveclock::{ClockState, DriftModel};

fn scenario(name: &str) -> Scenario {
    parse_scenario(format!("{}/../../scenarios/{name}", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn csv_bytes(s: &Scenario) -> Vec<u8> {
    let mut buf = Vec::new();
    {
        let mut sink = writer_for(TraceFormat::Csv, &mut buf);
        Simulation::new(s).unwrap().run(sink.as_mut()).unwrap();
    }
    buf
}

#[test]
fn same_seed_same_bytes() {
    for name in ["two_node.toml", "phase_gate.toml", "einstein_pair.toml"] {
        let s = scenario(name);
        assert_eq!(csv_bytes(&s), csv_bytes(&s), "{name}");
    }
}

#[test]
fn other_seed_other_trace() {
    let mut s = scenario("two_node.toml");
    let a = csv_bytes(&s);
    s.seed += 1;
    assert_ne!(a, csv_bytes(&s));
}

#[test]
fn rows_are_time_ordered() {
    for name in ["two_node.toml", "phase_gate.toml", "sagnac_ring.toml"] {
        let trace = run(&scenario(name)).unwrap();
        assert!(trace.rows.windows(2).all(|w| w[0].time_s <= w[1].time_s), "{name}");
    }
}

#[test]
fn arrival_readings_follow_free_running_clock() {
    let mut s = static_pair(0.3, 0.37, 300.0);
    s.nodes[1].drift = DriftConfig {
        white_fm_sigma: 1e-3,
        rw_fm_sigma: 1e-5,
        seed: None,
    };
    s.nodes[1].controller.enabled = false;
    let cfg = s.nodes[1].clone();
    let base = ClockState::new(
        s.node_rate(&cfg),
        cfg.eta,
        DriftModel {
            white_fm_sigma: cfg.drift.white_fm_sigma,
            rw_fm_sigma: cfg.drift.rw_fm_sigma,
            seed: s.node_seed(&cfg),
        },
    )
    .unwrap()
    .with_reading(cfg.initial_reading);

    let trace = run(&s).unwrap();
    let rows: Vec<&TraceRow> = trace.arrivals().filter(|r| r.node_id == "B").collect();
    assert!(rows.len() > 250);
    for r in rows {
        let mut c = base.clone();
        c.advance(r.time_s, 1.0).unwrap();
        assert!(
            (c.reading - r.reading_cycles).abs() < 1e-9,
            "t={} {} vs {}",
            r.time_s,
            c.reading,
            r.reading_cycles
        );
    }
}

#[test]
fn tick_count_matches_horizon() {
    let mut s = static_pair(0.5, 0.5, 1000.0);
    s.nodes[0].rate = Some(1.01);
    s.nodes[1].rate = Some(0.97);
    for c in &mut s.nodes {
        c.controller.enabled = false;
    }
    let trace = run(&s).unwrap();
    for (id, rate) in [("A", 1.01), ("B", 0.97)] {
        let ticks = trace.of_kind(EventKind::Tick).filter(|r| r.node_id == id).count() as f64;
        assert!((ticks - (1000.0 * rate + 1.0)).abs() <= 1.0, "{id}: {ticks}");
    }
}

#[test]
fn lone_node_only_ticks() {
    let mut s = static_pair(0.5, 1.0, 50.0);
    s.nodes.truncate(1);
    s.channels.clear();
    let trace = run(&s).unwrap();
    assert_eq!(trace.rows.len(), 51);
    assert!(trace.rows.iter().all(|r| r.event_kind == EventKind::Tick));
    for (k, r) in trace.rows.iter().enumerate() {
        assert_eq!(r.count, k as i64);
        assert_eq!(r.time_s, k as f64);
    }
}

#[test]
fn quarter_phase_arrivals() {
    // Every arrival lands at phase 0.25: inside the window for eta 0.4
    // (half width 0.3), outside for eta 0.6 (half width 0.2).
    for (eta, accepted) in [(0.4, true), (0.6, false)] {
        let trace = run(&static_pair(eta, 0.25, 20.0)).unwrap();
        let arrivals: Vec<_> = trace.arrivals().collect();
        assert!(arrivals.len() >= 38);
        for r in arrivals {
            assert!((r.phase - 0.25).abs() < 1e-12);
            assert_eq!(r.accepted, Some(accepted));
        }
    }
}

#[test]
fn oracle_outside_window_waits_for_tick() {
    let s = static_pair(0.5, 0.25, 10.0);
    let inside = inject_oracle(&s, "A", 3.1, "42").unwrap();
    let outside = inject_oracle(&s, "A", 3.4, "42").unwrap();
    let oracle_rows = |s: &Scenario| run(s).unwrap().of_kind(EventKind::Oracle).cloned().collect::<Vec<_>>();
    let rows = oracle_rows(&inside);
    assert_eq!(rows.len(), 1);
    assert_eq!(
        (rows[0].time_s, rows[0].payload.as_deref(), rows[0].accepted),
        (3.1, Some("42"), Some(true))
    );
    let rows = oracle_rows(&outside);
    assert_eq!(rows.len(), 2);
    assert_eq!((rows[0].time_s, rows[0].accepted), (3.4, Some(false)));
    assert_eq!(
        (rows[1].time_s, rows[1].count, rows[1].phase, rows[1].accepted),
        (4.0, 4, 0.0, Some(true))
    );
}

#[test]
fn invalid_scenario_is_rejected_before_running() {
    let mut s = static_pair(0.5, 1.0, 10.0);
    s.nodes[1].eta = 1.5;
    assert!(Simulation::new(&s).is_err());
    assert!(run(&s).is_err());
}
