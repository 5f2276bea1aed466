use std::path::PathBuf;

use liveclock::scenario::presets::{rotating_ring, static_pair};
use liveclock::scenario::{parse_scenario, Scenario, ScenarioError};

fn dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

#[test]
fn shipped_scenarios_parse() {
    let mut n = 0;
    for entry in std::fs::read_dir(dir()).unwrap() {
        let path = entry.unwrap().path();
        if path.extension().is_some_and(|e| e == "toml") {
            parse_scenario(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
            n += 1;
        }
    }
    assert_eq!(n, 7);
}

#[test]
fn ring_file_is_the_preset() {
    let file = parse_scenario(dir().join("sagnac_ring.toml")).unwrap();
    assert_eq!(file, rotating_ring(32, 1e5, 1e-3, 3e8, 2000.0));
}

#[test]
fn toml_round_trip() {
    for s in [static_pair(0.3, 0.7, 100.0), rotating_ring(5, 10.0, 0.01, 1e3, 50.0)] {
        let text = s.to_toml_string().unwrap();
        assert_eq!(Scenario::from_toml_str(&text).unwrap(), s);
    }
}

#[test]
fn validation_reports_every_problem() {
    let mut s = static_pair(0.3, 0.7, 100.0);
    s.nodes[0].eta = 0.0;
    s.nodes[1].eta = 2.0;
    s.channels[0].dst = "Z".into();
    let text = s.to_toml_string().unwrap();
    match Scenario::from_toml_str(&text) {
        Err(ScenarioError::Invalid(errs)) => assert!(errs.len() >= 3, "{errs:?}"),
        other => panic!("{other:?}"),
    }
}

#[test]
fn syntax_errors_carry_a_position() {
    match Scenario::from_toml_str("seed = 1\nhorizon = [\n") {
        Err(ScenarioError::Syntax { line, .. }) => assert!(line >= 2),
        other => panic!("{other:?}"),
    }
}
