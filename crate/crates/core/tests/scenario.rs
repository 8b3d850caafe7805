mod common;

use common::{scenario, scenario_path, SCENARIOS};
use seir_mtl::dynamics::ControlKind;
use seir_mtl::scenario::parse_scenario;

#[test]
fn bundled_scenarios_load() {
    for name in SCENARIOS {
        let s = scenario(name);
        assert_eq!(s.name, name);
        assert_eq!(s.horizon, 100);
        assert!(s.formula.horizon() <= s.horizon);
        let kind = if name.starts_with("shield") {
            ControlKind::Shield
        } else {
            ControlKind::Vaccination
        };
        assert_eq!(s.model.kind, kind);
        assert!(
            (s.theta.lower.beta - 0.749).abs() < 1e-12
                && (s.theta.upper.beta - 0.751).abs() < 1e-12
        );
        assert_eq!(s.theta.lower.mu, s.theta.lower.lambda);
    }
}

fn text(name: &str) -> String {
    std::fs::read_to_string(scenario_path(name)).unwrap()
}

#[test]
fn unknown_key_is_rejected() {
    let bad = text("vaccination_1").replace("u_max = 1", "u_max = 1\nu_min = 0");
    let e = parse_scenario(&bad, "x").unwrap_err().to_string();
    assert!(e.contains("u_min"), "{e}");
}

#[test]
fn short_horizon_is_rejected() {
    let bad = text("vaccination_1").replace("days = 100", "days = 50");
    let e = parse_scenario(&bad, "x").unwrap_err().to_string();
    assert!(e.contains("horizon"), "{e}");
}

#[test]
fn malformed_formula_is_rejected() {
    let bad = text("shield_2").replace("G[0,100](I", "G[0,100(I");
    assert!(parse_scenario(&bad, "x").is_err());
}

#[test]
fn missing_parameter_is_rejected() {
    let bad = text("shield_3").replace("gamma = 0.2 +- 0.001\n", "");
    let e = parse_scenario(&bad, "x").unwrap_err().to_string();
    assert!(e.contains("gamma"), "{e}");
}
