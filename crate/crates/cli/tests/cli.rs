use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use seir_mtl::artifacts::read_control_csv;
use seir_mtl::logic::{parse, robustness};
use seir_mtl::trajectory::{State, Trajectory};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_seir-mtl"))
}

fn scenario(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(format!("{name}.scn"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn synthesized_control_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let v1 = scenario("vaccination_1");
    let out = run(&["synthesize", path(&v1), "-o", path(dir.path())]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    for f in ["control.csv", "trajectory.csv", "report.json"] {
        assert!(dir.path().join(f).exists(), "{f} missing");
    }
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["certified"], true);

    let control = dir.path().join("control.csv");
    let u = read_control_csv(&fs::read_to_string(&control).unwrap()).unwrap();
    assert_eq!(u.len(), 100);
    let out = run(&["verify", path(&v1), "-u", path(&control)]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["interval_robustness"]["lo"].as_f64().unwrap() >= 0.0);
    assert_eq!(v["containment_violations"], 0);
}

fn write_control(dir: &Path, values: &[f64]) -> PathBuf {
    let p = dir.join("u.csv");
    let mut text = String::from("day,u\n");
    for (k, v) in values.iter().enumerate() {
        text.push_str(&format!("{k},{v}\n"));
    }
    fs::write(&p, text).unwrap();
    p
}

#[test]
fn zero_control_is_not_certified() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_control(dir.path(), &[0.0; 100]);
    let out = run(&["verify", path(&scenario("vaccination_1")), "-u", path(&u)]);
    assert_eq!(code(&out), 2);
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert!(v["interval_robustness"]["lo"].as_f64().unwrap() < 0.0);
}

#[test]
fn truncated_control_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let u = write_control(dir.path(), &[0.0; 60]);
    let out = run(&["verify", path(&scenario("vaccination_1")), "-u", path(&u)]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("horizon"));
}

#[test]
fn malformed_scenario_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("shield_1")).unwrap();
    let broken = dir.path().join("broken.scn");
    fs::write(
        &broken,
        text.replace("G[0,100](I <= 0.6)", "G[0,100](I <=)"),
    )
    .unwrap();
    let out = run(&["simulate", path(&broken), "--zero"]);
    assert_eq!(code(&out), 1);
    let short = dir.path().join("short.scn");
    fs::write(&short, text.replace("days = 100", "days = 30")).unwrap();
    assert_eq!(code(&run(&["simulate", path(&short), "--zero"])), 1);
}

fn rows(csv: &str) -> Vec<Vec<f64>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn uncontrolled_simulation_breaks_the_infection_cap() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "simulate",
        path(&scenario("vaccination_1")),
        "--zero",
        "-o",
        path(dir.path()),
    ]);
    assert_eq!(code(&out), 2);
    let csv = fs::read_to_string(dir.path().join("trajectory.csv")).unwrap();
    assert!(csv.starts_with("day,I,E,S,R,D"));
    let data = rows(&csv);
    assert_eq!(data.len(), 101);
    assert!(data.iter().any(|r| r[1] > 0.3));
    // the CSV carries nine significant digits
    let n0: f64 = data[0][1..].iter().sum();
    for r in &data {
        let n: f64 = r[1..].iter().sum();
        assert!((n - n0).abs() <= 1e-7 * n0);
    }
    let sim: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("simulation.json")).unwrap())
            .unwrap();
    assert_eq!(sim["satisfied"], false);
    assert!(sim["max_conservation_drift"].as_f64().unwrap() <= 1e-9 * n0);
}

#[test]
fn disease_free_start_stays_clean() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(scenario("shield_1")).unwrap();
    let clean = dir.path().join("clean.scn");
    let text = text
        .replace("I = 0.001 +- 0.001", "I = 0")
        .replace("E = 0.02 +- 0.001", "E = 0")
        .replace("& F[40,60](R >= 1)", "");
    fs::write(&clean, text).unwrap();
    let out = run(&["simulate", path(&clean), "--zero"]);
    assert_eq!(code(&out), 0);
    assert!(rows(&stdout(&out))
        .iter()
        .all(|r| r[1] == 0.0 && r[2] == 0.0));
}

#[test]
fn robustness_of_constant_infection() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.csv");
    let mut text = String::from("day,I\n");
    for k in 0..=10 {
        text.push_str(&format!("{k},0.2\n"));
    }
    fs::write(&traj, &text).unwrap();
    let spec = "G[0,10](I <= 0.3)";
    let out = run(&["robustness", "-s", spec, "-t", path(&traj)]);
    assert_eq!(code(&out), 0);
    let rho: f64 = stdout(&out).trim().parse().unwrap();
    assert!((rho - 0.1).abs() <= 1e-12);
    let direct = robustness(
        &Trajectory::new(vec![State::new(0.2, 0.0, 0.0, 0.0, 0.0); 11], 1.0),
        &parse(spec).unwrap(),
        0,
    )
    .unwrap();
    assert_eq!(rho, direct);

    let short = dir.path().join("short.csv");
    fs::write(&short, text.lines().take(6).collect::<Vec<_>>().join("\n")).unwrap();
    assert_eq!(
        code(&run(&["robustness", "-s", spec, "-t", path(&short)])),
        1
    );
    let out = run(&["robustness", "-s", "G[0,10](I <= ", "-t", path(&traj)]);
    assert_eq!(code(&out), 1);
    let out = run(&["robustness", "-s", "G[0,10](R <= 1)", "-t", path(&traj)]);
    assert_eq!(code(&out), 1);
}

#[test]
fn violated_formula_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let traj = dir.path().join("t.csv");
    fs::write(&traj, "day,I\n0,0.5\n1,0.1\n").unwrap();
    let out = run(&["robustness", "-s", "G[0,1](I <= 0.3)", "-t", path(&traj)]);
    assert_eq!(code(&out), 2);
    let rho: f64 = stdout(&out).trim().parse().unwrap();
    assert!((rho + 0.2).abs() <= 1e-12);
}
