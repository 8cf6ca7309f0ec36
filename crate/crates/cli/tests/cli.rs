use std::path::Path;
use std::process::{Command, Output};

use hamel_oc::config::Format;
use hamel_oc::table::Table;

fn hamel_oc(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hamel-oc"))
        .args(args)
        .env_remove("HAMEL_OC_LOG")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn summary_value(text: &str, key: &str) -> String {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key}: ")))
        .unwrap_or_else(|| panic!("no `{key}` in:\n{text}"))
        .to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn sphere_fig2_writes_states_and_controls() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("fig2.csv");
    let o = hamel_oc(&["solve", "--model", "sphere_dyn", "--scenario", "fig2", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let text = stdout(&o);
    assert_eq!(summary_value(&text, "converged"), "true");
    let residual: f64 = summary_value(&text, "residual").parse().unwrap();
    assert!(residual <= 1e-6, "residual {residual}");

    let table = Table::load(&out).unwrap();
    assert_eq!(table.columns.len(), 1 + 12 + 3, "{:?}", table.columns);
    assert_eq!(table.columns[13..], ["Q1", "Q2", "Q3"]);
    assert_eq!(table.rows.len(), 201);
    assert_eq!(table.meta("converged"), Some("true"));
    // Rest to rest: the first and last rows have zero quasi-velocities.
    for row in [&table.rows[0], table.rows.last().unwrap()] {
        assert!(row[4..7].iter().all(|u| u.abs() < 1e-6), "{row:?}");
    }
}

#[test]
fn heisenberg_steer_z_converges_to_the_first_branch() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("steer.json");
    let o = hamel_oc(&["solve", "--model", "heisenberg", "--scenario", "steer_z", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let cost: f64 = summary_value(&stdout(&o), "cost").parse().unwrap();
    assert!((cost - std::f64::consts::PI).abs() < 1e-6, "cost {cost}");

    let table = Table::load(&out).unwrap();
    assert_eq!(table.columns, ["t", "q1", "q2", "q3", "u2", "u3", "mu1"]);
    let diagnostics = table.diagnostics.expect("json carries diagnostics");
    assert_eq!(diagnostics["converged"], true);
    let last = table.rows.last().unwrap();
    assert!((last[1].abs() + last[2].abs() + (last[3] - 1.0).abs()) < 1e-8, "{last:?}");
}

#[test]
fn csv_round_trip_reproduces_the_cost() {
    let dir = tempfile::tempdir().unwrap();
    for (model, scenario) in [("vertical_disc_dyn", "roll"), ("falling_disc_kin", "tilt")] {
        let out = dir.path().join(format!("{model}.csv"));
        let o = hamel_oc(&["solve", "--model", model, "--scenario", scenario, "--out", path_str(&out)]);
        assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
        let printed: f64 = summary_value(&stdout(&o), "cost").parse().unwrap();

        let again = hamel_oc(&["cost", path_str(&out)]);
        assert_eq!(again.status.code(), Some(0), "{}", stderr(&again));
        let reread: f64 = summary_value(&stdout(&again), "cost").parse().unwrap();
        assert!((reread - printed).abs() <= 1e-12, "{model}: {printed} vs {reread}");
    }
}

#[test]
fn table_goes_to_stdout_without_out() {
    let o = hamel_oc(&["solve", "--model", "heisenberg", "--scenario", "hold", "--steps", "20"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = Table::read(&stdout(&o), Format::Csv).unwrap();
    assert_eq!(table.rows.len(), 21);
    assert_eq!(summary_value(&stderr(&o), "converged"), "true");
}

#[test]
fn flags_define_a_problem_without_a_scenario() {
    let o = hamel_oc(&[
        "solve", "--model", "vertical_disc_dyn", "--q0", "0,0,0,0", "--q1", "0.5,0,0.5,0", "--t1", "1", "--steps", "100",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = Table::read(&stdout(&o), Format::Csv).unwrap();
    assert_eq!(table.meta("layout"), Some("dynamic"));
    let last = table.rows.last().unwrap();
    assert!((last[1] - 0.5).abs() < 1e-8 && (last[3] - 0.5).abs() < 1e-8, "{last:?}");
}

#[test]
fn malformed_q0_names_the_field() {
    let o = hamel_oc(&["solve", "--model", "heisenberg", "--q0", "0,0", "--q1", "0,0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("q0"), "{}", stderr(&o));

    let o = hamel_oc(&["solve", "--model", "heisenberg", "--q0", "0,zero,0", "--q1", "0,0,1"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("--q0"), "{}", stderr(&o));
}

#[test]
fn unknown_names_list_the_valid_ones() {
    let o = hamel_oc(&["solve", "--model", "unicycle"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("sphere_dyn"), "{}", stderr(&o));

    let o = hamel_oc(&["verify", "--model", "unicycle"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("heisenberg"), "{}", stderr(&o));

    let o = hamel_oc(&["solve", "--model", "heisenberg", "--scenario", "fig2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("steer_z"), "{}", stderr(&o));
}

#[test]
fn non_convergence_exits_2_with_a_best_effort_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("partial.csv");
    let o = hamel_oc(&[
        "solve", "--model", "sphere_dyn", "--scenario", "fig2", "--max-iters", "1", "--restarts", "0", "--out",
        path_str(&out),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
    assert!(stderr(&o).contains("no convergence"), "{}", stderr(&o));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.lines().next().unwrap().contains("converged=false"), "{text:.200}");
    assert_eq!(Table::read(&text, Format::Csv).unwrap().rows.len(), 201);
}

#[test]
fn verify_heisenberg_passes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("report.json");
    let o = hamel_oc(&["verify", "--model", "heisenberg", "--out", path_str(&out)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 1);
    assert_eq!(reports[0]["subject"], "heisenberg");
    let checks = reports[0]["checks"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["pass"] == true));
    assert!(checks.iter().any(|c| c["name"].as_str().unwrap().contains("steer_z")));
}

#[test]
fn verify_all_passes() {
    let o = hamel_oc(&["verify"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reports = reports.as_array().unwrap();
    assert_eq!(reports.len(), 6);
    assert!(reports.iter().all(|r| r["checks"].as_array().unwrap().iter().all(|c| c["pass"] == true)));
}

#[test]
fn verify_all_quick_passes() {
    let o = hamel_oc(&["verify", "--quick"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let reports: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 6);
}

#[test]
fn simulate_vertical_disc_unit_torque() {
    let o = hamel_oc(&["simulate", "--model", "vertical_disc_dyn", "--forces", "1,0", "--t1", "1.5", "--steps", "30"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = Table::read(&stdout(&o), Format::Csv).unwrap();
    assert_eq!(table.columns, ["t", "q1", "q2", "q3", "q4", "u3", "u4", "Q3", "Q4"]);
    // θ̈ = 2/3 from rest: u₃ = 2t/3 and θ = t²/3.
    for row in &table.rows {
        let t = row[0];
        assert!((row[5] - 2.0 * t / 3.0).abs() < 1e-12, "{row:?}");
        assert!((row[3] - t * t / 3.0).abs() < 1e-12, "{row:?}");
        assert_eq!(row[7], 1.0);
    }
}

#[test]
fn simulate_rest_stays_at_rest() {
    let o = hamel_oc(&["simulate", "--model", "rigid_body_dyn", "--q0", "0.1,-0.2,0.3", "--steps", "10"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = Table::read(&stdout(&o), Format::Csv).unwrap();
    let last = table.rows.last().unwrap();
    assert_eq!(&last[1..7], &[0.1, -0.2, 0.3, 0.0, 0.0, 0.0]);
}

#[test]
fn simulate_rejects_kinematic_models() {
    let o = hamel_oc(&["simulate", "--model", "heisenberg"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("mechanics"), "{}", stderr(&o));
}

#[test]
fn toml_config_solves_and_flags_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("disc.toml");
    let out = dir.path().join("disc.json");
    std::fs::write(
        &cfg,
        format!(
            r#"
model = "vertical_disc_dyn"
layout = "dynamic"

[bc]
t1 = 2.0
q0 = [0, 0, 0, 0]
q1 = [0.5, 0, 0.5, 0]

[solver]
steps = 120

[output]
path = "{}"
"#,
            out.display()
        ),
    )
    .unwrap();
    let o = hamel_oc(&["solve", "--config", path_str(&cfg), "--t1", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let table = Table::load(&out).unwrap();
    assert_eq!(table.rows.len(), 121);
    assert_eq!(table.rows.last().unwrap()[0], 1.0);
    let diagnostics = table.diagnostics.unwrap();
    assert_eq!(diagnostics["solver"]["steps"], 120);
}

#[test]
fn toml_errors_report_the_line() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "model = \"heisenberg\"\n\n[bc]\nq0 = [0, 0, 0]\nqq1 = [0, 0, 1]\n").unwrap();
    let o = hamel_oc(&["solve", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    let err = stderr(&o);
    assert!(err.contains("line 5") && err.contains("qq1"), "{err}");

    std::fs::write(&cfg, "model = \"heisenberg\"\n[bc]\nq0 = [0, 0]\nq1 = [0, 0, 1]\n").unwrap();
    let o = hamel_oc(&["solve", "--config", path_str(&cfg)]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("bc.q0: length 2, expected 3"), "{}", stderr(&o));
}

#[test]
fn list_shows_every_model() {
    let o = hamel_oc(&["list"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    for name in hamel_core::models::MODEL_NAMES {
        assert!(text.contains(name), "{name} missing from\n{text}");
    }
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(hamel_oc(&[]).status.code(), Some(1));
    assert_eq!(hamel_oc(&["solve", "--bogus"]).status.code(), Some(1));
    assert_eq!(hamel_oc(&["--help"]).status.code(), Some(0));
}
