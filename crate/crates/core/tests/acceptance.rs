//! Acceptance criteria, one PASS/FAIL line each. Runs without the libtest
//! harness so the lines always reach the output.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use hamel_core::assembly::ForcedMechanics;
use hamel_core::models::{self, BuiltinModel, MODEL_NAMES};
use hamel_core::solvers::{self, OptimalControl, ShootingConfig, ShootingSolution};
use hamel_core::verify::{self, compare_rhs, solve_scenario, stationarity_probe, ProbeConfig, Thresholds, DEFAULT_SEED};
use hamel_core::{Layout, PhaseState, VectorField};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

type Criterion = fn() -> Outcome;

fn model(name: &str) -> BuiltinModel {
    models::builtin(name).expect("built-in model")
}

fn thresholds() -> Thresholds {
    Thresholds::default()
}

fn hamel_coefficients() -> Outcome {
    let (mut analytic, mut fd) = (0.0f64, 0.0f64);
    for name in ["heisenberg", "vertical_disc_kin", "falling_disc_kin", "rigid_body_dyn"] {
        let report = verify::check_listed_hamel(&model(name), 50, DEFAULT_SEED, &thresholds());
        let get = |c: &str| report.check(c).map_or(f64::INFINITY, |c| c.max_abs_error);
        analytic = analytic.max(get("listed hamel (analytic)"));
        fd = fd.max(get("listed hamel (fd)"));
    }
    outcome(analytic <= 1e-10 && fd <= 1e-6, format!("max error analytic {analytic:.1e}, fd {fd:.1e}"))
}

fn rhs_oracle(names: &[&str], layout: Layout, limit: f64) -> Outcome {
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for &name in names {
        match compare_rhs(&model(name), layout, 200, DEFAULT_SEED, &thresholds()) {
            Ok(r) => {
                let e = r.checks[0].max_abs_error;
                notes.push(format!("{name} {e:.1e}"));
                worst = worst.max(e);
            }
            Err(e) => {
                notes.push(format!("{name}: {e}"));
                worst = f64::INFINITY;
            }
        }
    }
    outcome(worst <= limit, notes.join(", "))
}

fn kinematic_oracle() -> Outcome {
    rhs_oracle(&["heisenberg", "vertical_disc_kin", "falling_disc_kin"], Layout::KinematicOc, 1e-8)
}

fn dynamic_oracle() -> Outcome {
    rhs_oracle(&["vertical_disc_dyn", "rigid_body_dyn", "sphere_dyn"], Layout::DynamicOc, 1e-8)
}

fn euler_recovery() -> Outcome {
    let rb = model("rigid_body_dyn");
    let equations = rhs_oracle(&["rigid_body_dyn"], Layout::Mechanics, 1e-10);
    let sys = rb.mechanical.as_ref().expect("mechanics");
    let zero = |_: f64| DVector::zeros(3);
    let field = ForcedMechanics { system: sys, forces: &zero };
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut drift = 0.0f64;
    for _ in 0..5 {
        let omega: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let start = PhaseState::from_blocks(3, 0, &[0.0; 3], &omega, None, None).expect("layout");
        let traj = match solvers::integrate(&field, &start, 0.0, 10.0, 2000) {
            Ok(t) => t,
            Err(e) => return outcome(false, format!("integration failed: {e}")),
        };
        let first = rb.invariants(&traj.state(0));
        for i in 0..traj.len() {
            for (k, (_, v)) in rb.invariants(&traj.state(i)).iter().enumerate() {
                drift = drift.max((v[0] - first[k].1[0]).abs());
            }
        }
    }
    outcome(
        equations.pass && drift <= 1e-8,
        format!("Euler equations {}; energy and |Π|² drift {drift:.1e} over [0, 10]", equations.detail),
    )
}

fn sphere_reorientation() -> Outcome {
    let sphere = model("sphere_dyn");
    let sc = sphere.scenario("fig2").expect("scenario");
    let ocp = sphere.dynamic.as_ref().expect("dynamic");
    let guess = match ocp.default_guess(&sc.bc) {
        Ok(g) => g,
        Err(e) => return outcome(false, e.to_string()),
    };
    let solve = |steps| solvers::shoot_dynamic(ocp, &sc.bc, &guess, &ShootingConfig { steps, ..Default::default() });
    let (coarse, fine) = match (solve(200), solve(400)) {
        (Ok(a), Ok(b)) => (a, b),
        (Err(e), _) | (_, Err(e)) => return outcome(false, e.to_string()),
    };
    let drift = verify::monitor(&sphere, &coarse.trajectory, &thresholds())
        .check("sphere first integral")
        .map_or(f64::INFINITY, |c| c.max_abs_error);
    let grid = (coarse.trajectory.final_state().into_vector() - fine.trajectory.final_state().into_vector()).amax();
    outcome(
        coarse.iterations <= 50 && coarse.residual_norm <= 1e-6 && drift <= 1e-6 && grid <= 1e-5,
        format!(
            "{} iterations, residual {:.1e}, first-integral drift {drift:.1e}, 200 vs 400 steps {grid:.1e}",
            coarse.iterations, coarse.residual_norm
        ),
    )
}

fn heisenberg_steering() -> Outcome {
    let h = model("heisenberg");
    let sol = match solve_scenario(&h, "steer_z", &ShootingConfig::default()) {
        Ok(s) => s,
        Err(e) => return outcome(false, e.to_string()),
    };
    let traj = &sol.trajectory;
    let mu = traj.component(5);
    let mu_drift = mu.iter().map(|m| (m - mu[0]).abs()).fold(0.0, f64::max);
    let t_end = traj.times[traj.len() - 1] - traj.times[0];
    // u = R(cos(ωt + α), sin(ωt + α)) with ω = 2πk/T
    let k = (mu[0] * t_end / PI).round();
    let omega = 2.0 * PI * k / t_end;
    let (u2, u3) = (traj.component(3), traj.component(4));
    let radius = u2[0].hypot(u3[0]);
    let phase = u3[0].atan2(u2[0]);
    let deviation = traj
        .times
        .iter()
        .enumerate()
        .map(|(i, t)| {
            let arg = omega * (t - traj.times[0]) + phase;
            (u2[i] - radius * arg.cos()).abs().max((u3[i] - radius * arg.sin()).abs())
        })
        .fold(0.0, f64::max);
    outcome(
        sol.residual_norm <= 1e-8 && mu_drift <= 1e-9 && k != 0.0 && deviation <= 1e-6,
        format!(
            "residual {:.1e}, μ = {:.9} (k = {k}), μ drift {mu_drift:.1e}, sinusoid deviation {deviation:.1e}",
            sol.residual_norm, mu[0]
        ),
    )
}

fn multiplier_rate<P: OptimalControl>(problem: &P, sol: &ShootingSolution) -> f64 {
    let range = sol.trajectory.state(0).mu_range().expect("multipliers");
    sol.trajectory
        .states
        .iter()
        .zip(&sol.trajectory.times)
        .map(|(y, &t)| match problem.eval(t, y) {
            Ok(d) => d.rows(range.start, range.len()).amax(),
            Err(_) => f64::INFINITY,
        })
        .fold(0.0, f64::max)
}

fn multiplier_constancy() -> Outcome {
    let mut worst = 0.0f64;
    let mut notes = Vec::new();
    for (name, scenario) in [
        ("vertical_disc_kin", "park"),
        ("vertical_disc_kin", "stay"),
        ("vertical_disc_dyn", "park"),
        ("vertical_disc_dyn", "roll"),
        ("falling_disc_kin", "tilt"),
        ("falling_disc_kin", "roll_turn"),
    ] {
        let m = model(name);
        let rate = match solve_scenario(&m, scenario, &ShootingConfig::default()) {
            Ok(sol) => match (&m.kinematic, &m.dynamic) {
                (Some(k), _) => multiplier_rate(k, &sol),
                (_, Some(d)) => multiplier_rate(d, &sol),
                _ => f64::INFINITY,
            },
            Err(e) => {
                notes.push(format!("{name}/{scenario}: {e}"));
                f64::INFINITY
            }
        };
        worst = worst.max(rate);
    }
    notes.insert(0, format!("max |μ̇| {worst:.1e} over 6 solutions"));
    outcome(worst <= 1e-8, notes.join("; "))
}

fn stationarity() -> Outcome {
    let mut min_delta = f64::INFINITY;
    let mut failures = Vec::new();
    let mut count = 0;
    for m in models::all() {
        for sc in &m.scenarios {
            count += 1;
            let sol = match solve_scenario(&m, sc.name, &ShootingConfig::default()) {
                Ok(s) => s,
                Err(e) => {
                    failures.push(format!("{}/{}: {e}", m.name, sc.name));
                    continue;
                }
            };
            let config = ProbeConfig::default();
            let report = match sc.layout {
                Layout::KinematicOc => stationarity_probe(m.kinematic.as_ref().expect("layout"), &sc.bc, &sol, &config),
                _ => stationarity_probe(m.dynamic.as_ref().expect("layout"), &sc.bc, &sol, &config),
            };
            let check = report.check("min cost delta").expect("probe check");
            if !check.pass {
                failures.push(format!("{}/{}: {}", m.name, sc.name, check.note.clone().unwrap_or_default()));
            }
            min_delta = min_delta.min(-check.max_abs_error);
        }
    }
    let detail = if failures.is_empty() {
        format!("{count} scenarios, 20 probes each, worst cost decrease {:.1e}", -min_delta)
    } else {
        failures.join("; ")
    };
    outcome(failures.is_empty(), detail)
}

fn dimension_law() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(DEFAULT_SEED);
    let mut bad = Vec::new();
    let mut checked = 0;
    for name in MODEL_NAMES {
        let m = model(name);
        let (n, mm) = (m.frame.n(), m.frame.m());
        for layout in m.layouts() {
            let expected = match layout {
                Layout::Mechanics => 2 * n - mm,
                Layout::KinematicOc => 2 * n,
                Layout::DynamicOc => 4 * n - 2 * mm,
            };
            let state = m.sample_state(layout, &mut rng);
            let lens = [
                layout.state_len(n, mm),
                PhaseState::zeros(layout, n, mm).as_vector().len(),
                state.as_vector().len(),
                m.reference_rhs(layout, &state).map_or(0, |d| d.len()),
            ];
            checked += lens.len();
            if lens.iter().any(|&l| l != expected) {
                bad.push(format!("{name} {layout}: {lens:?} vs {expected}"));
            }
        }
        let unknowns = [
            m.kinematic.as_ref().map(|k| (k.unknown_count(), n, k.state_len())),
            m.dynamic.as_ref().map(|d| (d.unknown_count(), 2 * n - mm, d.state_len())),
        ];
        for (got, want, len) in unknowns.into_iter().flatten() {
            checked += 1;
            if got != want || len != (if want == n { 2 * n } else { 4 * n - 2 * mm }) {
                bad.push(format!("{name}: {got} unknowns, expected {want}"));
            }
        }
    }
    let detail = if bad.is_empty() {
        format!("{checked} length assertions over {} models", MODEL_NAMES.len())
    } else {
        bad.join("; ")
    };
    outcome(bad.is_empty(), detail)
}

fn main() -> ExitCode {
    let criteria: [(&str, Criterion, Option<Duration>); 9] = [
        ("hamel coefficients", hamel_coefficients, Some(Duration::from_secs(1))),
        ("kinematic oc oracle", kinematic_oracle, Some(Duration::from_secs(1))),
        ("dynamic oc oracle", dynamic_oracle, Some(Duration::from_secs(5))),
        ("euler-equation recovery", euler_recovery, None),
        ("sphere reorientation", sphere_reorientation, Some(Duration::from_secs(30))),
        ("heisenberg steering", heisenberg_steering, Some(Duration::from_secs(5))),
        ("multiplier constancy", multiplier_constancy, None),
        ("stationarity", stationarity, None),
        ("dimension law", dimension_law, None),
    ];
    let mut all = true;
    for (i, (name, run, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let out = run();
        let elapsed = start.elapsed();
        let in_time = limit.is_none_or(|l| elapsed < l);
        let pass = out.pass && in_time;
        all &= pass;
        let budget = limit.map_or(String::new(), |l| format!(" / {} s", l.as_secs()));
        println!(
            "{} {}. {name}: {} ({:.2} s{budget})",
            if pass { "PASS" } else { "FAIL" },
            i + 1,
            out.detail,
            elapsed.as_secs_f64()
        );
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
