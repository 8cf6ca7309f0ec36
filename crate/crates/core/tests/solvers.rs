use std::f64::consts::FRAC_PI_2;

use hamel_core::models;
use hamel_core::solvers::{self, OptimalControl, ShootingConfig};
use hamel_core::verify::solve_scenario;
use hamel_core::{BoundaryConditions, Error, PhaseState, VectorField};
use nalgebra::DVector;

fn dv(v: &[f64]) -> DVector<f64> {
    DVector::from_column_slice(v)
}

fn config() -> ShootingConfig {
    ShootingConfig::default()
}

#[test]
fn heisenberg_fixed_multiplier_rotates_the_controls() {
    let ocp = models::builtin("heisenberg").unwrap().kinematic.unwrap();
    let start = PhaseState::from_blocks(3, 1, &[0.2, -0.1, 0.0], &[1.0, 0.0], None, Some(&[1.0])).unwrap();
    let traj = solvers::integrate(&ocp, &start, 0.0, 1.0, 200).unwrap();
    let mut drift = 0.0f64;
    for (i, s) in traj.states.iter().enumerate() {
        let t = traj.times[i];
        drift = drift.max((s[3] * s[3] + s[4] * s[4] - 1.0).abs());
        assert!((s[3] - (2.0 * t).cos()).abs() < 1e-8 && (s[4] - (2.0 * t).sin()).abs() < 1e-8);
        assert_eq!(s[5], 1.0);
    }
    assert!(drift <= 1e-9, "{drift:e}");
    // constant integrand ½R²
    let cost = solvers::evaluate_cost(&ocp, &traj).unwrap();
    assert!((cost - 0.5).abs() < 1e-9);
}

#[test]
fn cost_of_the_zero_trajectory_vanishes() {
    let ocp = models::builtin("vertical_disc_dyn").unwrap().dynamic.unwrap();
    let q = [0.4, -0.3, 1.2, 0.8];
    let bc = BoundaryConditions::dynamic(0.0, 2.0, &q, &q, &[0.0, 0.0], &[0.0, 0.0]);
    let guess = ocp.default_guess(&bc).unwrap();
    assert_eq!(guess, DVector::zeros(6));
    let sol = solvers::shoot_dynamic(&ocp, &bc, &guess, &config()).unwrap();
    assert_eq!(sol.iterations, 0);
    assert!(sol.trajectory.states.iter().all(|s| s.rows(0, 4) == dv(&q) && s.rows(4, 6).iter().all(|&x| x == 0.0)));
    assert_eq!(solvers::evaluate_cost(&ocp, &sol.trajectory).unwrap(), 0.0);
}

#[test]
fn heisenberg_steering_closes_the_planar_path() {
    let model = models::builtin("heisenberg").unwrap();
    let sol = solve_scenario(&model, "steer_z", &config()).unwrap();
    assert!(sol.residual_norm <= 1e-8);
    let last = sol.trajectory.final_state().q();
    assert!(last[0].abs() < 1e-8 && last[1].abs() < 1e-8);
    let mu = sol.trajectory.component(5);
    assert!(mu.iter().all(|&m| m == mu[0]));
    // the z-row of the residual Jacobian is blind to the overall phase
    assert_eq!(sol.degenerate_directions, 1);
}

#[test]
fn coincident_endpoints_give_the_zero_control() {
    let model = models::builtin("vertical_disc_kin").unwrap();
    let sol = solve_scenario(&model, "stay", &config()).unwrap();
    assert_eq!(sol.unknowns, DVector::zeros(4));
    assert!(sol.degenerate_directions >= 1);
    let ocp = model.kinematic.as_ref().unwrap();
    assert_eq!(solvers::evaluate_cost(ocp, &sol.trajectory).unwrap(), 0.0);
}

#[test]
fn falling_disc_tilt_is_grid_consistent() {
    let model = models::builtin("falling_disc_kin").unwrap();
    let coarse = solve_scenario(&model, "tilt", &config()).unwrap();
    let fine = solve_scenario(&model, "tilt", &ShootingConfig { steps: 400, ..config() }).unwrap();
    assert!(coarse.residual_norm <= 1e-8 && fine.residual_norm <= 1e-8);
    let diff = (coarse.trajectory.final_state().into_vector() - fine.trajectory.final_state().into_vector()).amax();
    assert!(diff <= 1e-6, "{diff:e}");
}

#[test]
fn vertical_disc_roll_keeps_multipliers() {
    let model = models::builtin("vertical_disc_dyn").unwrap();
    let sol = solve_scenario(&model, "roll", &config()).unwrap();
    assert!(sol.residual_norm <= 1e-8);
    for k in [10, 11] {
        let mu = sol.trajectory.component(k);
        assert!(mu.iter().all(|&m| (m - mu[0]).abs() <= 1e-9));
    }
    // straight roll: a quintic in θ with cost ∫ (9/8) θ̈² = 13.5
    let cost = solvers::evaluate_cost(model.dynamic.as_ref().unwrap(), &sol.trajectory).unwrap();
    assert!((cost - 13.5).abs() < 1e-8, "{cost}");
}

#[test]
fn reintegration_is_bit_for_bit() {
    let model = models::builtin("rigid_body_dyn").unwrap();
    let sc = model.scenario("reorient").unwrap();
    let ocp = model.dynamic.as_ref().unwrap();
    let sol = solve_scenario(&model, "reorient", &config()).unwrap();
    let start = ocp.initial_state(&sc.bc, &sol.unknowns).unwrap();
    let again = solvers::integrate(ocp, &start, sc.bc.t0, sc.bc.t1, 200).unwrap();
    assert_eq!(again, sol.trajectory);
    assert_eq!(ocp.unknowns_of(&start), sol.unknowns);
}

#[test]
fn multiplier_rates_match_their_slopes() {
    for (name, scenario) in [("falling_disc_kin", "roll_turn"), ("vertical_disc_kin", "park"), ("heisenberg", "steer_z")] {
        let model = models::builtin(name).unwrap();
        let ocp = model.kinematic.as_ref().unwrap();
        let sol = solve_scenario(&model, scenario, &config()).unwrap();
        let traj = &sol.trajectory;
        let h = traj.step_size();
        let range = traj.state(0).mu_range().unwrap();
        for i in 1..traj.len() - 1 {
            let rate = ocp.eval(traj.times[i], &traj.states[i]).unwrap();
            for k in range.clone() {
                let slope = (traj.states[i + 1][k] - traj.states[i - 1][k]) / (2.0 * h);
                assert!((rate[k] - slope).abs() <= 1e-6, "{name}");
            }
        }
    }
}

fn endpoint(model: &str, scenario: &str, steps: usize) -> DVector<f64> {
    let model = models::builtin(model).unwrap();
    let sc = model.scenario(scenario).unwrap();
    let sol = solve_scenario(&model, scenario, &config()).unwrap();
    let traj = match &model.kinematic {
        Some(ocp) => solvers::integrate(ocp, &ocp.initial_state(&sc.bc, &sol.unknowns).unwrap(), 0.0, 1.0, steps),
        None => {
            let ocp = model.dynamic.as_ref().unwrap();
            solvers::integrate(ocp, &ocp.initial_state(&sc.bc, &sol.unknowns).unwrap(), 0.0, 1.0, steps)
        }
    };
    traj.unwrap().final_state().into_vector()
}

#[test]
fn integration_is_fourth_order() {
    for (model, scenario) in [("heisenberg", "steer_z"), ("falling_disc_kin", "roll_turn"), ("rigid_body_dyn", "reorient")] {
        let [a, b, c] = [25, 50, 100].map(|n| endpoint(model, scenario, n));
        let order = ((&a - &b).amax() / (&b - &c).amax()).log2();
        assert!(order >= 3.5, "{model}: observed order {order}");
    }
}

#[test]
fn cost_quadrature_converges() {
    let model = models::builtin("heisenberg").unwrap();
    let ocp = model.kinematic.as_ref().unwrap();
    let sc = model.scenario("steer_z").unwrap();
    let sol = solve_scenario(&model, "steer_z", &config()).unwrap();
    let start = ocp.initial_state(&sc.bc, &sol.unknowns).unwrap();
    let cost = |n| solvers::evaluate_cost(ocp, &solvers::integrate(ocp, &start, 0.0, 1.0, n).unwrap()).unwrap();
    let [a, b, c] = [20, 40, 80].map(cost);
    let order = ((a - b) / (b - c)).abs().log2();
    assert!(order >= 3.5, "{order}");
}

#[test]
fn exhausted_iterations_report_the_best_point() {
    let model = models::builtin("falling_disc_kin").unwrap();
    let ocp = model.kinematic.as_ref().unwrap();
    let sc = model.scenario("roll_turn").unwrap();
    let guess = ocp.default_guess(&sc.bc).unwrap();
    let err = solvers::shoot_kinematic(ocp, &sc.bc, &guess, &ShootingConfig { max_iters: 1, ..config() }).unwrap_err();
    match err {
        Error::NoConvergence { iterations, best_residual, best_unknowns } => {
            assert_eq!(iterations, 1);
            assert!(best_residual.is_finite() && best_residual > 1e-9);
            assert_eq!(best_unknowns.len(), 5);
        }
        other => panic!("{other}"),
    }
}

#[test]
fn restarts_are_seeded() {
    let model = models::builtin("vertical_disc_kin").unwrap();
    let ocp = model.kinematic.as_ref().unwrap();
    let bc = BoundaryConditions::kinematic(0.0, 1.0, &[0.0; 4], &[0.5, 0.5, 1.0, FRAC_PI_2]);
    let guess = dv(&[0.0, 0.0, 30.0, -30.0]);
    let cfg = ShootingConfig { max_iters: 8, ..config() };
    let a = solvers::shoot_with_restarts(ocp, &bc, &guess, &cfg, 4, 9);
    let b = solvers::shoot_with_restarts(ocp, &bc, &guess, &cfg, 4, 9);
    match (a, b) {
        (Ok(x), Ok(y)) => assert_eq!(x.unknowns, y.unknowns),
        (Err(x), Err(y)) => assert_eq!(x, y),
        _ => panic!("restarts are not deterministic"),
    }
}

#[test]
fn config_rejects_coarse_grids() {
    let ocp = models::builtin("heisenberg").unwrap().kinematic.unwrap();
    let bc = BoundaryConditions::kinematic(0.0, 1.0, &[0.0; 3], &[0.0, 0.0, 1.0]);
    let err = solvers::shoot(&ocp, &bc, &DVector::zeros(3), &ShootingConfig { steps: 8, ..config() }).unwrap_err();
    assert!(err.to_string().contains("steps 8"), "{err}");
    let err = solvers::shoot(&ocp, &bc, &DVector::zeros(2), &config()).unwrap_err();
    assert!(matches!(err, Error::Dimension { .. }), "{err}");
}

#[test]
fn integration_errors_carry_the_step() {
    // the flow leans the disc flat within the horizon
    let ocp = models::builtin("falling_disc_kin").unwrap().kinematic.unwrap();
    let start = PhaseState::from_blocks(5, 2, &[0.0, 0.3, 0.0, 0.0, 0.0], &[0.0, -1.0, 0.0], None, Some(&[0.0, 0.0])).unwrap();
    let err = solvers::integrate(&ocp, &start, 0.0, 1.0, 100).unwrap_err();
    assert!(matches!(err, Error::AtStep { .. }));
    assert!(matches!(err.root(), Error::SingularFrame { .. }), "{err}");
}
