//! Single shooting with a damped Newton iteration.
//!
//! The unknowns are the initial values the boundary data leave open: the free
//! quasi-velocities and multipliers for kinematic problems, the
//! quasi-accelerations, quasi-jerks and multipliers for dynamic ones. The
//! residual is the terminal mismatch, so the Newton system is always square.

use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::integrate::{integrate, Trajectory};
use super::quadrature::simpson;
use crate::assembly::{PhaseState, VectorField};
use crate::error::{Error, Result};
use crate::frames::QuasiFrame;
use crate::linalg;
use crate::problems::{BoundaryConditions, DynamicOcp, KinematicOcp, ValidationReport};

/// The boundary-value view of an optimal control vector field.
pub trait OptimalControl: VectorField {
    fn frame(&self) -> &QuasiFrame;

    fn unknown_count(&self) -> usize;

    fn initial_state(&self, bc: &BoundaryConditions, unknowns: &DVector<f64>) -> Result<PhaseState>;

    /// Inverse of [`OptimalControl::initial_state`] on its unknown slots.
    fn unknowns_of(&self, initial: &PhaseState) -> DVector<f64>;

    fn terminal_residual(&self, bc: &BoundaryConditions, last: &PhaseState) -> DVector<f64>;

    /// Cost integrand at a phase state.
    fn running_cost(&self, state: &PhaseState) -> f64;

    /// Zero multipliers and rates implied by interpolating the boundary data.
    fn default_guess(&self, bc: &BoundaryConditions) -> Result<DVector<f64>>;

    fn validate(&self, bc: &BoundaryConditions) -> Result<ValidationReport>;
}

impl OptimalControl for KinematicOcp {
    fn frame(&self) -> &QuasiFrame {
        &self.frame
    }

    fn unknown_count(&self) -> usize {
        self.frame.n()
    }

    fn initial_state(&self, bc: &BoundaryConditions, x: &DVector<f64>) -> Result<PhaseState> {
        let (n, m) = (self.frame.n(), self.frame.m());
        if x.len() != n {
            return Err(Error::dimension("kinematic shooting unknowns", x.len(), n));
        }
        let f = n - m;
        PhaseState::from_blocks(n, m, bc.q0.as_slice(), &x.as_slice()[..f], None, Some(&x.as_slice()[f..]))
    }

    fn unknowns_of(&self, initial: &PhaseState) -> DVector<f64> {
        let y = initial.as_vector();
        y.rows(self.frame.n(), self.frame.n()).into_owned()
    }

    fn terminal_residual(&self, bc: &BoundaryConditions, last: &PhaseState) -> DVector<f64> {
        last.q() - &bc.q1
    }

    fn running_cost(&self, state: &PhaseState) -> f64 {
        self.cost.eval(&state.q(), &state.u_free())
    }

    fn default_guess(&self, bc: &BoundaryConditions) -> Result<DVector<f64>> {
        let psi = self.frame.psi(&bc.q0);
        let rate = psi * (&bc.q1 - &bc.q0) / bc.duration();
        let mut x = DVector::zeros(self.frame.n());
        let f = self.frame.free_count();
        x.rows_mut(0, f).copy_from(&self.frame.gather_free(&rate));
        Ok(x)
    }

    fn validate(&self, bc: &BoundaryConditions) -> Result<ValidationReport> {
        KinematicOcp::validate(self, bc)
    }
}

impl OptimalControl for DynamicOcp {
    fn frame(&self) -> &QuasiFrame {
        &self.frame
    }

    fn unknown_count(&self) -> usize {
        2 * self.frame.n() - self.frame.m()
    }

    fn initial_state(&self, bc: &BoundaryConditions, x: &DVector<f64>) -> Result<PhaseState> {
        let (n, m) = (self.frame.n(), self.frame.m());
        let f = n - m;
        if x.len() != 2 * n - m {
            return Err(Error::dimension("dynamic shooting unknowns", x.len(), 2 * n - m));
        }
        let u0 = bc
            .u0_free
            .as_ref()
            .ok_or_else(|| Error::InvalidProblem(alloc::vec![alloc::string::String::from("u0_free required")]))?;
        let x = x.as_slice();
        PhaseState::from_blocks(n, m, bc.q0.as_slice(), u0.as_slice(), Some((&x[..f], &x[f..2 * f])), Some(&x[2 * f..]))
    }

    fn unknowns_of(&self, initial: &PhaseState) -> DVector<f64> {
        let (n, m) = (self.frame.n(), self.frame.m());
        let f = n - m;
        initial.as_vector().rows(n + f, 2 * n - m).into_owned()
    }

    fn terminal_residual(&self, bc: &BoundaryConditions, last: &PhaseState) -> DVector<f64> {
        let n = self.frame.n();
        let f = self.frame.free_count();
        let u1 = bc.u1_free.clone().unwrap_or_else(|| DVector::zeros(f));
        let mut r = DVector::zeros(n + f);
        r.rows_mut(0, n).copy_from(&(last.q() - &bc.q1));
        r.rows_mut(n, f).copy_from(&(last.u_free() - u1));
        r
    }

    fn running_cost(&self, state: &PhaseState) -> f64 {
        self.cost.eval(&state.q(), &state.u_free(), &state.a().expect("dynamic layout"))
    }

    /// Rates of the cubic Hermite interpolant of the boundary data, mapped to
    /// quasi-accelerations and quasi-jerks at `t0`.
    fn default_guess(&self, bc: &BoundaryConditions) -> Result<DVector<f64>> {
        let frame = &self.frame;
        let (n, m) = (frame.n(), frame.m());
        let f = n - m;
        let zeros = DVector::zeros(f);
        let u0 = bc.u0_free.as_ref().unwrap_or(&zeros);
        let u1 = bc.u1_free.as_ref().unwrap_or(&zeros);
        let v0 = frame.from_quasi(&bc.q0, &frame.scatter_free(u0.as_slice()))?;
        let v1 = frame.from_quasi(&bc.q1, &frame.scatter_free(u1.as_slice()))?;
        let t = bc.duration();
        let delta = &bc.q1 - &bc.q0;
        let acc = &delta * (6.0 / (t * t)) - (&v0 * 4.0 + &v1 * 2.0) / t;
        let jerk = &delta * (-12.0 / (t * t * t)) + (&v0 + &v1) * (6.0 / (t * t));

        let psi = frame.psi(&bc.q0);
        let dpsi = frame.psi_jacobian(&bc.q0);
        let psi_dot = dpsi
            .iter()
            .zip(v0.iter())
            .fold(DMatrix::zeros(n, n), |acc_m, (d, &vk)| acc_m + d * vk);
        let a0 = &psi * &acc + &psi_dot * &v0;
        let j0 = &psi * &jerk + &psi_dot * &acc * 2.0;

        let mut x = DVector::zeros(2 * n - m);
        x.rows_mut(0, f).copy_from(&frame.gather_free(&a0));
        x.rows_mut(f, f).copy_from(&frame.gather_free(&j0));
        Ok(x)
    }

    fn validate(&self, bc: &BoundaryConditions) -> Result<ValidationReport> {
        DynamicOcp::validate(self, bc)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShootingConfig {
    /// RK4 steps across `[t0, t1]`.
    pub steps: usize,
    /// Convergence threshold on the ∞-norm of the terminal residual.
    pub newton_tol: f64,
    pub max_iters: usize,
    /// Base step for the central-difference Jacobian columns.
    pub fd_step: f64,
    /// Backtracking factor of the line search.
    pub damping: f64,
    /// Smallest accepted line-search step before declaring a stall.
    pub min_step: f64,
    /// Singular values below `degenerate_ratio · σ_max` count as degenerate.
    pub degenerate_ratio: f64,
}

impl Default for ShootingConfig {
    fn default() -> Self {
        ShootingConfig {
            steps: 200,
            newton_tol: 1e-9,
            max_iters: 50,
            fd_step: 1e-6,
            damping: 0.5,
            min_step: 1.0 / (1u32 << 20) as f64,
            degenerate_ratio: 1e-10,
        }
    }
}

impl ShootingConfig {
    pub fn validate(&self) -> Result<()> {
        let mut errors = Vec::new();
        if self.steps < 16 {
            errors.push(alloc::format!("steps {} below the minimum of 16", self.steps));
        }
        for (name, v) in [
            ("newton_tol", self.newton_tol),
            ("fd_step", self.fd_step),
            ("damping", self.damping),
            ("min_step", self.min_step),
            ("degenerate_ratio", self.degenerate_ratio),
        ] {
            if !(v > 0.0) {
                errors.push(alloc::format!("{name} must be positive"));
            }
        }
        if self.max_iters == 0 {
            errors.push(alloc::string::String::from("max_iters must be positive"));
        }
        if self.damping >= 1.0 {
            errors.push(alloc::string::String::from("damping must be below 1"));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidProblem(errors))
        }
    }
}

#[derive(Debug, Clone)]
pub struct ShootingSolution {
    pub trajectory: Trajectory,
    pub unknowns: DVector<f64>,
    pub residual: DVector<f64>,
    /// ∞-norm of `residual`.
    pub residual_norm: f64,
    pub iterations: usize,
    /// Singular values of the terminal-residual Jacobian at the solution, descending.
    pub singular_values: Vec<f64>,
    /// How many of them fall below `degenerate_ratio · σ_max`.
    pub degenerate_directions: usize,
}

struct Shot {
    trajectory: Trajectory,
    residual: DVector<f64>,
}

fn fire<P: OptimalControl + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    x: &DVector<f64>,
    steps: usize,
) -> Result<Shot> {
    let initial = problem.initial_state(bc, x)?;
    let trajectory = integrate(problem, &initial, bc.t0, bc.t1, steps)?;
    let residual = problem.terminal_residual(bc, &trajectory.final_state());
    Ok(Shot { trajectory, residual })
}

fn residual_jacobian<P: OptimalControl + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    x: &DVector<f64>,
    rows: usize,
    config: &ShootingConfig,
) -> Result<DMatrix<f64>> {
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = linalg::fd_step(config.fd_step, x[j]);
        xp[j] = x[j] + h;
        let plus = fire(problem, bc, &xp, config.steps)?.residual;
        xp[j] = x[j] - h;
        let minus = fire(problem, bc, &xp, config.steps)?.residual;
        xp[j] = x[j];
        jac.set_column(j, &((plus - minus) / (2.0 * h)));
    }
    Ok(jac)
}

struct Decomposition {
    step: DVector<f64>,
    singular_values: Vec<f64>,
    degenerate: usize,
}

/// Minimum-norm Newton step; directions below the degeneracy cut-off are
/// excluded from the step and counted.
fn newton_step(jac: &DMatrix<f64>, residual: &DVector<f64>, ratio: f64) -> Result<Decomposition> {
    let svd = jac.clone().svd(true, true);
    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let singular_values: Vec<f64> = order.iter().map(|&i| svd.singular_values[i]).collect();
    let sigma_max = singular_values.first().copied().unwrap_or(0.0);
    if !(sigma_max > 0.0) || !sigma_max.is_finite() {
        return Err(Error::SingularJacobian { sigma_max });
    }
    let cutoff = ratio * sigma_max;
    let u = svd.u.as_ref().expect("requested");
    let v_t = svd.v_t.as_ref().expect("requested");
    let mut step = DVector::zeros(jac.ncols());
    let mut degenerate = 0;
    for (i, &s) in svd.singular_values.iter().enumerate() {
        if s <= cutoff {
            degenerate += 1;
            continue;
        }
        let coeff = u.column(i).dot(residual) / s;
        step -= v_t.row(i).transpose() * coeff;
    }
    Ok(Decomposition {
        step,
        singular_values,
        degenerate,
    })
}

/// Truncation ratios tried in turn when the line search stalls on the full step.
const FALLBACK_RATIOS: [f64; 3] = [1e-6, 1e-4, 1e-2];

/// Damped Newton single shooting from an explicit guess.
pub fn shoot<P: OptimalControl + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    guess: &DVector<f64>,
    config: &ShootingConfig,
) -> Result<ShootingSolution> {
    config.validate()?;
    problem.validate(bc)?;
    let k = problem.unknown_count();
    if guess.len() != k {
        return Err(Error::dimension("shooting guess", guess.len(), k));
    }

    let mut x = guess.clone();
    let mut shot = fire(problem, bc, &x, config.steps)?;
    let rows = shot.residual.len();
    let mut iterations = 0;
    loop {
        let norm = linalg::norm_inf(shot.residual.as_slice());
        log::debug!("newton iteration {iterations}: residual {norm:e}");
        let jac = residual_jacobian(problem, bc, &x, rows, config)?;
        let decomposition = newton_step(&jac, &shot.residual, config.degenerate_ratio)?;
        if norm <= config.newton_tol {
            return Ok(ShootingSolution {
                trajectory: shot.trajectory,
                unknowns: x,
                residual_norm: norm,
                residual: shot.residual,
                iterations,
                singular_values: decomposition.singular_values,
                degenerate_directions: decomposition.degenerate,
            });
        }
        if iterations >= config.max_iters {
            return Err(Error::NoConvergence {
                iterations,
                best_residual: norm,
                best_unknowns: x.iter().copied().collect(),
            });
        }
        iterations += 1;

        let merit = shot.residual.norm();
        let line_search = |step: &DVector<f64>| {
            let mut lambda = 1.0;
            loop {
                if lambda < config.min_step {
                    return None;
                }
                let trial = &x + step * lambda;
                match fire(problem, bc, &trial, config.steps) {
                    Ok(s) if s.residual.norm() < (1.0 - 1e-4 * lambda) * merit => return Some((trial, s)),
                    Ok(_) | Err(_) => lambda *= config.damping,
                }
            }
        };
        // Near a family of solutions the smallest singular values shrink
        // without crossing the degeneracy cut-off, and the minimum-norm step
        // overshoots along them; truncating harder recovers descent.
        let accepted = line_search(&decomposition.step).or_else(|| {
            FALLBACK_RATIOS
                .iter()
                .filter(|&&r| r > config.degenerate_ratio)
                .find_map(|&r| line_search(&newton_step(&jac, &shot.residual, r).ok()?.step))
        });
        match accepted {
            Some((trial, s)) => {
                x = trial;
                shot = s;
            }
            None => {
                log::debug!("line search stalled at residual {norm:e}");
                return Err(Error::NoConvergence {
                    iterations,
                    best_residual: norm,
                    best_unknowns: x.iter().copied().collect(),
                });
            }
        }
    }
}

/// [`shoot`] from `guess`, then from up to `restarts` seeded random
/// perturbations of it when Newton fails to converge.
pub fn shoot_with_restarts<P: OptimalControl + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    guess: &DVector<f64>,
    config: &ShootingConfig,
    restarts: usize,
    seed: u64,
) -> Result<ShootingSolution> {
    let mut best_err = match shoot(problem, bc, guess, config) {
        Ok(sol) => return Ok(sol),
        Err(e @ (Error::NoConvergence { .. } | Error::SingularJacobian { .. } | Error::AtStep { .. })) => e,
        Err(e) => return Err(e),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for attempt in 0..restarts {
        let trial = guess.map(|g| g + rng.gen_range(-1.0..1.0) * (1.0 + g.abs()));
        log::info!("restart {} of {restarts}", attempt + 1);
        match shoot(problem, bc, &trial, config) {
            Ok(sol) => return Ok(sol),
            Err(e) => {
                if residual_of(&e) < residual_of(&best_err) {
                    best_err = e;
                }
            }
        }
    }
    Err(best_err)
}

fn residual_of(e: &Error) -> f64 {
    match e {
        Error::NoConvergence { best_residual, .. } => *best_residual,
        _ => f64::INFINITY,
    }
}

pub fn shoot_kinematic(
    ocp: &KinematicOcp,
    bc: &BoundaryConditions,
    guess: &DVector<f64>,
    config: &ShootingConfig,
) -> Result<ShootingSolution> {
    shoot(ocp, bc, guess, config)
}

pub fn shoot_dynamic(
    ocp: &DynamicOcp,
    bc: &BoundaryConditions,
    guess: &DVector<f64>,
    config: &ShootingConfig,
) -> Result<ShootingSolution> {
    shoot(ocp, bc, guess, config)
}

/// Composite Simpson quadrature of the cost integrand along a trajectory.
pub fn evaluate_cost<P: OptimalControl + ?Sized>(problem: &P, trajectory: &Trajectory) -> Result<f64> {
    if trajectory.layout != problem.layout() {
        return Err(Error::UnsupportedLayout {
            model: alloc::string::String::from("cost evaluation"),
            layout: trajectory.layout,
        });
    }
    let values: Vec<f64> = (0..trajectory.len())
        .map(|i| problem.running_cost(&trajectory.state(i)))
        .collect();
    Ok(simpson(&values, trajectory.step_size()))
}
