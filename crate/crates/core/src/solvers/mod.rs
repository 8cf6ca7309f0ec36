//! Fixed-step integration, quadrature and single-shooting solution of the
//! two-point boundary value problems posed by the optimal control equations.

mod integrate;
mod quadrature;
mod shooting;

pub use integrate::{integrate, integrate_fn, rk4_step, Rk4Step, Trajectory};
pub use quadrature::simpson;
pub use shooting::{
    evaluate_cost, shoot, shoot_dynamic, shoot_kinematic, shoot_with_restarts, OptimalControl, ShootingConfig,
    ShootingSolution,
};
