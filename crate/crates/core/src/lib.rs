//! Boltzmann–Hamel equations in quasi-velocities, for nonholonomic mechanics
//! and for the necessary conditions of kinematic and dynamic optimal control.
//!
//! A [`QuasiFrame`] supplies `Ψ(q)`; everything else (Hamel coefficients,
//! reduced equations, shooting) is built from it. The crate is `no_std` with
//! `alloc`.

#![no_std]
// `!(x > 0.0)` is used on purpose: it also rejects NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod assembly;
pub mod error;
pub mod frames;
pub mod linalg;
pub mod models;
pub mod problems;
pub mod solvers;
pub mod verify;

pub use assembly::{Layout, PhaseState, VectorField};
pub use error::{Error, Result};
pub use frames::{FramePoint, HamelTensor, QuasiFrame};
pub use problems::{
    BoundaryConditions, CostDynamic, CostKinematic, DynamicOcp, KinematicOcp, MechanicalSystem,
};
pub use solvers::{ShootingConfig, ShootingSolution, Trajectory};
