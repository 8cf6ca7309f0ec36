//! Heisenberg system: velocity controls `ẋ`, `ẏ` with `ż = yẋ − xẏ`,
//! coordinates `(x, y, z)` and the constraint `u₁ = yẋ − xẏ − ż` first.

use alloc::vec;

use nalgebra::{DMatrix, DVector};

use super::{skeleton, BuiltinModel, Scenario};
use crate::assembly::Layout;
use crate::frames::{HamelTensor, QuasiFrame};
use crate::problems::{BoundaryConditions, CostKinematic, KinematicOcp};

pub(super) fn frame() -> QuasiFrame {
    QuasiFrame::new(3, 1, |q| {
        let (x, y) = (q[0], q[1]);
        DMatrix::from_row_slice(3, 3, &[y, -x, -1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
    })
    .with_jacobian(|_| {
        let mut dx = DMatrix::zeros(3, 3);
        dx[(0, 1)] = -1.0;
        let mut dy = DMatrix::zeros(3, 3);
        dy[(0, 0)] = 1.0;
        vec![dx, dy, DMatrix::zeros(3, 3)]
    })
}

fn cost() -> CostKinematic {
    CostKinematic::new(|_, u| 0.5 * u.norm_squared())
        .with_dq(|_, _| DVector::zeros(3))
        .with_du(|_, u| u.clone())
        .with_hess_uu(|_, _| DMatrix::identity(2, 2))
        .with_hess_uq(|_, _| DMatrix::zeros(2, 3))
}

pub(super) fn model() -> BuiltinModel {
    let frame = frame();
    let mut model = skeleton("heisenberg", frame.clone(), vec![(-2.0, 2.0); 3]);
    model.kinematic = Some(KinematicOcp::new(frame, cost()));
    model.scenarios = vec![
        Scenario {
            name: "steer_z",
            summary: "lift from the origin to (0, 0, 1) in unit time",
            layout: Layout::KinematicOc,
            bc: BoundaryConditions::kinematic(0.0, 1.0, &[0.0, 0.0, 0.0], &[0.0, 0.0, 1.0]),
            // (u₂, u₃, μ); the straight-line guess is zero, where the z row
            // of the shooting Jacobian vanishes.
            guess: Some(DVector::from_vec(vec![2.0, 1.0, -2.5])),
        },
        Scenario {
            name: "hold",
            summary: "stay at a point; the optimum is the zero control",
            layout: Layout::KinematicOc,
            bc: BoundaryConditions::kinematic(0.0, 1.0, &[0.3, -0.2, 0.1], &[0.3, -0.2, 0.1]),
            guess: None,
        },
    ];
    model
}

/// `γ¹₂₃ = −γ¹₃₂ = 2`.
pub(super) fn listed_hamel(_q: &DVector<f64>) -> HamelTensor {
    let mut g = HamelTensor::zeros(3);
    g.set_antisymmetric(0, 1, 2, 2.0);
    g
}

/// State `(x, y, z, u₂, u₃, μ)`.
pub(super) fn reference_kinematic(s: &DVector<f64>) -> DVector<f64> {
    let (x, y) = (s[0], s[1]);
    let (u2, u3, mu) = (s[3], s[4], s[5]);
    DVector::from_vec(vec![
        u2,
        u3,
        y * u2 - x * u3,
        -2.0 * mu * u3,
        2.0 * mu * u2,
        0.0,
    ])
}
