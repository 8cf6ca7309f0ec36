//! Vertical rolling disc on coordinates `(x, y, θ, φ)`: θ is the rolling
//! angle, φ the heading, and the contact point follows `ẋ = cos φ θ̇`,
//! `ẏ = sin φ θ̇`. The two rolling constraints are `u₁`, `u₂`.

use alloc::vec;

use nalgebra::{DMatrix, DVector};

use super::{skeleton, BuiltinModel, Scenario};
use crate::assembly::Layout;
use crate::frames::{HamelTensor, QuasiFrame};
use crate::problems::{BoundaryConditions, CostDynamic, CostKinematic, DynamicOcp, KinematicOcp, MechanicalSystem};

/// Disc mass; with the inertias below, `3/2 θ̈ = w₃` and `1/4 φ̈ = w₄`.
const MASS: f64 = 1.0;
const ROLL_INERTIA: f64 = 0.5;
const TURN_INERTIA: f64 = 0.25;

const PI: f64 = core::f64::consts::PI;

pub(super) fn frame() -> QuasiFrame {
    QuasiFrame::new(4, 2, |q| {
        let (s, c) = libm::sincos(q[3]);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                1.0, 0.0, -c, 0.0, //
                0.0, 1.0, -s, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            ],
        )
    })
    .with_jacobian(|q| {
        let (s, c) = libm::sincos(q[3]);
        let mut dphi = DMatrix::zeros(4, 4);
        dphi[(0, 2)] = s;
        dphi[(1, 2)] = -c;
        vec![DMatrix::zeros(4, 4), DMatrix::zeros(4, 4), DMatrix::zeros(4, 4), dphi]
    })
}

fn sample_box() -> alloc::vec::Vec<(f64, f64)> {
    vec![(-2.0, 2.0), (-2.0, 2.0), (-PI, PI), (-PI, PI)]
}

const ORIGIN: [f64; 4] = [0.0; 4];
const PARK: [f64; 4] = [0.9, 0.3, 1.0, 0.5];
const PARK_AT_REST: [f64; 4] = [0.95, 0.26, 1.0, 0.5];

pub(super) fn kinematic_model() -> BuiltinModel {
    let frame = frame();
    let mut model = skeleton("vertical_disc_kin", frame.clone(), sample_box());
    let cost = CostKinematic::new(|_, u| 0.5 * u.norm_squared())
        .with_dq(|_, _| DVector::zeros(4))
        .with_du(|_, u| u.clone())
        .with_hess_uu(|_, _| DMatrix::identity(2, 2))
        .with_hess_uq(|_, _| DMatrix::zeros(2, 4));
    model.kinematic = Some(KinematicOcp::new(frame, cost));
    model.scenarios = vec![
        Scenario {
            name: "park",
            summary: "roll and turn from the origin to (0.9, 0.3, 1, 0.5)",
            layout: Layout::KinematicOc,
            bc: BoundaryConditions::kinematic(0.0, 1.0, &ORIGIN, &PARK),
            guess: None,
        },
        Scenario {
            name: "stay",
            summary: "identical endpoints; zero control, multipliers undetermined",
            layout: Layout::KinematicOc,
            bc: BoundaryConditions::kinematic(0.0, 1.0, &[0.5, -0.5, 0.2, 1.0], &[0.5, -0.5, 0.2, 1.0]),
            guess: None,
        },
    ];
    model
}

/// `½m(ẋ² + ẏ²) + ½I θ̇² + ½J φ̇²` with `ẋ = u₁ + cos φ u₃`, `ẏ = u₂ + sin φ u₃`.
fn mechanical(frame: QuasiFrame) -> MechanicalSystem {
    fn velocities(q: &DVector<f64>, u: &DVector<f64>) -> (f64, f64, f64, f64) {
        let (s, c) = libm::sincos(q[3]);
        (u[0] + c * u[2], u[1] + s * u[2], s, c)
    }
    MechanicalSystem::new(frame, |q, u| {
        let (xd, yd, _, _) = velocities(q, u);
        0.5 * MASS * (xd * xd + yd * yd) + 0.5 * ROLL_INERTIA * u[2] * u[2] + 0.5 * TURN_INERTIA * u[3] * u[3]
    })
    .with_dq(|q, u| {
        let (xd, yd, s, c) = velocities(q, u);
        DVector::from_vec(vec![0.0, 0.0, 0.0, MASS * (-xd * s + yd * c) * u[2]])
    })
    .with_du(|q, u| {
        let (xd, yd, s, c) = velocities(q, u);
        DVector::from_vec(vec![
            MASS * xd,
            MASS * yd,
            MASS * (xd * c + yd * s) + ROLL_INERTIA * u[2],
            TURN_INERTIA * u[3],
        ])
    })
    .with_hess_uu(|q, _| {
        let (s, c) = libm::sincos(q[3]);
        DMatrix::from_row_slice(
            4,
            4,
            &[
                MASS, 0.0, MASS * c, 0.0, //
                0.0, MASS, MASS * s, 0.0, //
                MASS * c, MASS * s, MASS + ROLL_INERTIA, 0.0, //
                0.0, 0.0, 0.0, TURN_INERTIA,
            ],
        )
    })
    .with_hess_uq(|q, u| {
        let (s, c) = libm::sincos(q[3]);
        let mut h = DMatrix::zeros(4, 4);
        h[(0, 3)] = -MASS * s * u[2];
        h[(1, 3)] = MASS * c * u[2];
        h[(2, 3)] = MASS * (-s * u[0] + c * u[1]);
        h
    })
}

/// `9/8 a₃² + 1/32 a₄²`, the squared torques `w₃ = 3/2 a₃`, `w₄ = 1/4 a₄` halved.
fn dynamic_cost() -> CostDynamic {
    let weights = [(MASS + ROLL_INERTIA) * (MASS + ROLL_INERTIA), TURN_INERTIA * TURN_INERTIA];
    CostDynamic::new(move |_, _, a| 0.5 * (weights[0] * a[0] * a[0] + weights[1] * a[1] * a[1]))
        .with_dq(|_, _, _| DVector::zeros(4))
        .with_du(|_, _, _| DVector::zeros(2))
        .with_da(move |_, _, a| DVector::from_vec(vec![weights[0] * a[0], weights[1] * a[1]]))
        .with_hess_aa(move |_, _, _| DMatrix::from_diagonal(&DVector::from_vec(vec![weights[0], weights[1]])))
        .with_hess_au(|_, _, _| DMatrix::zeros(2, 2))
        .with_hess_aq(|_, _, _| DMatrix::zeros(2, 4))
        .with_kappa_jacobian(|_, _, _, _| [DMatrix::zeros(2, 4), DMatrix::zeros(2, 2), DMatrix::zeros(2, 2)])
}

pub(super) fn dynamic_model() -> BuiltinModel {
    let frame = frame();
    let mut model = skeleton("vertical_disc_dyn", frame.clone(), sample_box());
    model.mechanical = Some(mechanical(frame.clone()));
    model.dynamic = Some(DynamicOcp::new(frame, dynamic_cost()));
    model.scenarios = vec![
        Scenario {
            name: "park",
            summary: "rest to rest from the origin to (0.95, 0.26, 1, 0.5)",
            layout: Layout::DynamicOc,
            bc: BoundaryConditions::dynamic(0.0, 1.0, &ORIGIN, &PARK_AT_REST, &[0.0, 0.0], &[0.0, 0.0]),
            guess: None,
        },
        Scenario {
            name: "roll",
            summary: "rest to rest straight roll by one radian",
            layout: Layout::DynamicOc,
            bc: BoundaryConditions::dynamic(0.0, 1.0, &ORIGIN, &[1.0, 0.0, 1.0, 0.0], &[0.0, 0.0], &[0.0, 0.0]),
            guess: None,
        },
    ];
    model
}

/// `γ¹₃₄ = sin φ`, `γ²₃₄ = −cos φ`.
pub(super) fn listed_hamel(q: &DVector<f64>) -> HamelTensor {
    let (s, c) = libm::sincos(q[3]);
    let mut g = HamelTensor::zeros(4);
    g.set_antisymmetric(0, 2, 3, s);
    g.set_antisymmetric(1, 2, 3, -c);
    g
}

/// State `(x, y, θ, φ, u₃, u₄, μ₁, μ₂)`.
pub(super) fn reference_kinematic(st: &DVector<f64>) -> DVector<f64> {
    let (s, c) = libm::sincos(st[3]);
    let (u3, u4, mu1, mu2) = (st[4], st[5], st[6], st[7]);
    DVector::from_vec(vec![
        c * u3,
        s * u3,
        u3,
        u4,
        (mu2 * c - mu1 * s) * u4,
        (mu1 * s - mu2 * c) * u3,
        0.0,
        0.0,
    ])
}

/// State `(x, y, θ, φ, u₃, u₄, a₃, a₄, ȷ₃, ȷ₄, μ₁, μ₂)`.
pub(super) fn reference_dynamic(st: &DVector<f64>) -> DVector<f64> {
    let (s, c) = libm::sincos(st[3]);
    let (u3, u4, a3, a4, j3, j4, mu1, mu2) = (st[4], st[5], st[6], st[7], st[8], st[9], st[10], st[11]);
    DVector::from_vec(vec![
        c * u3,
        s * u3,
        u3,
        u4,
        a3,
        a4,
        j3,
        j4,
        4.0 / 9.0 * (mu1 * s - mu2 * c) * u4,
        16.0 * (-mu1 * s + mu2 * c) * u3,
        0.0,
        0.0,
    ])
}

/// State `(x, y, θ, φ, u₃, u₄)` under torques `(w₃, w₄)`.
pub(super) fn reference_mechanics(st: &DVector<f64>, w: &DVector<f64>) -> DVector<f64> {
    let (s, c) = libm::sincos(st[3]);
    let (u3, u4) = (st[4], st[5]);
    DVector::from_vec(vec![c * u3, s * u3, u3, u4, w[0] / 1.5, w[1] / 0.25])
}
