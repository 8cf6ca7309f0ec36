//! Falling rolling disc, kinematic control of the body angular velocity.
//! Coordinates `(φ, θ, ψ, x, y)` (Euler angles, then the contact point); the
//! rolling constraints are the last two quasi-velocities.

use alloc::vec;

use nalgebra::{DMatrix, DVector};

use super::{skeleton, BuiltinModel, ModelParams, Scenario};
use crate::assembly::Layout;
use crate::frames::{HamelTensor, QuasiFrame};
use crate::problems::{BoundaryConditions, CostKinematic, KinematicOcp};

const PI: f64 = core::f64::consts::PI;
const HALF_PI: f64 = core::f64::consts::FRAC_PI_2;

pub(super) fn frame(r: f64) -> QuasiFrame {
    QuasiFrame::new(5, 2, move |q| {
        let (sphi, cphi) = libm::sincos(q[0]);
        let (sth, cth) = libm::sincos(q[1]);
        DMatrix::from_row_slice(
            5,
            5,
            &[
                sth, 0.0, 0.0, 0.0, 0.0, //
                0.0, 1.0, 0.0, 0.0, 0.0, //
                cth, 0.0, 1.0, 0.0, 0.0, //
                0.0, 0.0, r * cphi, 1.0, 0.0, //
                0.0, 0.0, r * sphi, 0.0, 1.0,
            ],
        )
    })
    .with_constrained(&[3, 4])
    .expect("valid indices")
    .with_jacobian(move |q| {
        let (sphi, cphi) = libm::sincos(q[0]);
        let (sth, cth) = libm::sincos(q[1]);
        let mut dphi = DMatrix::zeros(5, 5);
        dphi[(3, 2)] = -r * sphi;
        dphi[(4, 2)] = r * cphi;
        let mut dtheta = DMatrix::zeros(5, 5);
        dtheta[(0, 0)] = cth;
        dtheta[(2, 0)] = -sth;
        vec![dphi, dtheta, DMatrix::zeros(5, 5), DMatrix::zeros(5, 5), DMatrix::zeros(5, 5)]
    })
}

pub(super) fn model(params: &ModelParams) -> BuiltinModel {
    let frame = frame(params.radius);
    let sample_box = vec![(-PI, PI), (0.2, PI - 0.2), (-PI, PI), (-2.0, 2.0), (-2.0, 2.0)];
    let mut model = skeleton("falling_disc_kin", frame.clone(), sample_box);
    let cost = CostKinematic::new(|_, u| 0.5 * u.norm_squared())
        .with_dq(|_, _| DVector::zeros(5))
        .with_du(|_, u| u.clone())
        .with_hess_uu(|_, _| DMatrix::identity(3, 3))
        .with_hess_uq(|_, _| DMatrix::zeros(3, 5));
    model.kinematic = Some(KinematicOcp::new(frame, cost));
    let upright = [0.0, HALF_PI, 0.0, 0.0, 0.0];
    model.scenarios = vec![
        Scenario {
            name: "tilt",
            summary: "lean by 0.1 rad in place; constant tilt rate",
            layout: Layout::KinematicOc,
            bc: BoundaryConditions::kinematic(0.0, 1.0, &upright, &[0.0, HALF_PI + 0.1, 0.0, 0.0, 0.0]),
            guess: None,
        },
        Scenario {
            name: "roll_turn",
            summary: "roll, turn and lean from upright at the origin",
            layout: Layout::KinematicOc,
            // x and y respond weakly to the multipliers here (sin φ stays small),
            // so the target sits near a small-multiplier extremal.
            bc: BoundaryConditions::kinematic(0.0, 1.0, &upright, &[0.2038, 1.6394, 0.3138, -0.3116, -0.0322]),
            guess: None,
        },
    ];
    model
}

/// `γ¹₂₁ = −cot θ`, `γ³₂₁ = 1`, `γ⁴₁₃ = r sin φ csc θ`, `γ⁵₁₃ = −r cos φ csc θ`.
pub(super) fn listed_hamel(q: &DVector<f64>, params: &ModelParams) -> HamelTensor {
    let r = params.radius;
    let (sphi, cphi) = libm::sincos(q[0]);
    let (sth, cth) = libm::sincos(q[1]);
    let mut g = HamelTensor::zeros(5);
    g.set_antisymmetric(0, 1, 0, -cth / sth);
    g.set_antisymmetric(2, 1, 0, 1.0);
    g.set_antisymmetric(3, 0, 2, r * sphi / sth);
    g.set_antisymmetric(4, 0, 2, -r * cphi / sth);
    g
}

/// State `(φ, θ, ψ, x, y, u₁, u₂, u₃, μ₄, μ₅)`.
pub(super) fn reference_kinematic(s: &DVector<f64>, params: &ModelParams) -> DVector<f64> {
    let r = params.radius;
    let (sphi, cphi) = libm::sincos(s[0]);
    let (sth, cth) = libm::sincos(s[1]);
    let (cot, csc) = (cth / sth, 1.0 / sth);
    let (u1, u2, u3, mu4, mu5) = (s[5], s[6], s[7], s[8], s[9]);
    let torque = r * (mu4 * sphi - mu5 * cphi) * csc;
    DVector::from_vec(vec![
        csc * u1,
        u2,
        -cot * u1 + u3,
        r * cphi * cot * u1 - r * cphi * u3,
        r * sphi * cot * u1 - r * sphi * u3,
        u2 * u3 - u1 * u2 * cot - torque * u3,
        u1 * u1 * cot - u1 * u3,
        torque * u1,
        0.0,
        0.0,
    ])
}
