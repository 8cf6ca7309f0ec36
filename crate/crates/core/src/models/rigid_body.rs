//! Free rigid body on Type-I Euler angles `(ψ, θ, φ)` with the body angular
//! velocity as quasi-velocities, controlled by body torques
//! `M = 𝕀ω̇ + ω × 𝕀ω` at cost `½‖M‖²`. The sphere is the isotropic case.

use alloc::vec;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector, Matrix3, Vector3};

use super::{skeleton, BuiltinModel, ModelParams, Scenario};
use crate::assembly::Layout;
use crate::frames::{HamelTensor, QuasiFrame};
use crate::problems::{BoundaryConditions, CostDynamic, DynamicOcp, MechanicalSystem};

const PI: f64 = core::f64::consts::PI;
const HALF_PI: f64 = core::f64::consts::FRAC_PI_2;

pub(super) fn frame() -> QuasiFrame {
    QuasiFrame::new(3, 0, |q| {
        let (sth, cth) = libm::sincos(q[1]);
        let (sphi, cphi) = libm::sincos(q[2]);
        DMatrix::from_row_slice(
            3,
            3,
            &[
                -sth, 0.0, 1.0, //
                cth * sphi, cphi, 0.0, //
                cth * cphi, -sphi, 0.0,
            ],
        )
    })
    .with_jacobian(|q| {
        let (sth, cth) = libm::sincos(q[1]);
        let (sphi, cphi) = libm::sincos(q[2]);
        let dtheta = DMatrix::from_row_slice(
            3,
            3,
            &[
                -cth, 0.0, 0.0, //
                -sth * sphi, 0.0, 0.0, //
                -sth * cphi, 0.0, 0.0,
            ],
        );
        let dphi = DMatrix::from_row_slice(
            3,
            3,
            &[
                0.0, 0.0, 0.0, //
                cth * cphi, -sphi, 0.0, //
                -cth * sphi, -cphi, 0.0,
            ],
        );
        vec![DMatrix::zeros(3, 3), dtheta, dphi]
    })
}

fn skew(v: &Vector3<f64>) -> Matrix3<f64> {
    v.cross_matrix()
}

fn v3(v: &DVector<f64>) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

fn dyn_vec(v: Vector3<f64>) -> DVector<f64> {
    DVector::from_column_slice(v.as_slice())
}

fn dyn_mat(m: Matrix3<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(3, 3, m.as_slice())
}

fn mechanical(frame: QuasiFrame, inertia: [f64; 3]) -> MechanicalSystem {
    let diag = DVector::from_column_slice(&inertia);
    let du_diag = diag.clone();
    let h_diag = diag.clone();
    MechanicalSystem::new(frame, move |_, u| 0.5 * u.iter().zip(diag.iter()).map(|(w, i)| i * w * w).sum::<f64>())
        .with_dq(|_, _| DVector::zeros(3))
        .with_du(move |_, u| u.component_mul(&du_diag))
        .with_hess_uu(move |_, _| DMatrix::from_diagonal(&h_diag))
        .with_hess_uq(|_, _| DMatrix::zeros(3, 3))
}

/// Body torque `M = 𝕀a + u × 𝕀u`.
fn torque(i: &Matrix3<f64>, u: &Vector3<f64>, a: &Vector3<f64>) -> Vector3<f64> {
    i * a + u.cross(&(i * u))
}

fn cost(inertia: [f64; 3], isotropic: bool) -> CostDynamic {
    let i = Matrix3::from_diagonal(&Vector3::from(inertia));
    let cost = CostDynamic::new(move |_, u, a| 0.5 * torque(&i, &v3(u), &v3(a)).norm_squared())
        .with_dq(|_, _, _| DVector::zeros(3))
        .with_du(move |_, u, a| {
            let (u, a) = (v3(u), v3(a));
            let m = torque(&i, &u, &a);
            dyn_vec((i * u).cross(&m) + i * m.cross(&u))
        })
        .with_da(move |_, u, a| dyn_vec(i * torque(&i, &v3(u), &v3(a))))
        .with_hess_aa(move |_, _, _| dyn_mat(i * i))
        .with_hess_au(move |_, u, _| {
            let u = v3(u);
            dyn_mat(i * (skew(&u) * i - skew(&(i * u))))
        })
        .with_hess_aq(|_, _, _| DMatrix::zeros(3, 3));
    if isotropic {
        // κ = −I²ȷ exactly, so its Jacobians in (q, u, a) vanish.
        cost.with_kappa_jacobian(|_, _, _, _| [DMatrix::zeros(3, 3), DMatrix::zeros(3, 3), DMatrix::zeros(3, 3)])
    } else {
        cost
    }
}

pub(super) fn model(name: &'static str, params: &ModelParams) -> BuiltinModel {
    let frame = frame();
    let sample_box = vec![(-PI, PI), (-HALF_PI + 0.2, HALF_PI - 0.2), (-PI, PI)];
    let mut model = skeleton(name, frame.clone(), sample_box);
    let isotropic = name == "sphere_dyn";
    model.mechanical = Some(mechanical(frame.clone(), params.inertia));
    model.dynamic = Some(DynamicOcp::new(frame, cost(params.inertia, isotropic)));
    let rest = [0.0; 3];
    model.scenarios = if isotropic {
        vec![Scenario {
            name: "fig2",
            summary: "rest-to-rest reorientation to (π, −π/4, π/5) in unit time",
            layout: Layout::DynamicOc,
            bc: BoundaryConditions::dynamic(0.0, 1.0, &rest, &[PI, -PI / 4.0, PI / 5.0], &rest, &rest),
            guess: None,
        }]
    } else {
        vec![Scenario {
            name: "reorient",
            summary: "rest-to-rest reorientation to (0.4, −0.3, 0.5) in unit time",
            layout: Layout::DynamicOc,
            bc: BoundaryConditions::dynamic(0.0, 1.0, &rest, &[0.4, -0.3, 0.5], &rest, &rest),
            guess: None,
        }]
    };
    model
}

/// `γ¹₂₃ = 1`, `γ²₁₃ = −1`, `γ³₁₂ = 1` with their antisymmetric partners.
pub(super) fn listed_hamel() -> HamelTensor {
    let mut g = HamelTensor::zeros(3);
    g.set_antisymmetric(0, 1, 2, 1.0);
    g.set_antisymmetric(1, 0, 2, -1.0);
    g.set_antisymmetric(2, 0, 1, 1.0);
    g
}

/// `ψ̇, θ̇, φ̇` from the body angular velocity.
fn euler_rates(q: &[f64], u: &[f64]) -> [f64; 3] {
    let (sth, cth) = libm::sincos(q[1]);
    let (sphi, cphi) = libm::sincos(q[2]);
    let (sec, tan) = (1.0 / cth, sth / cth);
    [
        sec * sphi * u[1] + sec * cphi * u[2],
        cphi * u[1] - sphi * u[2],
        u[0] + tan * sphi * u[1] + tan * cphi * u[2],
    ]
}

/// Euler's equations; state `(ψ, θ, φ, u₁, u₂, u₃)`, torques `(M_x, M_y, M_z)`.
pub(super) fn reference_mechanics(s: &DVector<f64>, m: &DVector<f64>, params: &ModelParams) -> DVector<f64> {
    let [ix, iy, iz] = params.inertia;
    let [e32, e13, e21] = params.eta();
    let (u1, u2, u3) = (s[3], s[4], s[5]);
    let mut out: Vec<f64> = euler_rates(&s.as_slice()[..3], &s.as_slice()[3..6]).to_vec();
    out.extend([
        (m[0] - e32 * u2 * u3) / ix,
        (m[1] - e13 * u1 * u3) / iy,
        (m[2] - e21 * u1 * u2) / iz,
    ]);
    DVector::from_vec(out)
}

/// `κ` written out component by component; state
/// `(ψ, θ, φ, u₁, u₂, u₃, a₁, a₂, a₃, ȷ₁, ȷ₂, ȷ₃)`.
pub(super) fn kappa(s: &DVector<f64>, params: &ModelParams) -> Vector3<f64> {
    let [ix, iy, iz] = params.inertia;
    let [e32, e13, e21] = params.eta();
    let (u1, u2, u3, a1, a2, a3, j1, j2, j3) = (s[3], s[4], s[5], s[6], s[7], s[8], s[9], s[10], s[11]);
    Vector3::new(
        iy * e13 * a2 * u3 + iz * e21 * u2 * a3 + e13 * e13 * u1 * u3 * u3 + e21 * e21 * u1 * u2 * u2
            - ix * ix * j1
            - ix * e32 * u2 * a3
            - ix * e32 * a2 * u3,
        ix * e32 * a1 * u3 + iz * e21 * u1 * a3 + e32 * e32 * u2 * u3 * u3 + e21 * e21 * u1 * u1 * u2
            - iy * iy * j2
            - e13 * iy * u1 * a3
            - e13 * iy * a1 * u3,
        ix * e32 * a1 * u2 + iy * e13 * u1 * a2 + e32 * e32 * u2 * u2 * u3 + e13 * e13 * u1 * u1 * u3
            - iz * iz * j3
            - e21 * iz * u1 * a2
            - e21 * iz * a1 * u2,
    )
}

/// The time derivative of `κ` minus its `ȷ̇` terms, along `u̇ = a`, `ȧ = ȷ`.
fn kappa_rate_explicit(s: &DVector<f64>, params: &ModelParams) -> Vector3<f64> {
    let [ix, iy, iz] = params.inertia;
    let [e32, e13, e21] = params.eta();
    let (u1, u2, u3, a1, a2, a3, j1, j2, j3) = (s[3], s[4], s[5], s[6], s[7], s[8], s[9], s[10], s[11]);
    Vector3::new(
        iy * e13 * (j2 * u3 + a2 * a3) + iz * e21 * (a2 * a3 + u2 * j3)
            + e13 * e13 * (a1 * u3 * u3 + 2.0 * u1 * u3 * a3)
            + e21 * e21 * (a1 * u2 * u2 + 2.0 * u1 * u2 * a2)
            - ix * e32 * (a2 * a3 + u2 * j3)
            - ix * e32 * (j2 * u3 + a2 * a3),
        ix * e32 * (j1 * u3 + a1 * a3) + iz * e21 * (a1 * a3 + u1 * j3)
            + e32 * e32 * (a2 * u3 * u3 + 2.0 * u2 * u3 * a3)
            + e21 * e21 * (2.0 * u1 * a1 * u2 + u1 * u1 * a2)
            - e13 * iy * (a1 * a3 + u1 * j3)
            - e13 * iy * (j1 * u3 + a1 * a3),
        ix * e32 * (j1 * u2 + a1 * a2) + iy * e13 * (a1 * a2 + u1 * j2)
            + e32 * e32 * (2.0 * u2 * a2 * u3 + u2 * u2 * a3)
            + e13 * e13 * (2.0 * u1 * a1 * u3 + u1 * u1 * a3)
            - e21 * iz * (a1 * a2 + u1 * j2)
            - e21 * iz * (j1 * u2 + a1 * a2),
    )
}

/// `κ̇ = κ × ω` solved for `ȷ̇`, with the kinematics and `u̇ = a`, `ȧ = ȷ`.
pub(super) fn reference_dynamic(s: &DVector<f64>, params: &ModelParams) -> DVector<f64> {
    let [ix, iy, iz] = params.inertia;
    let omega = Vector3::new(s[3], s[4], s[5]);
    let target = kappa(s, params).cross(&omega);
    let explicit = kappa_rate_explicit(s, params);
    let jdot = [
        (explicit[0] - target[0]) / (ix * ix),
        (explicit[1] - target[1]) / (iy * iy),
        (explicit[2] - target[2]) / (iz * iz),
    ];
    let mut out: Vec<f64> = euler_rates(&s.as_slice()[..3], &s.as_slice()[3..6]).to_vec();
    out.extend_from_slice(&s.as_slice()[6..12]);
    out.extend(jdot);
    DVector::from_vec(out)
}

/// Isotropic body: `ω⃛ = ω̈ × ω`.
pub(super) fn reference_sphere(s: &DVector<f64>, _params: &ModelParams) -> DVector<f64> {
    let omega = Vector3::new(s[3], s[4], s[5]);
    let jerk = Vector3::new(s[9], s[10], s[11]);
    let mut out: Vec<f64> = euler_rates(&s.as_slice()[..3], &s.as_slice()[3..6]).to_vec();
    out.extend_from_slice(&s.as_slice()[6..12]);
    out.extend(jerk.cross(&omega).iter());
    DVector::from_vec(out)
}

/// `c = ω̈ − ω̇ × ω`, constant along isotropic optimal motions.
pub(super) fn sphere_first_integral(s: &DVector<f64>) -> DVector<f64> {
    let omega = Vector3::new(s[3], s[4], s[5]);
    let alpha = Vector3::new(s[6], s[7], s[8]);
    let jerk = Vector3::new(s[9], s[10], s[11]);
    dyn_vec(jerk - alpha.cross(&omega))
}

/// Kinetic energy and `‖Π‖²` of a mechanics-layout state.
pub(super) fn euler_integrals(s: &DVector<f64>, params: &ModelParams) -> [f64; 2] {
    let pi = Vector3::from(params.inertia).component_mul(&Vector3::new(s[3], s[4], s[5]));
    let omega = Vector3::new(s[3], s[4], s[5]);
    [0.5 * pi.dot(&omega), pi.norm_squared()]
}

#[cfg(test)]
mod tests {
    use super::*;

    /// `κ = Π×Π̇ + Π×(ω×Π) − 𝕀Π̈ − 𝕀{2ω×Π̇ + ω̇×Π + ω×(ω×Π)}`.
    fn kappa_vector_form(s: &DVector<f64>, params: &ModelParams) -> Vector3<f64> {
        let i = Matrix3::from_diagonal(&Vector3::from(params.inertia));
        let w = Vector3::new(s[3], s[4], s[5]);
        let wd = Vector3::new(s[6], s[7], s[8]);
        let wdd = Vector3::new(s[9], s[10], s[11]);
        let (p, pd, pdd) = (i * w, i * wd, i * wdd);
        p.cross(&pd) + p.cross(&w.cross(&p)) - i * pdd - i * (2.0 * w.cross(&pd) + wd.cross(&p) + w.cross(&w.cross(&p)))
    }

    #[test]
    fn component_and_vector_kappa_agree() {
        let params = ModelParams {
            inertia: [1.3, 2.1, 0.7],
            ..Default::default()
        };
        let s = DVector::from_vec(vec![0.1, 0.2, 0.3, 0.4, -0.5, 0.6, -0.7, 0.8, 0.9, -1.0, 1.1, 1.2]);
        assert!((kappa(&s, &params) - kappa_vector_form(&s, &params)).amax() < 1e-12);
    }

    #[test]
    fn sphere_reduces_to_jerk_cross_omega() {
        // ω = (0,0,1), ω̈ = (1,0,0) ⇒ ω⃛ = (0,−1,0)
        let s = DVector::from_vec(vec![0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0]);
        let d = reference_sphere(&s, &ModelParams::default());
        assert_eq!(&d.as_slice()[9..], &[0.0, -1.0, 0.0][..]);
    }
}
