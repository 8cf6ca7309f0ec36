//! Explicit first-order right-hand sides of the Boltzmann-Hamel equations.
//!
//! Three phase-space layouts are supported, none of which stores a
//! constrained quasi-component (those vanish identically):
//!
//! | layout        | contents                 | length   |
//! |---------------|--------------------------|----------|
//! | mechanics     | `(q, uᴬ)`                | 2n − m   |
//! | kinematic OC  | `(q, uᴵ, μ_σ)`           | 2n       |
//! | dynamic OC    | `(q, uᴬ, aᴬ, ȷᴬ, μ_σ)`   | 4n − 2m  |
//!
//! All γ-contractions share one shape, `Fᵢ = wⱼ γʲₛᵢ uˢ`, where the weight
//! vector `w` carries the momentum-like quantity on free slots (`∂𝓛/∂u`,
//! `∂C/∂u` or `κ`) and the multipliers `μ` on constrained slots.

use alloc::vec::Vec;
use core::fmt;
use core::ops::Range;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::frames::{FramePoint, QuasiFrame};
use crate::linalg;
use crate::problems::{DynamicOcp, KinematicOcp, MechanicalSystem};

/// Base step of the five-point differences used for `∂κ/∂(q, u, a)`.
pub const KAPPA_FD_STEP: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Layout {
    Mechanics,
    KinematicOc,
    DynamicOc,
}

impl Layout {
    pub fn state_len(self, n: usize, m: usize) -> usize {
        match self {
            Layout::Mechanics => 2 * n - m,
            Layout::KinematicOc => 2 * n,
            Layout::DynamicOc => 4 * n - 2 * m,
        }
    }
}

impl fmt::Display for Layout {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Layout::Mechanics => "mechanics",
            Layout::KinematicOc => "kinematic",
            Layout::DynamicOc => "dynamic",
        })
    }
}

/// A flat phase-space vector tagged with its layout.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    layout: Layout,
    n: usize,
    m: usize,
    data: DVector<f64>,
}

impl PhaseState {
    pub fn new(layout: Layout, n: usize, m: usize, data: DVector<f64>) -> Result<Self> {
        let expected = layout.state_len(n, m);
        if data.len() != expected {
            return Err(Error::dimension(alloc::format!("{layout} phase state"), data.len(), expected));
        }
        Ok(PhaseState { layout, n, m, data })
    }

    pub fn zeros(layout: Layout, n: usize, m: usize) -> Self {
        PhaseState {
            layout,
            n,
            m,
            data: DVector::zeros(layout.state_len(n, m)),
        }
    }

    /// Concatenates the given blocks; the layout is inferred from which are present.
    pub fn from_blocks(
        n: usize,
        m: usize,
        q: &[f64],
        u: &[f64],
        accel: Option<(&[f64], &[f64])>,
        mu: Option<&[f64]>,
    ) -> Result<Self> {
        let layout = match (accel.is_some(), mu.is_some()) {
            (false, false) => Layout::Mechanics,
            (false, true) => Layout::KinematicOc,
            (true, _) => Layout::DynamicOc,
        };
        let mut data = Vec::with_capacity(layout.state_len(n, m));
        data.extend_from_slice(q);
        data.extend_from_slice(u);
        if let Some((a, j)) = accel {
            data.extend_from_slice(a);
            data.extend_from_slice(j);
        }
        if let Some(mu) = mu {
            data.extend_from_slice(mu);
        }
        Self::new(layout, n, m, DVector::from_vec(data))
    }

    pub fn layout(&self) -> Layout {
        self.layout
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.n, self.m)
    }

    pub fn as_vector(&self) -> &DVector<f64> {
        &self.data
    }

    pub fn into_vector(self) -> DVector<f64> {
        self.data
    }

    fn free(&self) -> usize {
        self.n - self.m
    }

    pub fn q_range(&self) -> Range<usize> {
        0..self.n
    }

    pub fn u_range(&self) -> Range<usize> {
        self.n..self.n + self.free()
    }

    pub fn a_range(&self) -> Option<Range<usize>> {
        (self.layout == Layout::DynamicOc).then(|| self.n + self.free()..self.n + 2 * self.free())
    }

    pub fn j_range(&self) -> Option<Range<usize>> {
        (self.layout == Layout::DynamicOc).then(|| self.n + 2 * self.free()..self.n + 3 * self.free())
    }

    pub fn mu_range(&self) -> Option<Range<usize>> {
        let end = self.data.len();
        match self.layout {
            Layout::Mechanics => None,
            _ => Some(end - self.m..end),
        }
    }

    pub fn q(&self) -> DVector<f64> {
        self.block(self.q_range())
    }

    pub fn u_free(&self) -> DVector<f64> {
        self.block(self.u_range())
    }

    pub fn a(&self) -> Option<DVector<f64>> {
        self.a_range().map(|r| self.block(r))
    }

    pub fn j(&self) -> Option<DVector<f64>> {
        self.j_range().map(|r| self.block(r))
    }

    pub fn mu(&self) -> Option<DVector<f64>> {
        self.mu_range().map(|r| self.block(r))
    }

    fn block(&self, r: Range<usize>) -> DVector<f64> {
        DVector::from_column_slice(&self.data.as_slice()[r])
    }
}

/// A time-dependent vector field on one of the phase-space layouts.
pub trait VectorField {
    fn layout(&self) -> Layout;

    /// `(n, m)`.
    fn dims(&self) -> (usize, usize);

    fn eval(&self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>>;

    fn state_len(&self) -> usize {
        let (n, m) = self.dims();
        self.layout().state_len(n, m)
    }
}

fn check_state(field: &dyn VectorField, y: &DVector<f64>) -> Result<()> {
    let expected = field.state_len();
    if y.len() != expected {
        return Err(Error::dimension(alloc::format!("{} state", field.layout()), y.len(), expected));
    }
    Ok(())
}

fn frame_eval(frame: &QuasiFrame, q: &DVector<f64>, u_free: &DVector<f64>) -> Result<(FramePoint, DVector<f64>, DVector<f64>)> {
    let point = frame.point_with_hamel(q)?;
    let u_full = frame.scatter_free(u_free.as_slice());
    let qdot = &point.phi * &u_full;
    Ok((point, u_full, qdot))
}

fn slice(y: &DVector<f64>, r: Range<usize>) -> DVector<f64> {
    DVector::from_column_slice(&y.as_slice()[r])
}

/// Free-slot rows of an n×k matrix.
fn free_rows(frame: &QuasiFrame, mat: &DMatrix<f64>) -> DMatrix<f64> {
    mat.select_rows(frame.free())
}

/// Boltzmann-Hamel mechanics driven by quasi-forces `Q_I(t)`.
pub struct ForcedMechanics<'a> {
    pub system: &'a MechanicalSystem,
    pub forces: &'a dyn Fn(f64) -> DVector<f64>,
}

impl VectorField for ForcedMechanics<'_> {
    fn layout(&self) -> Layout {
        Layout::Mechanics
    }

    fn dims(&self) -> (usize, usize) {
        (self.system.frame.n(), self.system.frame.m())
    }

    fn eval(&self, t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_state(self, y)?;
        let frame = &self.system.frame;
        let n = frame.n();
        let f = frame.free_count();
        let q = slice(y, 0..n);
        let u = slice(y, n..n + f);
        let (point, u_full, qdot) = frame_eval(frame, &q, &u)?;
        let lp = self.system.partials(&q, &u_full);
        let forces = (self.forces)(t);
        if forces.len() != f {
            return Err(Error::dimension("quasi-force vector", forces.len(), f));
        }

        // d/dt ∂𝓛/∂uᴵ = M_IJ u̇ᴶ + ∂²𝓛/∂uᴵ∂qᵏ q̇ᵏ with u̇ᵅ ≡ 0.
        let dtheta = point.pull_back(&lp.dq);
        let gyro = point.gamma().contract(&lp.du, &u_full);
        let mass = lp.hess_uu.select_rows(frame.free()).select_columns(frame.free());
        let coupling = free_rows(frame, &lp.hess_uq) * &qdot;
        let rhs = forces + frame.gather_free(&(dtheta + gyro)) - coupling;
        let udot = linalg::solve_checked(&mass, &rhs, "quasi-mass matrix")?;

        let mut out = DVector::zeros(y.len());
        out.rows_mut(0, n).copy_from(&qdot);
        out.rows_mut(n, f).copy_from(&udot);
        Ok(out)
    }
}

/// Forward Boltzmann-Hamel dynamics at one mechanics-layout state.
pub fn mechanics_rhs(
    system: &MechanicalSystem,
    forces: &dyn Fn(f64) -> DVector<f64>,
    t: f64,
    state: &PhaseState,
) -> Result<PhaseState> {
    let field = ForcedMechanics { system, forces };
    let d = field.eval(t, state.as_vector())?;
    PhaseState::new(Layout::Mechanics, state.n, state.m, d)
}

/// Control forces `Q_I = d/dt ∂𝓛/∂uᴵ − ∂𝓛/∂θᴵ − ∂𝓛/∂uʲ γʲ_KI uᴷ` along a
/// motion with known quasi-accelerations.
pub fn recover_controls(
    system: &MechanicalSystem,
    q: &DVector<f64>,
    u_free: &DVector<f64>,
    udot_free: &DVector<f64>,
) -> Result<DVector<f64>> {
    let frame = &system.frame;
    let (point, u_full, qdot) = frame_eval(frame, q, u_free)?;
    let lp = system.partials(q, &u_full);
    let dtheta = point.pull_back(&lp.dq);
    let gyro = point.gamma().contract(&lp.du, &u_full);
    let mass = lp.hess_uu.select_rows(frame.free()).select_columns(frame.free());
    let ddt = mass * udot_free + free_rows(frame, &lp.hess_uq) * &qdot;
    Ok(ddt - frame.gather_free(&(dtheta + gyro)))
}

/// Control recovery from a dynamic-OC state, whose `a` block is `u̇ᴬ`.
pub fn recover_controls_from_state(system: &MechanicalSystem, state: &PhaseState) -> Result<DVector<f64>> {
    let a = state.a().ok_or(Error::UnsupportedLayout {
        model: alloc::string::String::from("mechanical system"),
        layout: state.layout(),
    })?;
    recover_controls(system, &state.q(), &state.u_free(), &a)
}

impl VectorField for KinematicOcp {
    fn layout(&self) -> Layout {
        Layout::KinematicOc
    }

    fn dims(&self) -> (usize, usize) {
        (self.frame.n(), self.frame.m())
    }

    fn eval(&self, _t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_state(self, y)?;
        let frame = &self.frame;
        let n = frame.n();
        let f = frame.free_count();
        let q = slice(y, 0..n);
        let u = slice(y, n..n + f);
        let mu = slice(y, n + f..2 * n);
        let (point, u_full, qdot) = frame_eval(frame, &q, &u)?;
        let cp = self.cost.partials(&q, &u);

        let weights = frame.interleave(cp.du.as_slice(), mu.as_slice());
        let forcing = point.pull_back(&cp.dq) + point.gamma().contract(&weights, &u_full);

        let rhs = frame.gather_free(&forcing) - &cp.hess_uq * &qdot;
        let udot = linalg::solve_checked(&cp.hess_uu, &rhs, "cost Hessian ∂²C/∂u∂u")?;
        let mudot = frame.gather_constrained(&forcing);

        let mut out = DVector::zeros(y.len());
        out.rows_mut(0, n).copy_from(&qdot);
        out.rows_mut(n, f).copy_from(&udot);
        out.rows_mut(n + f, n - f).copy_from(&mudot);
        Ok(out)
    }
}

pub fn kinematic_rhs(ocp: &KinematicOcp, state: &PhaseState) -> Result<PhaseState> {
    let d = ocp.eval(0.0, state.as_vector())?;
    PhaseState::new(Layout::KinematicOc, state.n, state.m, d)
}

/// `κ_J = ∂C/∂uᴶ − d/dt ∂C/∂aᴶ`, the time derivative expanded by the chain rule
/// with `q̇ = Φu`, `u̇ = a`, `ȧ = ȷ`.
pub fn kappa(
    ocp: &DynamicOcp,
    q: &DVector<f64>,
    u: &DVector<f64>,
    a: &DVector<f64>,
    j: &DVector<f64>,
) -> Result<DVector<f64>> {
    let point = ocp.frame.point(q)?;
    let qdot = &point.phi * ocp.frame.scatter_free(u.as_slice());
    Ok(kappa_with(ocp, q, u, a, j, &qdot))
}

fn kappa_with(
    ocp: &DynamicOcp,
    q: &DVector<f64>,
    u: &DVector<f64>,
    a: &DVector<f64>,
    j: &DVector<f64>,
    qdot: &DVector<f64>,
) -> DVector<f64> {
    let cp = ocp.cost.partials(q, u, a);
    cp.du - &cp.hess_aa * j - &cp.hess_au * a - &cp.hess_aq * qdot
}

/// `(∂κ/∂q, ∂κ/∂u, ∂κ/∂a)` at fixed `ȷ`.
pub fn kappa_jacobians(
    ocp: &DynamicOcp,
    q: &DVector<f64>,
    u: &DVector<f64>,
    a: &DVector<f64>,
    j: &DVector<f64>,
) -> Result<[DMatrix<f64>; 3]> {
    let phi = ocp.frame.phi_at(q)?;
    kappa_jacobians_at(ocp, &phi, q, u, a, j)
}

fn kappa_jacobians_at(
    ocp: &DynamicOcp,
    phi: &DMatrix<f64>,
    q: &DVector<f64>,
    u: &DVector<f64>,
    a: &DVector<f64>,
    j: &DVector<f64>,
) -> Result<[DMatrix<f64>; 3]> {
    if let Some(jac) = ocp.cost.kappa_jacobian() {
        return Ok(jac(q, u, a, j));
    }
    let f = u.len();
    let qdot = phi * ocp.frame.scatter_free(u.as_slice());
    let kq = linalg::five_point_jacobian(|x| kappa(ocp, x, u, a, j), q, f, KAPPA_FD_STEP)?;
    let ku = linalg::five_point_jacobian(
        |x| Ok(kappa_with(ocp, q, x, a, j, &(phi * ocp.frame.scatter_free(x.as_slice())))),
        u,
        f,
        KAPPA_FD_STEP,
    )?;
    let ka = linalg::five_point_jacobian(|x| Ok(kappa_with(ocp, q, u, x, j, &qdot)), a, f, KAPPA_FD_STEP)?;
    Ok([kq, ku, ka])
}

impl VectorField for DynamicOcp {
    fn layout(&self) -> Layout {
        Layout::DynamicOc
    }

    fn dims(&self) -> (usize, usize) {
        (self.frame.n(), self.frame.m())
    }

    fn eval(&self, _t: f64, y: &DVector<f64>) -> Result<DVector<f64>> {
        check_state(self, y)?;
        let frame = &self.frame;
        let n = frame.n();
        let m = frame.m();
        let f = frame.free_count();
        let q = slice(y, 0..n);
        let u = slice(y, n..n + f);
        let a = slice(y, n + f..n + 2 * f);
        let j = slice(y, n + 2 * f..n + 3 * f);
        let mu = slice(y, n + 3 * f..n + 3 * f + m);
        let (point, u_full, qdot) = frame_eval(frame, &q, &u)?;
        let cp = self.cost.partials(&q, &u, &a);
        let kap = &cp.du - &cp.hess_aa * &j - &cp.hess_au * &a - &cp.hess_aq * &qdot;

        let weights = frame.interleave(kap.as_slice(), mu.as_slice());
        let forcing = point.pull_back(&cp.dq) + point.gamma().contract(&weights, &u_full);

        // κ̇ = ∂κ/∂q q̇ + ∂κ/∂u a + ∂κ/∂a ȷ − ∂²C/∂a∂a ȷ̇ must equal the free forcing.
        let [kq, ku, ka] = kappa_jacobians_at(self, &point.phi, &q, &u, &a, &j)?;
        let rhs = kq * &qdot + ku * &a + ka * &j - frame.gather_free(&forcing);
        let jdot = linalg::solve_checked(&cp.hess_aa, &rhs, "cost Hessian ∂²C/∂a∂a")?;
        let mudot = frame.gather_constrained(&forcing);

        let mut out = DVector::zeros(y.len());
        out.rows_mut(0, n).copy_from(&qdot);
        out.rows_mut(n, f).copy_from(&a);
        out.rows_mut(n + f, f).copy_from(&j);
        out.rows_mut(n + 2 * f, f).copy_from(&jdot);
        out.rows_mut(n + 3 * f, m).copy_from(&mudot);
        Ok(out)
    }
}

pub fn dynamic_rhs(ocp: &DynamicOcp, state: &PhaseState) -> Result<PhaseState> {
    let d = ocp.eval(0.0, state.as_vector())?;
    PhaseState::new(Layout::DynamicOc, state.n, state.m, d)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::problems::{CostDynamic, CostKinematic};

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn layout_lengths() {
        assert_eq!(Layout::Mechanics.state_len(5, 2), 8);
        assert_eq!(Layout::KinematicOc.state_len(5, 2), 10);
        assert_eq!(Layout::DynamicOc.state_len(5, 2), 16);
        assert!(PhaseState::new(Layout::KinematicOc, 3, 1, DVector::zeros(5)).is_err());
    }

    #[test]
    fn phase_state_blocks() {
        let s = PhaseState::from_blocks(4, 2, &[1.0, 2.0, 3.0, 4.0], &[5.0, 6.0], Some((&[7.0, 8.0], &[9.0, 10.0])), Some(&[11.0, 12.0]))
            .unwrap();
        assert_eq!(s.layout(), Layout::DynamicOc);
        assert_eq!(s.a().unwrap(), dv(&[7.0, 8.0]));
        assert_eq!(s.j().unwrap(), dv(&[9.0, 10.0]));
        assert_eq!(s.mu().unwrap(), dv(&[11.0, 12.0]));
    }

    #[test]
    fn free_quartic_spline_limit_has_zero_snap() {
        let frame = QuasiFrame::new(3, 0, |_| DMatrix::identity(3, 3));
        let cost = CostDynamic::new(|_, _, a| 0.5 * a.norm_squared()).with_da(|_, _, a| a.clone());
        let y = dv(&[0.1, 0.2, 0.3, 1.0, -1.0, 0.5, 0.2, 0.1, 0.0, -0.3, 0.4, 0.7]);
        let ocp = DynamicOcp::new(frame, cost);
        let d = ocp.eval(0.0, &y).unwrap();
        assert!(d.rows(9, 3).amax() < 1e-9);
        assert_eq!(d.rows(3, 3), y.rows(6, 3));
        // values alone go through nested differences
        let coarse = DynamicOcp::new(ocp.frame.clone(), ocp.cost.value_only());
        assert!(coarse.eval(0.0, &y).unwrap().rows(9, 3).amax() < 1e-6);
    }

    #[test]
    fn singular_cost_hessian_is_reported() {
        let frame = QuasiFrame::new(2, 0, |_| DMatrix::identity(2, 2));
        let ocp = KinematicOcp::new(frame, CostKinematic::new(|_, u| 0.5 * u[0] * u[0]));
        let err = ocp.eval(0.0, &dv(&[0.0, 0.0, 1.0, 1.0])).unwrap_err();
        assert!(matches!(err, Error::SingularMass { .. }));
    }
}
