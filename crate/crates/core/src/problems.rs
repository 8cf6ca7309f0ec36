//! Cost integrands, Lagrangians and boundary conditions.
//!
//! Costs only ever see the free quasi-components: a kinematic cost is
//! `C(q, uᴵ)` and a dynamic cost is `C(q, uᴬ, aᴬ)`. Every partial-derivative
//! supplier is optional; absent ones are filled by central differences.

use alloc::format;
use alloc::string::String;
use alloc::sync::Arc;
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::frames::QuasiFrame;
use crate::linalg;

type Scalar2 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
type Vector2 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
type Matrix2 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;
type Scalar3 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64 + Send + Sync>;
type Vector3 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync>;
type Matrix3 = Arc<dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// `(q, u, a, ȷ) ↦ (∂κ/∂q, ∂κ/∂u, ∂κ/∂a)`.
pub type KappaJacobianFn = Arc<
    dyn Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> [DMatrix<f64>; 3] + Send + Sync,
>;

/// Base step for first-derivative differences.
pub const FD_STEP: f64 = 1e-5;
/// Base step for second differences taken directly on cost values.
const FD_STEP_SECOND: f64 = 1e-4;

/// A kinematic cost `C(q, uᴵ)`.
#[derive(Clone)]
pub struct CostKinematic {
    value: Scalar2,
    dq: Option<Vector2>,
    du: Option<Vector2>,
    hess_uu: Option<Matrix2>,
    hess_uq: Option<Matrix2>,
}

/// All first and second partials of a kinematic cost at one point.
#[derive(Debug, Clone, PartialEq)]
pub struct KinematicPartials {
    pub dq: DVector<f64>,
    pub du: DVector<f64>,
    pub hess_uu: DMatrix<f64>,
    /// `∂²C/∂uᴵ∂qᵏ`, (n−m)×n.
    pub hess_uq: DMatrix<f64>,
}

impl CostKinematic {
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        CostKinematic {
            value: Arc::new(value),
            dq: None,
            du: None,
            hess_uu: None,
            hess_uq: None,
        }
    }

    pub fn with_dq(mut self, f: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.dq = Some(Arc::new(f));
        self
    }

    pub fn with_du(mut self, f: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.du = Some(Arc::new(f));
        self
    }

    pub fn with_hess_uu(
        mut self,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess_uu = Some(Arc::new(f));
        self
    }

    pub fn with_hess_uq(
        mut self,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess_uq = Some(Arc::new(f));
        self
    }

    /// The bare integrand, every derivative left to finite differences.
    pub fn value_only(&self) -> Self {
        CostKinematic {
            value: self.value.clone(),
            dq: None,
            du: None,
            hess_uu: None,
            hess_uq: None,
        }
    }

    pub fn has_all_partials(&self) -> bool {
        self.dq.is_some() && self.du.is_some() && self.hess_uu.is_some() && self.hess_uq.is_some()
    }

    pub fn eval(&self, q: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.value)(q, u)
    }

    fn grad_u(&self, q: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        match &self.du {
            Some(f) => f(q, u),
            None => linalg::central_gradient(|x| (self.value)(q, x), u, FD_STEP),
        }
    }

    /// Supplied partials where present, central differences for the rest.
    pub fn partials(&self, q: &DVector<f64>, u: &DVector<f64>) -> KinematicPartials {
        let dq = match &self.dq {
            Some(f) => f(q, u),
            None => linalg::central_gradient(|x| (self.value)(x, u), q, FD_STEP),
        };
        let du = self.grad_u(q, u);
        let hess_uu = match (&self.hess_uu, &self.du) {
            (Some(f), _) => f(q, u),
            (None, Some(_)) => {
                let h = linalg::central_jacobian(|x| self.grad_u(q, x), u, u.len(), FD_STEP);
                (&h + h.transpose()) * 0.5
            }
            (None, None) => linalg::central_hessian(|x| (self.value)(q, x), u, FD_STEP_SECOND),
        };
        let hess_uq = match (&self.hess_uq, &self.du) {
            (Some(f), _) => f(q, u),
            (None, Some(_)) => linalg::central_jacobian(|x| self.grad_u(x, u), q, u.len(), FD_STEP),
            (None, None) => linalg::central_mixed(|x, y| (self.value)(y, x), u, q, FD_STEP_SECOND),
        };
        KinematicPartials {
            dq,
            du,
            hess_uu,
            hess_uq,
        }
    }
}

/// A dynamic cost `C(q, uᴬ, aᴬ)`.
#[derive(Clone)]
pub struct CostDynamic {
    value: Scalar3,
    dq: Option<Vector3>,
    du: Option<Vector3>,
    da: Option<Vector3>,
    hess_aa: Option<Matrix3>,
    hess_au: Option<Matrix3>,
    hess_aq: Option<Matrix3>,
    kappa_jacobian: Option<KappaJacobianFn>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DynamicPartials {
    pub dq: DVector<f64>,
    pub du: DVector<f64>,
    pub da: DVector<f64>,
    pub hess_aa: DMatrix<f64>,
    pub hess_au: DMatrix<f64>,
    /// `∂²C/∂aᴬ∂qᵏ`, (n−m)×n.
    pub hess_aq: DMatrix<f64>,
}

macro_rules! dyn_setter {
    ($name:ident, $field:ident, $out:ty) => {
        pub fn $name(
            mut self,
            f: impl Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> $out + Send + Sync + 'static,
        ) -> Self {
            self.$field = Some(Arc::new(f));
            self
        }
    };
}

impl CostDynamic {
    pub fn new<F>(value: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        CostDynamic {
            value: Arc::new(value),
            dq: None,
            du: None,
            da: None,
            hess_aa: None,
            hess_au: None,
            hess_aq: None,
            kappa_jacobian: None,
        }
    }

    dyn_setter!(with_dq, dq, DVector<f64>);
    dyn_setter!(with_du, du, DVector<f64>);
    dyn_setter!(with_da, da, DVector<f64>);
    dyn_setter!(with_hess_aa, hess_aa, DMatrix<f64>);
    dyn_setter!(with_hess_au, hess_au, DMatrix<f64>);
    dyn_setter!(with_hess_aq, hess_aq, DMatrix<f64>);

    /// Supplies `∂κ/∂(q, u, a)` directly (third-order cost data), bypassing
    /// the finite-difference Jacobian of `κ` during assembly.
    pub fn with_kappa_jacobian(
        mut self,
        f: impl Fn(&DVector<f64>, &DVector<f64>, &DVector<f64>, &DVector<f64>) -> [DMatrix<f64>; 3]
            + Send
            + Sync
            + 'static,
    ) -> Self {
        self.kappa_jacobian = Some(Arc::new(f));
        self
    }

    pub fn value_only(&self) -> Self {
        CostDynamic {
            value: self.value.clone(),
            dq: None,
            du: None,
            da: None,
            hess_aa: None,
            hess_au: None,
            hess_aq: None,
            kappa_jacobian: None,
        }
    }

    /// Drops only the `κ` Jacobian supplier.
    pub fn without_kappa_jacobian(&self) -> Self {
        let mut c = self.clone();
        c.kappa_jacobian = None;
        c
    }

    pub fn kappa_jacobian(&self) -> Option<&KappaJacobianFn> {
        self.kappa_jacobian.as_ref()
    }

    pub fn eval(&self, q: &DVector<f64>, u: &DVector<f64>, a: &DVector<f64>) -> f64 {
        (self.value)(q, u, a)
    }

    fn grad_a(&self, q: &DVector<f64>, u: &DVector<f64>, a: &DVector<f64>) -> DVector<f64> {
        match &self.da {
            Some(f) => f(q, u, a),
            None => linalg::central_gradient(|x| (self.value)(q, u, x), a, FD_STEP),
        }
    }

    pub fn partials(&self, q: &DVector<f64>, u: &DVector<f64>, a: &DVector<f64>) -> DynamicPartials {
        let dq = match &self.dq {
            Some(f) => f(q, u, a),
            None => linalg::central_gradient(|x| (self.value)(x, u, a), q, FD_STEP),
        };
        let du = match &self.du {
            Some(f) => f(q, u, a),
            None => linalg::central_gradient(|x| (self.value)(q, x, a), u, FD_STEP),
        };
        let da = self.grad_a(q, u, a);
        let f = a.len();
        let hess_aa = match (&self.hess_aa, &self.da) {
            (Some(h), _) => h(q, u, a),
            (None, Some(_)) => {
                let h = linalg::central_jacobian(|x| self.grad_a(q, u, x), a, f, FD_STEP);
                (&h + h.transpose()) * 0.5
            }
            (None, None) => linalg::central_hessian(|x| (self.value)(q, u, x), a, FD_STEP_SECOND),
        };
        let hess_au = match (&self.hess_au, &self.da) {
            (Some(h), _) => h(q, u, a),
            (None, Some(_)) => linalg::central_jacobian(|x| self.grad_a(q, x, a), u, f, FD_STEP),
            (None, None) => linalg::central_mixed(|x, y| (self.value)(q, y, x), a, u, FD_STEP_SECOND),
        };
        let hess_aq = match (&self.hess_aq, &self.da) {
            (Some(h), _) => h(q, u, a),
            (None, Some(_)) => linalg::central_jacobian(|x| self.grad_a(x, u, a), q, f, FD_STEP),
            (None, None) => linalg::central_mixed(|x, y| (self.value)(y, u, x), a, q, FD_STEP_SECOND),
        };
        DynamicPartials {
            dq,
            du,
            da,
            hess_aa,
            hess_au,
            hess_aq,
        }
    }
}

/// An unconstrained Lagrangian re-expressed in quasi-velocities, `𝓛(q, u)`,
/// with `u` the full n-vector.
#[derive(Clone)]
pub struct MechanicalSystem {
    pub frame: QuasiFrame,
    lagrangian: Scalar2,
    dq: Option<Vector2>,
    du: Option<Vector2>,
    hess_uu: Option<Matrix2>,
    hess_uq: Option<Matrix2>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagrangianPartials {
    pub dq: DVector<f64>,
    pub du: DVector<f64>,
    pub hess_uu: DMatrix<f64>,
    pub hess_uq: DMatrix<f64>,
}

impl MechanicalSystem {
    pub fn new<F>(frame: QuasiFrame, lagrangian: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        MechanicalSystem {
            frame,
            lagrangian: Arc::new(lagrangian),
            dq: None,
            du: None,
            hess_uu: None,
            hess_uq: None,
        }
    }

    pub fn with_dq(mut self, f: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.dq = Some(Arc::new(f));
        self
    }

    pub fn with_du(mut self, f: impl Fn(&DVector<f64>, &DVector<f64>) -> DVector<f64> + Send + Sync + 'static) -> Self {
        self.du = Some(Arc::new(f));
        self
    }

    pub fn with_hess_uu(
        mut self,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess_uu = Some(Arc::new(f));
        self
    }

    pub fn with_hess_uq(
        mut self,
        f: impl Fn(&DVector<f64>, &DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    ) -> Self {
        self.hess_uq = Some(Arc::new(f));
        self
    }

    pub fn value_only(&self) -> Self {
        MechanicalSystem {
            frame: self.frame.clone(),
            lagrangian: self.lagrangian.clone(),
            dq: None,
            du: None,
            hess_uu: None,
            hess_uq: None,
        }
    }

    pub fn lagrangian(&self, q: &DVector<f64>, u: &DVector<f64>) -> f64 {
        (self.lagrangian)(q, u)
    }

    fn grad_u(&self, q: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        match &self.du {
            Some(f) => f(q, u),
            None => linalg::central_gradient(|x| (self.lagrangian)(q, x), u, FD_STEP),
        }
    }

    pub fn partials(&self, q: &DVector<f64>, u: &DVector<f64>) -> LagrangianPartials {
        let n = q.len();
        let dq = match &self.dq {
            Some(f) => f(q, u),
            None => linalg::central_gradient(|x| (self.lagrangian)(x, u), q, FD_STEP),
        };
        let du = self.grad_u(q, u);
        let hess_uu = match (&self.hess_uu, &self.du) {
            (Some(f), _) => f(q, u),
            (None, Some(_)) => {
                let h = linalg::central_jacobian(|x| self.grad_u(q, x), u, n, FD_STEP);
                (&h + h.transpose()) * 0.5
            }
            (None, None) => linalg::central_hessian(|x| (self.lagrangian)(q, x), u, FD_STEP_SECOND),
        };
        let hess_uq = match (&self.hess_uq, &self.du) {
            (Some(f), _) => f(q, u),
            (None, Some(_)) => linalg::central_jacobian(|x| self.grad_u(x, u), q, n, FD_STEP),
            (None, None) => linalg::central_mixed(|x, y| (self.lagrangian)(y, x), u, q, FD_STEP_SECOND),
        };
        LagrangianPartials {
            dq,
            du,
            hess_uu,
            hess_uq,
        }
    }

    /// Quasi-forces `Qᵢ = Φʲᵢ Fⱼ` from generalised forces `F`.
    pub fn quasi_forces(&self, q: &DVector<f64>, generalized: &DVector<f64>) -> Result<DVector<f64>> {
        let point = self.frame.point(q)?;
        Ok(point.pull_back(generalized))
    }
}

/// Endpoint data of a two-point boundary value problem.
///
/// Kinematic problems fix configurations only; dynamic problems also fix the
/// free quasi-velocities at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryConditions {
    pub t0: f64,
    pub t1: f64,
    pub q0: DVector<f64>,
    pub q1: DVector<f64>,
    pub u0_free: Option<DVector<f64>>,
    pub u1_free: Option<DVector<f64>>,
}

impl BoundaryConditions {
    pub fn kinematic(t0: f64, t1: f64, q0: &[f64], q1: &[f64]) -> Self {
        BoundaryConditions {
            t0,
            t1,
            q0: DVector::from_column_slice(q0),
            q1: DVector::from_column_slice(q1),
            u0_free: None,
            u1_free: None,
        }
    }

    pub fn dynamic(t0: f64, t1: f64, q0: &[f64], q1: &[f64], u0: &[f64], u1: &[f64]) -> Self {
        BoundaryConditions {
            u0_free: Some(DVector::from_column_slice(u0)),
            u1_free: Some(DVector::from_column_slice(u1)),
            ..Self::kinematic(t0, t1, q0, q1)
        }
    }

    pub fn duration(&self) -> f64 {
        self.t1 - self.t0
    }
}

/// Kinematic optimal control: minimise `∫ C(q, u) dt` over curves with `uᵅ ≡ 0`.
#[derive(Clone)]
pub struct KinematicOcp {
    pub frame: QuasiFrame,
    pub cost: CostKinematic,
}

/// Dynamic optimal control: minimise `∫ C(q, u, a) dt` with both endpoint
/// configurations and quasi-velocities fixed.
#[derive(Clone)]
pub struct DynamicOcp {
    pub frame: QuasiFrame,
    pub cost: CostDynamic,
}

/// Non-fatal findings from problem validation. Empty for well-formed problems.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub notes: Vec<String>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.notes.is_empty()
    }
}

fn check_bc_common(frame: &QuasiFrame, bc: &BoundaryConditions, errors: &mut Vec<String>, notes: &mut Vec<String>) {
    let n = frame.n();
    if !(bc.t1 > bc.t0) {
        errors.push(format!("t1 ({}) must exceed t0 ({})", bc.t1, bc.t0));
    }
    for (name, q) in [("q0", &bc.q0), ("q1", &bc.q1)] {
        if q.len() != n {
            errors.push(format!("{name} length {}, expected {n}", q.len()));
            continue;
        }
        if q.iter().any(|x| !x.is_finite()) {
            errors.push(format!("{name} has non-finite entries"));
            continue;
        }
        match frame.point(q) {
            Ok(p) if p.condition > 1e6 => notes.push(format!("frame poorly conditioned at {name} ({:e})", p.condition)),
            Ok(_) => {}
            Err(e) => errors.push(format!("{name}: {e}")),
        }
    }
}

fn check_shape(errors: &mut Vec<String>, what: &str, got: (usize, usize), expected: (usize, usize)) {
    if got != expected {
        errors.push(format!("{what} shape {}x{}, expected {}x{}", got.0, got.1, expected.0, expected.1));
    }
}

impl KinematicOcp {
    pub fn new(frame: QuasiFrame, cost: CostKinematic) -> Self {
        KinematicOcp { frame, cost }
    }

    /// Dimensional consistency, frame invertibility at both ends and a
    /// positive-definite control Hessian at the start point.
    pub fn validate(&self, bc: &BoundaryConditions) -> Result<ValidationReport> {
        let mut errors = Vec::new();
        let mut notes = Vec::new();
        check_bc_common(&self.frame, bc, &mut errors, &mut notes);
        if bc.u0_free.is_some() || bc.u1_free.is_some() {
            notes.push(String::from("endpoint quasi-velocities are ignored by kinematic problems"));
        }
        if errors.is_empty() {
            let f = self.frame.free_count();
            let n = self.frame.n();
            let u = DVector::zeros(f);
            let c = self.cost.eval(&bc.q0, &u);
            if !c.is_finite() {
                errors.push(String::from("cost is not finite at (q0, u = 0)"));
            }
            let p = self.cost.partials(&bc.q0, &u);
            if p.dq.len() != n {
                errors.push(format!("∂C/∂q length {}, expected {n}", p.dq.len()));
            }
            if p.du.len() != f {
                errors.push(format!("∂C/∂u length {}, expected {f}", p.du.len()));
            }
            check_shape(&mut errors, "∂²C/∂u∂u", p.hess_uu.shape(), (f, f));
            check_shape(&mut errors, "∂²C/∂u∂q", p.hess_uq.shape(), (f, n));
            if p.hess_uu.shape() == (f, f) && !linalg::is_spd(&p.hess_uu) {
                errors.push(String::from("∂²C/∂u∂u is not symmetric positive definite at q0"));
            }
        }
        if errors.is_empty() {
            Ok(ValidationReport { notes })
        } else {
            Err(Error::InvalidProblem(errors))
        }
    }
}

impl DynamicOcp {
    pub fn new(frame: QuasiFrame, cost: CostDynamic) -> Self {
        DynamicOcp { frame, cost }
    }

    pub fn validate(&self, bc: &BoundaryConditions) -> Result<ValidationReport> {
        let mut errors = Vec::new();
        let mut notes = Vec::new();
        check_bc_common(&self.frame, bc, &mut errors, &mut notes);
        let f = self.frame.free_count();
        let n = self.frame.n();
        for (name, u) in [("u0_free", &bc.u0_free), ("u1_free", &bc.u1_free)] {
            match u {
                None => errors.push(format!("{name} required")),
                Some(u) if u.len() != f => errors.push(format!("{name} length {}, expected {f}", u.len())),
                Some(_) => {}
            }
        }
        if errors.is_empty() {
            let u = bc.u0_free.clone().expect("checked");
            let a = DVector::zeros(f);
            if !self.cost.eval(&bc.q0, &u, &a).is_finite() {
                errors.push(String::from("cost is not finite at (q0, u0, a = 0)"));
            }
            let p = self.cost.partials(&bc.q0, &u, &a);
            if p.dq.len() != n {
                errors.push(format!("∂C/∂q length {}, expected {n}", p.dq.len()));
            }
            if p.du.len() != f || p.da.len() != f {
                errors.push(format!("∂C/∂u, ∂C/∂a lengths {}, {}, expected {f}", p.du.len(), p.da.len()));
            }
            check_shape(&mut errors, "∂²C/∂a∂a", p.hess_aa.shape(), (f, f));
            check_shape(&mut errors, "∂²C/∂a∂u", p.hess_au.shape(), (f, f));
            check_shape(&mut errors, "∂²C/∂a∂q", p.hess_aq.shape(), (f, n));
            if p.hess_aa.shape() == (f, f) && !linalg::is_spd(&p.hess_aa) {
                errors.push(String::from("∂²C/∂a∂a is not symmetric positive definite at q0"));
            }
        }
        if errors.is_empty() {
            Ok(ValidationReport { notes })
        } else {
            Err(Error::InvalidProblem(errors))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn quadratic_kinematic_cost_by_differences() {
        let cost = CostKinematic::new(|_, u| 0.5 * (u[0] * u[0] + u[1] * u[1]));
        let p = cost.partials(&dv(&[0.1, 0.2, 0.3]), &dv(&[1.5, -0.5]));
        assert!((p.du - dv(&[1.5, -0.5])).amax() < 1e-9);
        assert!((p.hess_uu - DMatrix::identity(2, 2)).amax() < 1e-6);
        assert!(p.hess_uq.amax() < 1e-6);
        assert!(p.dq.amax() < 1e-9);
    }

    #[test]
    fn quadratic_acceleration_cost_by_differences() {
        let cost = CostDynamic::new(|_, _, a| 0.5 * a.norm_squared());
        let p = cost.partials(&dv(&[0.0; 3]), &dv(&[0.3, 0.1, -0.2]), &dv(&[1.0, 2.0, 3.0]));
        assert!((p.hess_aa - DMatrix::identity(3, 3)).amax() < 1e-6);
        assert!(p.hess_au.amax() < 1e-6);
        assert!((p.da - dv(&[1.0, 2.0, 3.0])).amax() < 1e-8);
    }

    #[test]
    fn dynamic_problem_needs_endpoint_rates() {
        let frame = QuasiFrame::new(3, 0, |_| DMatrix::identity(3, 3));
        let ocp = DynamicOcp::new(frame, CostDynamic::new(|_, _, a| 0.5 * a.norm_squared()));
        let bc = BoundaryConditions::kinematic(0.0, 1.0, &[0.0; 3], &[1.0; 3]);
        let err = ocp.validate(&bc).unwrap_err();
        assert!(matches!(&err, Error::InvalidProblem(msgs) if msgs.iter().any(|m| m == "u0_free required")));
    }
}
