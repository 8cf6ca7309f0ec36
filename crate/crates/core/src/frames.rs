//! Quasi-velocity frames.
//!
//! A [`QuasiFrame`] is a configuration-dependent change of basis `u = Ψ(q) q̇`
//! on the tangent space. Some rows of `Ψ` are the constraint one-forms
//! `aᵅᵢ(q)`, so the constrained quasi-velocities `uᵅ` vanish on admissible
//! motions. The remaining ("free") quasi-velocities parameterise the
//! constraint distribution, whose spanning fields are the matching columns of
//! `Φ = Ψ⁻¹`.
//!
//! Non-integrability of the frame is measured by the Hamel coefficients
//!
//! ```text
//! γˢₚq = (∂Ψˢᵢ/∂qʲ − ∂Ψˢⱼ/∂qⁱ) Φⁱₚ Φʲq
//! ```
//!
//! which every assembled equation contracts against.

use alloc::sync::Arc;
use alloc::vec::Vec;
use core::fmt;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg;

pub type PsiFn = Arc<dyn Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync>;

/// `q ↦ [∂Ψ/∂q¹, …, ∂Ψ/∂qⁿ]`, entry `k` holding the n×n matrix `∂Ψʲᵢ/∂qᵏ`.
pub type PsiJacobianFn = Arc<dyn Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync>;

/// Default condition-number ceiling above which `Ψ(q)` is treated as singular.
pub const DEFAULT_CONDITION_LIMIT: f64 = 1e8;

/// Base step of the central-difference fallback for `∂Ψ/∂q`.
pub const DEFAULT_FD_STEP: f64 = 1e-5;

#[derive(Clone)]
pub struct QuasiFrame {
    n: usize,
    constrained: Vec<usize>,
    free: Vec<usize>,
    psi: PsiFn,
    psi_jacobian: Option<PsiJacobianFn>,
    fd_step: Option<f64>,
    condition_limit: f64,
}

impl fmt::Debug for QuasiFrame {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QuasiFrame")
            .field("n", &self.n)
            .field("constrained", &self.constrained)
            .field("analytic_jacobian", &self.psi_jacobian.is_some())
            .field("fd_step", &self.fd_step)
            .field("condition_limit", &self.condition_limit)
            .finish()
    }
}

impl QuasiFrame {
    /// A frame of dimension `n` whose first `m` quasi-velocities are constrained.
    pub fn new<F>(n: usize, m: usize, psi: F) -> Self
    where
        F: Fn(&DVector<f64>) -> DMatrix<f64> + Send + Sync + 'static,
    {
        assert!(n > 0, "frame dimension must be positive");
        assert!(m < n, "constraint count {m} must be below the dimension {n}");
        QuasiFrame {
            n,
            constrained: (0..m).collect(),
            free: (m..n).collect(),
            psi: Arc::new(psi),
            psi_jacobian: None,
            fd_step: None,
            condition_limit: DEFAULT_CONDITION_LIMIT,
        }
    }

    /// Declares which quasi-velocities (0-based) are the constrained ones.
    pub fn with_constrained(mut self, indices: &[usize]) -> Result<Self> {
        let mut sorted = indices.to_vec();
        sorted.sort_unstable();
        sorted.dedup();
        if sorted.len() != indices.len() || sorted.len() >= self.n || sorted.iter().any(|&i| i >= self.n) {
            return Err(Error::InvalidProblem(alloc::vec![alloc::format!(
                "constrained indices {:?} invalid for dimension {}",
                indices.iter().map(|i| i + 1).collect::<Vec<_>>(),
                self.n
            )]));
        }
        self.free = (0..self.n).filter(|i| !sorted.contains(i)).collect();
        self.constrained = sorted;
        Ok(self)
    }

    pub fn with_jacobian<F>(mut self, jac: F) -> Self
    where
        F: Fn(&DVector<f64>) -> Vec<DMatrix<f64>> + Send + Sync + 'static,
    {
        self.psi_jacobian = Some(Arc::new(jac));
        self
    }

    pub fn with_fd_step(mut self, step: f64) -> Self {
        assert!(step > 0.0, "finite-difference step must be positive");
        self.fd_step = Some(step);
        self
    }

    pub fn with_condition_limit(mut self, limit: f64) -> Self {
        self.condition_limit = limit;
        self
    }

    /// The same frame with the analytic Jacobian dropped, forcing finite differences.
    pub fn without_jacobian(&self) -> Self {
        let mut frame = self.clone();
        frame.psi_jacobian = None;
        frame
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.constrained.len()
    }

    /// Number of free (unconstrained) quasi-velocities, `n − m`.
    pub fn free_count(&self) -> usize {
        self.free.len()
    }

    pub fn constrained(&self) -> &[usize] {
        &self.constrained
    }

    pub fn free(&self) -> &[usize] {
        &self.free
    }

    pub fn has_jacobian(&self) -> bool {
        self.psi_jacobian.is_some()
    }

    pub fn condition_limit(&self) -> f64 {
        self.condition_limit
    }

    fn check_len(&self, what: &str, v: &DVector<f64>) {
        assert_eq!(v.len(), self.n, "{what} has length {}, expected {}", v.len(), self.n);
    }

    pub fn psi(&self, q: &DVector<f64>) -> DMatrix<f64> {
        self.check_len("q", q);
        (self.psi)(q)
    }

    /// Evaluates `Ψ(q)` and its inverse, rejecting near-singular charts.
    pub fn point(&self, q: &DVector<f64>) -> Result<FramePoint> {
        let psi = self.psi(q);
        let singular = |condition| Error::SingularFrame {
            q: q.iter().copied().collect(),
            condition,
            limit: self.condition_limit,
        };
        let (phi, condition) = linalg::inverse_with_condition(&psi).ok_or_else(|| singular(f64::INFINITY))?;
        if condition > self.condition_limit {
            return Err(singular(condition));
        }
        Ok(FramePoint {
            psi,
            phi,
            condition,
            gamma: None,
        })
    }

    /// Like [`QuasiFrame::point`] but also assembles the Hamel tensor.
    pub fn point_with_hamel(&self, q: &DVector<f64>) -> Result<FramePoint> {
        let mut point = self.point(q)?;
        let dpsi = self.psi_jacobian(q);
        point.gamma = Some(HamelTensor::assemble(&dpsi, &point.phi));
        Ok(point)
    }

    pub fn phi_at(&self, q: &DVector<f64>) -> Result<DMatrix<f64>> {
        Ok(self.point(q)?.phi)
    }

    pub fn hamel_at(&self, q: &DVector<f64>) -> Result<HamelTensor> {
        Ok(self.point_with_hamel(q)?.gamma.expect("assembled above"))
    }

    /// `∂Ψ/∂qᵏ` for every k, analytic when supplied, central differences otherwise.
    pub fn psi_jacobian(&self, q: &DVector<f64>) -> Vec<DMatrix<f64>> {
        self.check_len("q", q);
        if let Some(jac) = &self.psi_jacobian {
            return jac(q);
        }
        let base = self
            .fd_step
            .unwrap_or_else(|| DEFAULT_FD_STEP * linalg::norm_inf(q.as_slice()).max(1.0));
        let mut qp = q.clone();
        (0..self.n)
            .map(|k| {
                qp[k] = q[k] + base;
                let plus = (self.psi)(&qp);
                qp[k] = q[k] - base;
                let minus = (self.psi)(&qp);
                qp[k] = q[k];
                (plus - minus) / (2.0 * base)
            })
            .collect()
    }

    /// `u = Ψ(q) q̇`.
    pub fn to_quasi(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> DVector<f64> {
        self.check_len("q̇", qdot);
        self.psi(q) * qdot
    }

    /// `q̇ = Φ(q) u`.
    pub fn from_quasi(&self, q: &DVector<f64>, u: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_len("u", u);
        Ok(self.point(q)?.phi * u)
    }

    /// The constrained components of `Ψ(q) q̇`, in the frame's constraint order.
    pub fn constraint_residual(&self, q: &DVector<f64>, qdot: &DVector<f64>) -> DVector<f64> {
        let u = self.to_quasi(q, qdot);
        DVector::from_iterator(self.m(), self.constrained.iter().map(|&i| u[i]))
    }

    /// Embeds free quasi-components into a full n-vector with zeros in the constrained slots.
    pub fn scatter_free(&self, free: &[f64]) -> DVector<f64> {
        assert_eq!(free.len(), self.free.len(), "free vector length");
        let mut full = DVector::zeros(self.n);
        for (&i, &v) in self.free.iter().zip(free) {
            full[i] = v;
        }
        full
    }

    pub fn gather_free(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.free.len(), self.free.iter().map(|&i| full[i]))
    }

    pub fn gather_constrained(&self, full: &DVector<f64>) -> DVector<f64> {
        DVector::from_iterator(self.m(), self.constrained.iter().map(|&i| full[i]))
    }

    /// Builds the full n-vector whose free slots hold `free` and constrained slots `constrained`.
    pub fn interleave(&self, free: &[f64], constrained: &[f64]) -> DVector<f64> {
        let mut full = self.scatter_free(free);
        for (&i, &v) in self.constrained.iter().zip(constrained) {
            full[i] = v;
        }
        full
    }
}

/// `Ψ`, `Φ` (and optionally `γ`) at one configuration, shared by every term
/// of a single right-hand-side evaluation.
#[derive(Debug, Clone)]
pub struct FramePoint {
    pub psi: DMatrix<f64>,
    pub phi: DMatrix<f64>,
    pub condition: f64,
    pub gamma: Option<HamelTensor>,
}

impl FramePoint {
    pub fn gamma(&self) -> &HamelTensor {
        self.gamma.as_ref().expect("frame point evaluated without Hamel tensor")
    }

    /// `∂F/∂θⁱ = ∂F/∂qʲ Φʲᵢ`, the pull-back of a configuration gradient.
    pub fn pull_back(&self, grad_q: &DVector<f64>) -> DVector<f64> {
        self.phi.tr_mul(grad_q)
    }
}

/// The Hamel coefficients `γˢₚq` at one configuration, stored `[s][p][q]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HamelTensor {
    n: usize,
    data: Vec<f64>,
}

impl HamelTensor {
    pub fn zeros(n: usize) -> Self {
        HamelTensor {
            n,
            data: alloc::vec![0.0; n * n * n],
        }
    }

    fn assemble(dpsi: &[DMatrix<f64>], phi: &DMatrix<f64>) -> Self {
        let n = phi.nrows();
        let mut gamma = HamelTensor::zeros(n);
        let mut curl = DMatrix::zeros(n, n);
        for s in 0..n {
            for i in 0..n {
                for j in 0..n {
                    curl[(i, j)] = dpsi[j][(s, i)] - dpsi[i][(s, j)];
                }
            }
            let g = phi.transpose() * &curl * phi;
            for p in 0..n {
                for q in 0..n {
                    let anti = 0.5 * (g[(p, q)] - g[(q, p)]);
                    gamma.set(s, p, q, anti);
                }
            }
        }
        gamma
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline]
    pub fn get(&self, s: usize, p: usize, q: usize) -> f64 {
        self.data[(s * self.n + p) * self.n + q]
    }

    #[inline]
    pub fn set(&mut self, s: usize, p: usize, q: usize, value: f64) {
        let n = self.n;
        self.data[(s * n + p) * n + q] = value;
    }

    /// Sets `γˢₚq = value` and `γˢqₚ = −value`.
    pub fn set_antisymmetric(&mut self, s: usize, p: usize, q: usize, value: f64) {
        self.set(s, p, q, value);
        self.set(s, q, p, -value);
    }

    /// `Fᵢ = wⱼ γʲₛᵢ uˢ`, the contraction appearing in every Boltzmann-Hamel equation.
    pub fn contract(&self, weights: &DVector<f64>, u: &DVector<f64>) -> DVector<f64> {
        let n = self.n;
        let mut out = DVector::zeros(n);
        for j in 0..n {
            let w = weights[j];
            if w == 0.0 {
                continue;
            }
            for s in 0..n {
                let us = u[s];
                if us == 0.0 {
                    continue;
                }
                for i in 0..n {
                    out[i] += w * self.get(j, s, i) * us;
                }
            }
        }
        out
    }

    /// `max |γˢₚq + γˢqₚ|`.
    pub fn antisymmetry_defect(&self) -> f64 {
        let n = self.n;
        let mut worst: f64 = 0.0;
        for s in 0..n {
            for p in 0..n {
                for q in 0..n {
                    worst = worst.max((self.get(s, p, q) + self.get(s, q, p)).abs());
                }
            }
        }
        worst
    }

    pub fn max_abs_diff(&self, other: &HamelTensor) -> f64 {
        linalg::max_abs_diff(&self.data, &other.data)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heisenberg() -> QuasiFrame {
        QuasiFrame::new(3, 1, |q| {
            DMatrix::from_row_slice(3, 3, &[q[1], -q[0], -1.0, 1.0, 0.0, 0.0, 0.0, 1.0, 0.0])
        })
    }

    fn dv(v: &[f64]) -> DVector<f64> {
        DVector::from_column_slice(v)
    }

    #[test]
    fn identity_frame_has_identity_inverse_and_no_hamel() {
        let frame = QuasiFrame::new(4, 1, |_| DMatrix::identity(4, 4));
        let q = dv(&[0.3, -1.0, 2.0, 0.1]);
        assert_eq!(frame.phi_at(&q).unwrap(), DMatrix::identity(4, 4));
        assert!(frame.hamel_at(&q).unwrap().as_slice().iter().all(|&g| g == 0.0));
    }

    #[test]
    fn heisenberg_inverse_rows() {
        let q = dv(&[0.7, -1.3, 2.0]);
        let phi = heisenberg().phi_at(&q).unwrap();
        let expected = DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, -1.0, q[1], -q[0]]);
        assert!((phi - expected).amax() < 1e-14);
    }

    #[test]
    fn heisenberg_hamel_by_finite_differences() {
        let gamma = heisenberg().hamel_at(&dv(&[1.0, 2.0, 3.0])).unwrap();
        for s in 0..3 {
            for p in 0..3 {
                for q in 0..3 {
                    let expected = match (s, p, q) {
                        (0, 1, 2) => 2.0,
                        (0, 2, 1) => -2.0,
                        _ => 0.0,
                    };
                    assert!((gamma.get(s, p, q) - expected).abs() < 1e-8, "γ[{s}][{p}][{q}]");
                }
            }
        }
        assert_eq!(gamma.antisymmetry_defect(), 0.0);
    }

    #[test]
    fn quasi_round_trip_and_constraint_residual() {
        let frame = heisenberg();
        let u = frame.to_quasi(&dv(&[0.0, 0.0, 0.0]), &dv(&[1.0, 1.0, 0.0]));
        assert_eq!(u, dv(&[0.0, 1.0, 1.0]));
        let r = frame.constraint_residual(&dv(&[1.0, 0.0, 0.0]), &dv(&[0.0, 1.0, 0.0]));
        assert_eq!(r, dv(&[-1.0]));
        let q = dv(&[0.4, 0.1, -0.2]);
        let qdot = frame.from_quasi(&q, &dv(&[0.0, 0.5, -0.25])).unwrap();
        assert!(frame.constraint_residual(&q, &qdot).amax() < 1e-12);
    }

    #[test]
    fn singular_psi_is_reported() {
        let frame = QuasiFrame::new(2, 0, |q| DMatrix::from_row_slice(2, 2, &[q[0], 0.0, 0.0, 1.0]));
        let err = frame.point(&dv(&[0.0, 0.0])).unwrap_err();
        assert!(matches!(err, Error::SingularFrame { .. }));
        let err = frame.point(&dv(&[1e-9, 0.0])).unwrap_err();
        assert!(matches!(err, Error::SingularFrame { condition, .. } if condition > 1e8));
        assert!(frame.point(&dv(&[1e-3, 0.0])).is_ok());
    }

    #[test]
    fn constrained_index_selection() {
        let frame = QuasiFrame::new(5, 2, |_| DMatrix::identity(5, 5)).with_constrained(&[3, 4]).unwrap();
        assert_eq!(frame.free(), &[0, 1, 2]);
        assert_eq!(frame.interleave(&[1.0, 2.0, 3.0], &[4.0, 5.0]), dv(&[1.0, 2.0, 3.0, 4.0, 5.0]));
        assert!(QuasiFrame::new(3, 1, |_| DMatrix::identity(3, 3)).with_constrained(&[0, 0]).is_err());
    }
}
