//! Small dense helpers shared by the frame, assembly and solver modules.
//!
//! All matrices here are tiny (n ≤ a dozen), so inverses are formed
//! explicitly and condition numbers are measured exactly in the 1-norm.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Condition limit for the Hessians and mass matrices solved during assembly.
pub const MASS_CONDITION_LIMIT: f64 = 1e12;

pub fn norm1(a: &DMatrix<f64>) -> f64 {
    a.column_iter()
        .map(|c| c.iter().map(|x| x.abs()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub fn norm_inf(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |acc, x| acc.max(x.abs()))
}

pub fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .fold(0.0, |acc, (x, y)| acc.max((x - y).abs()))
}

/// Returns `(A⁻¹, ‖A‖₁‖A⁻¹‖₁)`, or `None` when LU factorisation breaks down.
pub fn inverse_with_condition(a: &DMatrix<f64>) -> Option<(DMatrix<f64>, f64)> {
    let inv = a.clone().lu().try_inverse()?;
    let cond = norm1(a) * norm1(&inv);
    if cond.is_finite() {
        Some((inv, cond))
    } else {
        None
    }
}

/// Solves `A x = b` for the implicit blocks of the assembled equations.
pub fn solve_checked(a: &DMatrix<f64>, b: &DVector<f64>, what: &'static str) -> Result<DVector<f64>> {
    match inverse_with_condition(a) {
        Some((inv, cond)) if cond <= MASS_CONDITION_LIMIT => Ok(inv * b),
        Some((_, cond)) => Err(Error::SingularMass { what, condition: cond }),
        None => Err(Error::SingularMass {
            what,
            condition: f64::INFINITY,
        }),
    }
}

pub fn is_symmetric(a: &DMatrix<f64>, tol: f64) -> bool {
    a.is_square() && (a - a.transpose()).iter().all(|x| x.abs() <= tol * (1.0 + norm1(a)))
}

pub fn is_spd(a: &DMatrix<f64>) -> bool {
    is_symmetric(a, 1e-8) && a.clone().cholesky().is_some()
}

#[inline]
pub(crate) fn fd_step(base: f64, x: f64) -> f64 {
    base * x.abs().max(1.0)
}

pub fn central_gradient<F>(f: F, x: &DVector<f64>, base: f64) -> DVector<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let mut g = DVector::zeros(x.len());
    let mut xp = x.clone();
    for i in 0..x.len() {
        let h = fd_step(base, x[i]);
        xp[i] = x[i] + h;
        let fp = f(&xp);
        xp[i] = x[i] - h;
        let fm = f(&xp);
        xp[i] = x[i];
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

pub fn central_jacobian<F>(f: F, x: &DVector<f64>, rows: usize, base: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = fd_step(base, x[j]);
        xp[j] = x[j] + h;
        let fp = f(&xp);
        xp[j] = x[j] - h;
        let fm = f(&xp);
        xp[j] = x[j];
        jac.set_column(j, &((fp - fm) / (2.0 * h)));
    }
    jac
}

/// Fourth-order (five-point) central-difference Jacobian.
///
/// Exact up to round-off for polynomials of degree ≤ 4.
pub fn five_point_jacobian<F>(f: F, x: &DVector<f64>, rows: usize, base: f64) -> Result<DMatrix<f64>>
where
    F: Fn(&DVector<f64>) -> Result<DVector<f64>>,
{
    let mut jac = DMatrix::zeros(rows, x.len());
    let mut xp = x.clone();
    for j in 0..x.len() {
        let h = fd_step(base, x[j]);
        let mut eval = |offset: f64| -> Result<DVector<f64>> {
            xp[j] = x[j] + offset;
            let v = f(&xp);
            xp[j] = x[j];
            v
        };
        let p2 = eval(2.0 * h)?;
        let p1 = eval(h)?;
        let m1 = eval(-h)?;
        let m2 = eval(-2.0 * h)?;
        let col = (m2 - p2 + (p1 - m1) * 8.0) / (12.0 * h);
        jac.set_column(j, &col);
    }
    Ok(jac)
}

/// Second-difference Hessian of a scalar function, used only when no
/// gradient supplier is available.
pub fn central_hessian<F>(f: F, x: &DVector<f64>, base: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>) -> f64,
{
    let n = x.len();
    let mut hess = DMatrix::zeros(n, n);
    let mut xp = x.clone();
    for i in 0..n {
        let hi = fd_step(base, x[i]);
        for j in i..n {
            let hj = fd_step(base, x[j]);
            let mut eval = |di: f64, dj: f64| {
                xp[i] += di;
                xp[j] += dj;
                let v = f(&xp);
                xp[i] = x[i];
                xp[j] = x[j];
                v
            };
            let v = (eval(hi, hj) - eval(hi, -hj) - eval(-hi, hj) + eval(-hi, -hj)) / (4.0 * hi * hj);
            hess[(i, j)] = v;
            hess[(j, i)] = v;
        }
    }
    hess
}

/// Mixed second differences `∂²f/∂x∂y` of a scalar function of two vectors.
pub fn central_mixed<F>(f: F, x: &DVector<f64>, y: &DVector<f64>, base: f64) -> DMatrix<f64>
where
    F: Fn(&DVector<f64>, &DVector<f64>) -> f64,
{
    let mut out = DMatrix::zeros(x.len(), y.len());
    let mut xp = x.clone();
    let mut yp = y.clone();
    for i in 0..x.len() {
        let hi = fd_step(base, x[i]);
        for j in 0..y.len() {
            let hj = fd_step(base, y[j]);
            let mut eval = |di: f64, dj: f64| {
                xp[i] = x[i] + di;
                yp[j] = y[j] + dj;
                let v = f(&xp, &yp);
                xp[i] = x[i];
                yp[j] = y[j];
                v
            };
            out[(i, j)] =
                (eval(hi, hj) - eval(hi, -hj) - eval(-hi, hj) + eval(-hi, -hj)) / (4.0 * hi * hj);
        }
    }
    out
}

pub fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn five_point_is_exact_on_quartics() {
        let f = |x: &DVector<f64>| Ok(DVector::from_vec(alloc::vec![x[0].powi(4) - 3.0 * x[0] * x[1].powi(3)]));
        let x = DVector::from_vec(alloc::vec![1.3, -0.7]);
        let jac = five_point_jacobian(f, &x, 1, 1e-3).unwrap();
        assert!((jac[(0, 0)] - (4.0 * 1.3f64.powi(3) - 3.0 * (-0.7f64).powi(3))).abs() < 1e-10);
        assert!((jac[(0, 1)] - (-9.0 * 1.3 * 0.49)).abs() < 1e-10);
    }

    #[test]
    fn condition_of_identity_is_one() {
        let (inv, cond) = inverse_with_condition(&DMatrix::identity(4, 4)).unwrap();
        assert_eq!(inv, DMatrix::identity(4, 4));
        assert_eq!(cond, 1.0);
    }

    #[test]
    fn singular_matrix_is_rejected() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        let err = solve_checked(&a, &DVector::from_vec(alloc::vec![1.0, 1.0]), "test matrix").unwrap_err();
        assert!(matches!(err, Error::SingularMass { .. }));
    }

    #[test]
    fn hessian_of_quadratic() {
        let f = |x: &DVector<f64>| 0.5 * x[0] * x[0] + 2.0 * x[0] * x[1] - x[1] * x[1];
        let h = central_hessian(f, &DVector::from_vec(alloc::vec![0.3, 0.4]), 1e-4);
        assert!((h[(0, 0)] - 1.0).abs() < 1e-6);
        assert!((h[(0, 1)] - 2.0).abs() < 1e-6);
        assert!((h[(1, 1)] + 2.0).abs() < 1e-6);
    }
}
