use alloc::boxed::Box;
use alloc::vec::Vec;

use nalgebra::DVector;

use crate::assembly::{Layout, PhaseState, VectorField};
use crate::error::{Error, Result};

/// States on a uniform time grid, all of one layout.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub layout: Layout,
    pub n: usize,
    pub m: usize,
    pub times: Vec<f64>,
    pub states: Vec<DVector<f64>>,
}

impl Trajectory {
    pub fn new(layout: Layout, n: usize, m: usize, times: Vec<f64>, states: Vec<DVector<f64>>) -> Result<Self> {
        if times.len() != states.len() || times.len() < 2 {
            return Err(Error::dimension("trajectory state count", states.len(), times.len().max(2)));
        }
        let len = layout.state_len(n, m);
        if let Some(bad) = states.iter().find(|s| s.len() != len) {
            return Err(Error::dimension("trajectory state", bad.len(), len));
        }
        if times.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidProblem(alloc::vec![alloc::string::String::from(
                "trajectory times must be strictly increasing"
            )]));
        }
        Ok(Trajectory {
            layout,
            n,
            m,
            times,
            states,
        })
    }

    /// Number of grid points, `N + 1`.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    pub fn step_size(&self) -> f64 {
        (self.times[self.times.len() - 1] - self.times[0]) / self.steps() as f64
    }

    pub fn state(&self, i: usize) -> PhaseState {
        PhaseState::new(self.layout, self.n, self.m, self.states[i].clone()).expect("validated on construction")
    }

    pub fn final_state(&self) -> PhaseState {
        self.state(self.len() - 1)
    }

    /// One component of the state across the grid.
    pub fn component(&self, index: usize) -> Vec<f64> {
        self.states.iter().map(|s| s[index]).collect()
    }
}

/// One classical Runge-Kutta step, keeping the four stage states.
#[derive(Debug, Clone)]
pub struct Rk4Step {
    pub next: DVector<f64>,
    /// `y`, `y + h/2 k₁`, `y + h/2 k₂`, `y + h k₃`.
    pub stages: [DVector<f64>; 4],
}

pub fn rk4_step<F>(f: &F, t: f64, y: &DVector<f64>, h: f64) -> Result<Rk4Step>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>> + ?Sized,
{
    let half = 0.5 * h;
    let k1 = f(t, y)?;
    let y2 = y + &k1 * half;
    let k2 = f(t + half, &y2)?;
    let y3 = y + &k2 * half;
    let k3 = f(t + half, &y3)?;
    let y4 = y + &k3 * h;
    let k4 = f(t + h, &y4)?;
    let next = y + (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
    Ok(Rk4Step {
        next,
        stages: [y.clone(), y2, y3, y4],
    })
}

/// Classical RK4 over `steps` uniform steps. Errors carry the failing step index.
pub fn integrate_fn<F>(f: F, y0: DVector<f64>, t0: f64, t1: f64, steps: usize) -> Result<(Vec<f64>, Vec<DVector<f64>>)>
where
    F: Fn(f64, &DVector<f64>) -> Result<DVector<f64>>,
{
    assert!(steps >= 1, "at least one integration step is required");
    let h = (t1 - t0) / steps as f64;
    let mut times = Vec::with_capacity(steps + 1);
    let mut states = Vec::with_capacity(steps + 1);
    times.push(t0);
    states.push(y0);
    for k in 0..steps {
        let t = t0 + k as f64 * h;
        let step = rk4_step(&f, t, &states[k], h).map_err(|e| Error::AtStep {
            step: k,
            source: Box::new(e),
        })?;
        times.push(if k + 1 == steps { t1 } else { t0 + (k + 1) as f64 * h });
        states.push(step.next);
    }
    Ok((times, states))
}

pub fn integrate<V: VectorField + ?Sized>(
    field: &V,
    initial: &PhaseState,
    t0: f64,
    t1: f64,
    steps: usize,
) -> Result<Trajectory> {
    let (n, m) = field.dims();
    if initial.layout() != field.layout() || initial.dims() != (n, m) {
        return Err(Error::dimension(
            alloc::format!("{} initial state", field.layout()),
            initial.as_vector().len(),
            field.state_len(),
        ));
    }
    let (times, states) = integrate_fn(|t, y| field.eval(t, y), initial.as_vector().clone(), t0, t1, steps)?;
    Ok(Trajectory {
        layout: field.layout(),
        n,
        m,
        times,
        states,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_field_keeps_state() {
        let y0 = DVector::from_vec(alloc::vec![1.0, -2.0]);
        let (_, states) = integrate_fn(|_, y| Ok(DVector::zeros(y.len())), y0.clone(), 0.0, 3.0, 7).unwrap();
        assert!(states.iter().all(|s| *s == y0));
    }

    #[test]
    fn exponential_growth() {
        let (times, states) =
            integrate_fn(|_, y| Ok(y.clone()), DVector::from_element(1, 1.0), 0.0, 1.0, 100).unwrap();
        assert_eq!(times[100], 1.0);
        assert!((states[100][0] - core::f64::consts::E).abs() < 1e-8);
    }

    #[test]
    fn error_reports_step() {
        let err = integrate_fn(
            |t, y| {
                if t > 0.45 {
                    Err(Error::SingularMass {
                        what: "test",
                        condition: 1.0,
                    })
                } else {
                    Ok(y.clone())
                }
            },
            DVector::from_element(1, 1.0),
            0.0,
            1.0,
            10,
        )
        .unwrap_err();
        assert!(matches!(err, Error::AtStep { step: 4, .. }));
    }
}
