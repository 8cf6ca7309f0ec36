//! Verification harness: frame consistency, oracle right-hand-side
//! comparison, invariant monitors and a numerical stationarity probe for
//! converged optimal-control solutions.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{Layout, PhaseState, VectorField};
use crate::error::{Error, Result};
use crate::frames::QuasiFrame;
use crate::linalg;
use crate::models::BuiltinModel;
use crate::problems::{BoundaryConditions, DynamicOcp, KinematicOcp};
use crate::solvers::{self, rk4_step, OptimalControl, ShootingConfig, ShootingSolution, Trajectory};

pub const DEFAULT_SEED: u64 = 0xB01;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub max_abs_error: f64,
    pub threshold: f64,
    pub pass: bool,
    pub samples: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl Check {
    pub fn new(name: impl Into<String>, max_abs_error: f64, threshold: f64, samples: usize) -> Self {
        Check {
            name: name.into(),
            max_abs_error,
            threshold,
            pass: max_abs_error <= threshold,
            samples,
            note: None,
        }
    }

    /// A check that could not be carried out.
    pub fn failed(name: impl Into<String>, samples: usize, note: impl Into<String>) -> Self {
        Check {
            name: name.into(),
            max_abs_error: f64::INFINITY,
            threshold: 0.0,
            pass: false,
            samples,
            note: Some(note.into()),
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub subject: String,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl VerificationReport {
    pub fn new(subject: impl Into<String>, seed: u64) -> Self {
        VerificationReport {
            subject: subject.into(),
            seed,
            checks: Vec::new(),
        }
    }

    pub fn push(&mut self, check: Check) {
        self.checks.push(check);
    }

    /// Appends another report's checks, prefixing their names with its subject.
    pub fn absorb(&mut self, other: VerificationReport) {
        for mut c in other.checks {
            c.name = format!("{}: {}", other.subject, c.name);
            self.checks.push(c);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.name == name)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Thresholds {
    /// `ΨΦ − I`, antisymmetry, and analytic Hamel coefficients against listed ones.
    pub frame: f64,
    /// Finite-difference Hamel coefficients against analytic or listed ones.
    pub hamel_fd: f64,
    /// Generic against reference right-hand sides, optimal-control layouts.
    pub rhs: f64,
    /// Generic against reference right-hand sides, mechanics layout.
    pub mechanics: f64,
    /// Drift of quantities the integrator preserves exactly (multipliers).
    pub exact_invariant: f64,
    /// Drift per unit time of nonlinear first integrals.
    pub first_integral: f64,
    /// `Ψ_constrained q̇` along trajectories.
    pub constraint: f64,
    /// Most negative admissible cost change under the stationarity probe.
    pub stationarity: f64,
    /// Terminal residual of a solved scenario.
    pub boundary: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            frame: 1e-10,
            hamel_fd: 1e-6,
            rhs: 1e-8,
            mechanics: 1e-10,
            exact_invariant: 1e-10,
            first_integral: 1e-6,
            constraint: 1e-8,
            stationarity: 1e-8,
            boundary: 1e-6,
        }
    }
}

fn sample_box<R: Rng>(rng: &mut R, bounds: &[(f64, f64)]) -> DVector<f64> {
    DVector::from_iterator(bounds.len(), bounds.iter().map(|&(lo, hi)| if hi > lo { rng.gen_range(lo..hi) } else { lo }))
}

/// `ΨΦ − I`, antisymmetry of `γ`, and analytic-against-difference `γ` over
/// random points of `bounds`. Singular points are recorded, not raised.
pub fn check_frame(
    frame: &QuasiFrame,
    bounds: &[(f64, f64)],
    count: usize,
    seed: u64,
    thresholds: &Thresholds,
) -> VerificationReport {
    let mut report = VerificationReport::new("frame", seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fd_frame = frame.without_jacobian();
    let (mut inverse, mut antisym, mut fd) = (0.0f64, 0.0f64, 0.0f64);
    let mut singular = Vec::new();
    for _ in 0..count {
        let q = sample_box(&mut rng, bounds);
        let point = match frame.point_with_hamel(&q) {
            Ok(p) => p,
            Err(e) => {
                singular.push(e.to_string());
                continue;
            }
        };
        let eye = DMatrix::<f64>::identity(frame.n(), frame.n());
        inverse = inverse.max((&point.psi * &point.phi - eye).amax());
        antisym = antisym.max(point.gamma().antisymmetry_defect());
        if frame.has_jacobian() {
            match fd_frame.hamel_at(&q) {
                Ok(g) => fd = fd.max(g.max_abs_diff(point.gamma())),
                Err(e) => singular.push(e.to_string()),
            }
        }
    }
    let valid = count - singular.len();
    report.push(match singular.first() {
        None => Check::new("chart", 0.0, 0.0, count),
        Some(first) => Check::failed("chart", count, format!("{} singular samples; first: {first}", singular.len())),
    });
    report.push(Check::new("inverse", inverse, thresholds.frame, valid));
    report.push(Check::new("antisymmetry", antisym, thresholds.frame, valid));
    if frame.has_jacobian() {
        report.push(Check::new("hamel fd vs analytic", fd, thresholds.hamel_fd, valid));
    }
    report
}

/// Analytic and difference Hamel coefficients against the hand-listed ones.
pub fn check_listed_hamel(model: &BuiltinModel, count: usize, seed: u64, thresholds: &Thresholds) -> VerificationReport {
    let mut report = VerificationReport::new(model.name, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let fd_frame = model.frame.without_jacobian();
    let (mut analytic, mut fd) = (0.0f64, 0.0f64);
    for _ in 0..count {
        let q = model.sample_q(&mut rng);
        let listed = model.listed_hamel(&q);
        match (model.frame.hamel_at(&q), fd_frame.hamel_at(&q)) {
            (Ok(a), Ok(f)) => {
                analytic = analytic.max(a.max_abs_diff(&listed));
                fd = fd.max(f.max_abs_diff(&listed));
            }
            (Err(e), _) | (_, Err(e)) => {
                report.push(Check::failed("listed hamel", count, e.to_string()));
                return report;
            }
        }
    }
    report.push(Check::new("listed hamel (analytic)", analytic, thresholds.frame, count));
    report.push(Check::new("listed hamel (fd)", fd, thresholds.hamel_fd, count));
    report
}

/// Largest `|generic − reference|` over random states of one layout. The
/// mechanics layout is also driven by random controls.
pub fn compare_rhs(
    model: &BuiltinModel,
    layout: Layout,
    count: usize,
    seed: u64,
    thresholds: &Thresholds,
) -> Result<VerificationReport> {
    let name = format!("{layout} rhs");
    let mut report = VerificationReport::new(model.name, seed);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    let threshold = if layout == Layout::Mechanics {
        thresholds.mechanics
    } else {
        thresholds.rhs
    };
    for _ in 0..count {
        let state = model.sample_state(layout, &mut rng);
        let y = state.as_vector();
        let (generic, reference) = match layout {
            Layout::Mechanics => {
                let system = model.mechanical.as_ref().ok_or_else(|| unsupported(model, layout))?;
                let controls = DVector::from_fn(model.frame.free_count(), |_, _| rng.gen_range(-1.0..1.0));
                let forces = |_t: f64| controls.clone();
                let field = crate::assembly::ForcedMechanics { system, forces: &forces };
                (field.eval(0.0, y)?, model.reference_forced(&state, &controls)?)
            }
            Layout::KinematicOc => {
                let ocp = model.kinematic.as_ref().ok_or_else(|| unsupported(model, layout))?;
                (ocp.eval(0.0, y)?, model.reference_rhs(layout, &state)?)
            }
            Layout::DynamicOc => {
                let ocp = model.dynamic.as_ref().ok_or_else(|| unsupported(model, layout))?;
                (ocp.eval(0.0, y)?, model.reference_rhs(layout, &state)?)
            }
        };
        worst = worst.max(linalg::max_abs_diff(generic.as_slice(), reference.as_slice()));
    }
    report.push(Check::new(name, worst, threshold, count));
    Ok(report)
}

fn unsupported(model: &BuiltinModel, layout: Layout) -> Error {
    Error::UnsupportedLayout {
        model: model.name.to_string(),
        layout,
    }
}

/// Drift of the model's invariants and of the constraint residual along a
/// trajectory.
pub fn monitor(model: &BuiltinModel, trajectory: &Trajectory, thresholds: &Thresholds) -> VerificationReport {
    let mut report = VerificationReport::new(model.name, 0);
    let samples = trajectory.len();
    let duration = (trajectory.times[samples - 1] - trajectory.times[0]).abs().max(1.0);
    let first = trajectory.state(0);
    let reference = model.invariants(&first);
    let mut drift = alloc::vec![0.0f64; reference.len()];
    let mut constraint = 0.0f64;
    let frame = &model.frame;
    for i in 0..samples {
        let state = trajectory.state(i);
        for (k, (_, value)) in model.invariants(&state).iter().enumerate() {
            drift[k] = drift[k].max(linalg::max_abs_diff(value.as_slice(), reference[k].1.as_slice()));
        }
        if frame.m() > 0 {
            let q = state.q();
            match frame.from_quasi(&q, &frame.scatter_free(state.u_free().as_slice())) {
                Ok(qdot) => {
                    let r = frame.constraint_residual(&q, &qdot);
                    constraint = constraint.max(r.amax());
                }
                Err(_) => constraint = f64::INFINITY,
            }
        }
    }
    for ((name, _), d) in reference.iter().zip(drift) {
        let check = if *name == "multipliers" {
            Check::new(*name, d, thresholds.exact_invariant, samples)
        } else {
            Check::new(*name, d / duration, thresholds.first_integral, samples).with_note("drift per unit time")
        };
        report.push(check);
    }
    if frame.m() > 0 {
        report.push(Check::new("constraint residual", constraint, thresholds.constraint, samples));
    }
    report
}

/// The reduced control system used to build admissible competitors.
///
/// Kinematic problems are driven by their free quasi-velocities, dynamic
/// problems by their free quasi-accelerations.
pub trait Competitor: OptimalControl {
    /// The control carried by an optimal-control state.
    fn control_of(&self, state: &PhaseState) -> DVector<f64>;
    fn competitor_initial(&self, bc: &BoundaryConditions) -> DVector<f64>;
    fn competitor_rhs(&self, y: &DVector<f64>, control: &DVector<f64>) -> Result<DVector<f64>>;
    fn competitor_residual(&self, bc: &BoundaryConditions, y: &DVector<f64>) -> DVector<f64>;
    fn competitor_cost(&self, y: &DVector<f64>, control: &DVector<f64>) -> f64;
}

impl Competitor for KinematicOcp {
    fn control_of(&self, state: &PhaseState) -> DVector<f64> {
        state.u_free()
    }

    fn competitor_initial(&self, bc: &BoundaryConditions) -> DVector<f64> {
        bc.q0.clone()
    }

    fn competitor_rhs(&self, y: &DVector<f64>, control: &DVector<f64>) -> Result<DVector<f64>> {
        self.frame.from_quasi(y, &self.frame.scatter_free(control.as_slice()))
    }

    fn competitor_residual(&self, bc: &BoundaryConditions, y: &DVector<f64>) -> DVector<f64> {
        y - &bc.q1
    }

    fn competitor_cost(&self, y: &DVector<f64>, control: &DVector<f64>) -> f64 {
        self.cost.eval(y, control)
    }
}

impl Competitor for DynamicOcp {
    fn control_of(&self, state: &PhaseState) -> DVector<f64> {
        state.a().expect("dynamic layout")
    }

    fn competitor_initial(&self, bc: &BoundaryConditions) -> DVector<f64> {
        let f = self.frame.free_count();
        let zeros = DVector::zeros(f);
        let u0 = bc.u0_free.as_ref().unwrap_or(&zeros);
        DVector::from_iterator(bc.q0.len() + f, bc.q0.iter().chain(u0.iter()).copied())
    }

    fn competitor_rhs(&self, y: &DVector<f64>, control: &DVector<f64>) -> Result<DVector<f64>> {
        let n = self.frame.n();
        let q = y.rows(0, n).into_owned();
        let u = &y.as_slice()[n..];
        let qdot = self.frame.from_quasi(&q, &self.frame.scatter_free(u))?;
        Ok(DVector::from_iterator(y.len(), qdot.iter().chain(control.iter()).copied()))
    }

    fn competitor_residual(&self, bc: &BoundaryConditions, y: &DVector<f64>) -> DVector<f64> {
        let f = self.frame.free_count();
        let zeros = DVector::zeros(f);
        let u1 = bc.u1_free.as_ref().unwrap_or(&zeros);
        let target = DVector::from_iterator(y.len(), bc.q1.iter().chain(u1.iter()).copied());
        y - target
    }

    fn competitor_cost(&self, y: &DVector<f64>, control: &DVector<f64>) -> f64 {
        let n = self.frame.n();
        self.cost.eval(&y.rows(0, n).into_owned(), &y.rows(n, y.len() - n).into_owned(), control)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ProbeConfig {
    pub probes: usize,
    /// Norm of the random perturbation of the shooting unknowns.
    pub radius: f64,
    pub seed: u64,
    pub threshold: f64,
    /// Terminal mismatch at which re-matching a competitor stops.
    pub match_tol: f64,
    /// Largest terminal mismatch of an accepted competitor.
    pub accept_tol: f64,
    pub max_match_iters: usize,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            probes: 20,
            radius: 1e-3,
            seed: DEFAULT_SEED,
            threshold: 1e-8,
            match_tol: 1e-12,
            accept_tol: 1e-9,
            max_match_iters: 30,
        }
    }
}

/// Controls at the four stage points of every RK4 step of an
/// optimal-control trajectory started from `unknowns`.
fn stage_controls<P: Competitor + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    unknowns: &DVector<f64>,
    steps: usize,
) -> Result<Vec<[DVector<f64>; 4]>> {
    let (n, m) = problem.dims();
    let mut y = problem.initial_state(bc, unknowns)?.into_vector();
    let h = (bc.t1 - bc.t0) / steps as f64;
    let f = |t: f64, y: &DVector<f64>| problem.eval(t, y);
    let mut out = Vec::with_capacity(steps);
    for k in 0..steps {
        let step = rk4_step(&f, bc.t0 + k as f64 * h, &y, h)?;
        let controls = step.stages.each_ref().map(|s| {
            let state = PhaseState::new(problem.layout(), n, m, s.clone()).expect("state length");
            problem.control_of(&state)
        });
        out.push(controls);
        y = step.next;
    }
    Ok(out)
}

struct Basis {
    /// `(control component, sine mode)` per coefficient.
    terms: Vec<(usize, usize)>,
}

impl Basis {
    fn new(controls: usize, residual_len: usize) -> Self {
        let modes = residual_len.div_ceil(controls) + 1;
        Basis {
            terms: (0..modes).flat_map(|l| (0..controls).map(move |i| (i, l))).collect(),
        }
    }

    fn len(&self) -> usize {
        self.terms.len()
    }

    /// `Σ εₖ sin((l+1)π s) eᵢ` at normalised time `s`.
    fn eval(&self, eps: &DVector<f64>, s: f64, controls: usize) -> DVector<f64> {
        let mut v = DVector::zeros(controls);
        for (k, &(i, l)) in self.terms.iter().enumerate() {
            v[i] += eps[k] * libm::sin((l + 1) as f64 * core::f64::consts::PI * s);
        }
        v
    }
}

struct CompetitorRun {
    residual: DVector<f64>,
    cost: f64,
}

fn run_competitor<P: Competitor + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    stages: &[[DVector<f64>; 4]],
    basis: &Basis,
    eps: &DVector<f64>,
) -> Result<CompetitorRun> {
    let steps = stages.len();
    let duration = bc.t1 - bc.t0;
    let h = duration / steps as f64;
    let controls = stages[0][0].len();
    let offsets = [0.0, 0.5, 0.5, 1.0];
    let mut y = problem.competitor_initial(bc);
    let mut integrand = Vec::with_capacity(steps + 1);
    for (k, stage) in stages.iter().enumerate() {
        let c: [DVector<f64>; 4] = core::array::from_fn(|i| {
            let s = (k as f64 + offsets[i]) / steps as f64;
            &stage[i] + basis.eval(eps, s, controls)
        });
        integrand.push(problem.competitor_cost(&y, &c[0]));
        let k1 = problem.competitor_rhs(&y, &c[0])?;
        let k2 = problem.competitor_rhs(&(&y + &k1 * (0.5 * h)), &c[1])?;
        let k3 = problem.competitor_rhs(&(&y + &k2 * (0.5 * h)), &c[2])?;
        let k4 = problem.competitor_rhs(&(&y + &k3 * h), &c[3])?;
        y += (k1 + (k2 + k3) * 2.0 + k4) * (h / 6.0);
    }
    // the control at the final grid point is the last step's end stage
    let last = &stages[steps - 1][3] + basis.eval(eps, 1.0, controls);
    integrand.push(problem.competitor_cost(&y, &last));
    Ok(CompetitorRun {
        residual: problem.competitor_residual(bc, &y),
        cost: solvers::simpson(&integrand, h),
    })
}

/// Gauss-Newton on the basis coefficients until the competitor meets the
/// terminal conditions; returns its cost. Near straight-line motions some
/// endpoint directions are only reachable at second order and the iteration
/// slows to linear convergence, so the best iterate is accepted once it is
/// within `accept_tol`.
fn matched_cost<P: Competitor + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    stages: &[[DVector<f64>; 4]],
    basis: &Basis,
    config: &ProbeConfig,
) -> Result<f64> {
    let mut eps = DVector::zeros(basis.len());
    let mut run = run_competitor(problem, bc, stages, basis, &eps)?;
    let mut best = (linalg::norm_inf(run.residual.as_slice()), run.cost);
    for _ in 0..config.max_match_iters {
        if best.0 <= config.match_tol {
            break;
        }
        let rows = run.residual.len();
        let mut jac = DMatrix::zeros(rows, basis.len());
        let h = 1e-6;
        for j in 0..basis.len() {
            let mut plus = eps.clone();
            plus[j] += h;
            let mut minus = eps.clone();
            minus[j] -= h;
            let rp = run_competitor(problem, bc, stages, basis, &plus)?.residual;
            let rm = run_competitor(problem, bc, stages, basis, &minus)?.residual;
            jac.set_column(j, &((rp - rm) / (2.0 * h)));
        }
        let step = jac
            .svd(true, true)
            .solve(&run.residual, 1e-12)
            .map_err(|_| Error::SingularJacobian { sigma_max: 0.0 })?;
        eps -= step;
        run = run_competitor(problem, bc, stages, basis, &eps)?;
        let norm = linalg::norm_inf(run.residual.as_slice());
        if norm < best.0 {
            best = (norm, run.cost);
        }
    }
    if best.0 <= config.accept_tol {
        Ok(best.1)
    } else {
        Err(Error::NoConvergence {
            iterations: config.max_match_iters,
            best_residual: best.0,
            best_unknowns: eps.iter().copied().collect(),
        })
    }
}

/// Compares the cost of a converged solution against admissible neighbours.
///
/// Each probe perturbs the shooting unknowns, integrates the optimal-control
/// flow to obtain a nearby control history, and then corrects that control
/// with a small sine series until the reduced system meets the boundary
/// conditions again. A local minimum never loses against such competitors.
/// The baseline is the unperturbed solution passed through the same
/// matching, so both sides share one discretisation.
pub fn stationarity_probe<P: Competitor + ?Sized>(
    problem: &P,
    bc: &BoundaryConditions,
    solution: &ShootingSolution,
    config: &ProbeConfig,
) -> VerificationReport {
    let mut report = VerificationReport::new("stationarity", config.seed);
    let steps = solution.trajectory.steps();
    let baseline = stage_controls(problem, bc, &solution.unknowns, steps).and_then(|stages| {
        let controls = stages[0][0].len();
        let residual_len = problem.competitor_residual(bc, &problem.competitor_initial(bc)).len();
        let basis = Basis::new(controls, residual_len);
        matched_cost(problem, bc, &stages, &basis, config).map(|c| (c, basis))
    });
    let (base_cost, basis) = match baseline {
        Ok(b) => b,
        Err(e) => {
            report.push(Check::failed("min cost delta", config.probes, format!("baseline: {e}")));
            return report;
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut min_delta = f64::INFINITY;
    let mut failures = Vec::new();
    for probe in 0..config.probes {
        let dir = DVector::from_fn(solution.unknowns.len(), |_, _| rng.gen_range(-1.0..1.0));
        let delta = dir.normalize() * config.radius;
        let outcome = stage_controls(problem, bc, &(&solution.unknowns + delta), steps)
            .and_then(|stages| matched_cost(problem, bc, &stages, &basis, config));
        match outcome {
            Ok(cost) => min_delta = min_delta.min(cost - base_cost),
            Err(e) => failures.push(format!("probe {probe}: {e}")),
        }
    }
    let succeeded = config.probes - failures.len();
    let mut check = if succeeded == 0 {
        Check::failed("min cost delta", config.probes, "every probe failed to re-match")
    } else {
        Check::new("min cost delta", (-min_delta).max(0.0), config.threshold, succeeded)
            .with_note(format!("min delta {min_delta:e}, baseline cost {base_cost:.12e}"))
    };
    if !failures.is_empty() {
        let note = check.note.take().unwrap_or_default();
        check.note = Some(format!("{note}; {} probes not re-matched ({})", failures.len(), failures.join("; ")));
    }
    report.push(check);
    report
}

/// Options for [`verify_model`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct VerifyOptions {
    pub seed: u64,
    pub frame_samples: usize,
    pub rhs_samples: usize,
    /// Solve every scenario and probe it.
    pub scenarios: bool,
    pub probe: ProbeConfig,
    pub shooting: ShootingConfig,
    pub thresholds: Thresholds,
}

impl Default for VerifyOptions {
    fn default() -> Self {
        VerifyOptions {
            seed: DEFAULT_SEED,
            frame_samples: 50,
            rhs_samples: 200,
            scenarios: true,
            probe: ProbeConfig::default(),
            shooting: ShootingConfig::default(),
            thresholds: Thresholds::default(),
        }
    }
}

/// Solves a built-in scenario from its documented guess (or the default one).
pub fn solve_scenario(model: &BuiltinModel, scenario: &str, config: &ShootingConfig) -> Result<ShootingSolution> {
    let sc = model.scenario(scenario)?;
    match sc.layout {
        Layout::KinematicOc => {
            let ocp = model.kinematic.as_ref().ok_or_else(|| unsupported(model, sc.layout))?;
            let guess = match &sc.guess {
                Some(g) => g.clone(),
                None => ocp.default_guess(&sc.bc)?,
            };
            solvers::shoot(ocp, &sc.bc, &guess, config)
        }
        Layout::DynamicOc => {
            let ocp = model.dynamic.as_ref().ok_or_else(|| unsupported(model, sc.layout))?;
            let guess = match &sc.guess {
                Some(g) => g.clone(),
                None => ocp.default_guess(&sc.bc)?,
            };
            solvers::shoot(ocp, &sc.bc, &guess, config)
        }
        Layout::Mechanics => Err(unsupported(model, sc.layout)),
    }
}

/// Every check that applies to a built-in model.
pub fn verify_model(model: &BuiltinModel, options: &VerifyOptions) -> VerificationReport {
    let t = &options.thresholds;
    let mut report = VerificationReport::new(model.name, options.seed);
    report.absorb(check_frame(&model.frame, &model.sample_box, options.frame_samples, options.seed, t));
    for c in check_listed_hamel(model, options.frame_samples, options.seed, t).checks {
        report.push(c);
    }
    for layout in model.layouts() {
        match compare_rhs(model, layout, options.rhs_samples, options.seed, t) {
            Ok(r) => report.checks.extend(r.checks),
            Err(e) => report.push(Check::failed(format!("{layout} rhs"), options.rhs_samples, e.to_string())),
        }
    }
    if !options.scenarios {
        return report;
    }
    for sc in &model.scenarios {
        let mut sub = VerificationReport::new(format!("scenario {}", sc.name), options.seed);
        match solve_scenario(model, sc.name, &options.shooting) {
            Ok(sol) => {
                sub.push(
                    Check::new("boundary residual", sol.residual_norm, t.boundary, 1)
                        .with_note(format!("{} iterations, {} degenerate directions", sol.iterations, sol.degenerate_directions)),
                );
                sub.checks.extend(monitor(model, &sol.trajectory, t).checks);
                let probe = ProbeConfig {
                    threshold: t.stationarity,
                    ..options.probe
                };
                let probed = match sc.layout {
                    Layout::KinematicOc => stationarity_probe(model.kinematic.as_ref().expect("layout"), &sc.bc, &sol, &probe),
                    _ => stationarity_probe(model.dynamic.as_ref().expect("layout"), &sc.bc, &sol, &probe),
                };
                sub.checks.extend(probed.checks);
            }
            Err(e) => sub.push(Check::failed("boundary residual", 1, e.to_string())),
        }
        report.absorb(sub);
    }
    report
}
