//! TOML scenario files and their resolution against command-line flags.
//!
//! ```toml
//! model = "sphere_dyn"
//! scenario = "fig2"        # optional: start from a built-in scenario
//! layout = "dynamic"       # optional: kinematic | dynamic
//!
//! [params]
//! inertia = [2.0, 2.0, 2.0]
//!
//! [bc]
//! t1 = 2.0
//! q1 = ["pi/4", 0, 0]
//!
//! [solver]
//! steps = 400
//! newton_tol = 1e-10
//!
//! [output]
//! path = "fig2.csv"
//! format = "csv"
//! ```

use std::path::{Path, PathBuf};

use clap::ValueEnum;
use hamel_core::models::{self, BuiltinModel, Scenario};
use hamel_core::solvers::OptimalControl;
use hamel_core::{BoundaryConditions, Error, Layout, ShootingConfig};
use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::args::SolveArgs;
use crate::CliError;

pub const DEFAULT_RESTARTS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProblemKind {
    Kinematic,
    Dynamic,
}

impl ProblemKind {
    pub fn layout(self) -> Layout {
        match self {
            ProblemKind::Kinematic => Layout::KinematicOc,
            ProblemKind::Dynamic => Layout::DynamicOc,
        }
    }

    fn of(layout: Layout) -> Option<Self> {
        match layout {
            Layout::KinematicOc => Some(ProblemKind::Kinematic),
            Layout::DynamicOc => Some(ProblemKind::Dynamic),
            Layout::Mechanics => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    /// `.json` files are JSON, everything else CSV.
    pub fn infer(path: Option<&Path>) -> Format {
        match path.and_then(|p| p.extension()).and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("json") => Format::Json,
            _ => Format::Csv,
        }
    }
}

/// A number, or a string such as `"pi/4"`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(untagged)]
pub enum Real {
    Num(f64),
    Text(String),
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamsPatch {
    pub radius: Option<f64>,
    pub inertia: Option<Vec<Real>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BcPatch {
    pub t0: Option<f64>,
    pub t1: Option<f64>,
    pub q0: Option<Vec<Real>>,
    pub q1: Option<Vec<Real>>,
    pub u0: Option<Vec<Real>>,
    pub u1: Option<Vec<Real>>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputPatch {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub model: Option<String>,
    pub scenario: Option<String>,
    pub layout: Option<ProblemKind>,
    #[serde(default)]
    pub params: ParamsPatch,
    #[serde(default)]
    pub bc: BcPatch,
    pub guess: Option<Vec<Real>>,
    #[serde(default)]
    pub solver: ShootingConfig,
    pub restarts: Option<usize>,
    pub seed: Option<u64>,
    #[serde(default)]
    pub output: OutputPatch,
}

impl ScenarioConfig {
    pub fn parse(text: &str, origin: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| {
            let at = e
                .span()
                .map(|span| {
                    let line = text[..span.start].matches('\n').count() + 1;
                    let col = span.start - text[..span.start].rfind('\n').map_or(0, |i| i + 1) + 1;
                    format!(" at line {line}, column {col}")
                })
                .unwrap_or_default();
            CliError::config(format!("{origin}{at}: {}", e.message()))
        })
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path.display(), e))?;
        Self::parse(&text, &path.display().to_string())
    }

    /// Overlays command-line flags; flags win.
    pub fn overlay(mut self, args: &SolveArgs) -> Self {
        fn nums(v: &Option<Vec<f64>>) -> Option<Vec<Real>> {
            v.as_ref().map(|v| v.iter().copied().map(Real::Num).collect())
        }
        macro_rules! set {
            ($dst:expr, $src:expr) => {
                if let Some(v) = $src {
                    $dst = Some(v);
                }
            };
        }
        set!(self.model, args.model.model.clone());
        set!(self.scenario, args.scenario.clone());
        set!(self.layout, args.layout);
        set!(self.params.radius, args.model.radius);
        set!(self.params.inertia, nums(&args.model.inertia));
        set!(self.bc.t0, args.t0);
        set!(self.bc.t1, args.t1);
        set!(self.bc.q0, nums(&args.q0));
        set!(self.bc.q1, nums(&args.q1));
        set!(self.bc.u0, nums(&args.u0));
        set!(self.bc.u1, nums(&args.u1));
        set!(self.guess, nums(&args.guess));
        set!(self.restarts, args.restarts);
        set!(self.seed, args.seed);
        set!(self.output.path, args.output.out.clone());
        set!(self.output.format, args.output.format);
        if let Some(steps) = args.steps {
            self.solver.steps = steps;
        }
        if let Some(tol) = args.tol {
            self.solver.newton_tol = tol;
        }
        if let Some(max_iters) = args.max_iters {
            self.solver.max_iters = max_iters;
        }
        self
    }

    pub fn resolve(self) -> Result<Resolved, CliError> {
        let name = self
            .model
            .ok_or_else(|| CliError::config("no model given (use --model or `model = ...` in the config)"))?;
        let mut params = models::default_params(&name).map_err(core_config)?;
        if let Some(r) = self.params.radius {
            params.radius = r;
        }
        if let Some(inertia) = &self.params.inertia {
            let v = reals("params.inertia", inertia, Some(3))?;
            params.inertia = [v[0], v[1], v[2]];
        }
        let model = models::builtin_with(&name, params).map_err(core_config)?;
        let (n, f) = (model.frame.n(), model.frame.free_count());

        let scenario: Option<Scenario> = match &self.scenario {
            Some(s) => Some(model.scenario(s).map_err(core_config)?.clone()),
            None => None,
        };

        let kind = self
            .layout
            .or_else(|| scenario.as_ref().and_then(|s| ProblemKind::of(s.layout)))
            .or_else(|| ProblemKind::of(model.control_layout()))
            .expect("control layouts are kinematic or dynamic");
        if !model.supports(kind.layout()) {
            return Err(CliError::config(
                Error::UnsupportedLayout {
                    model: name,
                    layout: kind.layout(),
                }
                .to_string(),
            ));
        }

        let base = scenario.as_ref().map(|s| &s.bc);
        let endpoint = |field: &str, given: &Option<Vec<Real>>, from: Option<&DVector<f64>>| -> Result<Vec<f64>, CliError> {
            match (given, from) {
                (Some(v), _) => reals(field, v, Some(n)),
                (None, Some(q)) => Ok(q.iter().copied().collect()),
                (None, None) => Err(CliError::config(format!("{field}: missing (no scenario to take it from)"))),
            }
        };
        let q0 = endpoint("bc.q0", &self.bc.q0, base.map(|b| &b.q0))?;
        let q1 = endpoint("bc.q1", &self.bc.q1, base.map(|b| &b.q1))?;
        let t0 = self.bc.t0.or(base.map(|b| b.t0)).unwrap_or(0.0);
        let t1 = self.bc.t1.or(base.map(|b| b.t1)).unwrap_or(1.0);

        let bc = match kind {
            ProblemKind::Kinematic => {
                for (field, v) in [("bc.u0", &self.bc.u0), ("bc.u1", &self.bc.u1)] {
                    if v.is_some() {
                        log::warn!("{field} is ignored by kinematic problems");
                    }
                }
                BoundaryConditions::kinematic(t0, t1, &q0, &q1)
            }
            ProblemKind::Dynamic => {
                // Unspecified endpoint quasi-velocities mean rest.
                let rate = |field: &str, given: &Option<Vec<Real>>, from: Option<&DVector<f64>>| match (given, from) {
                    (Some(v), _) => reals(field, v, Some(f)),
                    (None, Some(u)) => Ok(u.iter().copied().collect()),
                    (None, None) => Ok(vec![0.0; f]),
                };
                let u0 = rate("bc.u0", &self.bc.u0, base.and_then(|b| b.u0_free.as_ref()))?;
                let u1 = rate("bc.u1", &self.bc.u1, base.and_then(|b| b.u1_free.as_ref()))?;
                BoundaryConditions::dynamic(t0, t1, &q0, &q1, &u0, &u1)
            }
        };

        let unknowns = match kind {
            ProblemKind::Kinematic => model.kinematic.as_ref().expect("supported").unknown_count(),
            ProblemKind::Dynamic => model.dynamic.as_ref().expect("supported").unknown_count(),
        };
        let guess = match (&self.guess, &scenario) {
            (Some(g), _) => Some(DVector::from_vec(reals("guess", g, Some(unknowns))?)),
            (None, Some(s)) if s.layout == kind.layout() => s.guess.clone(),
            _ => None,
        };

        self.solver.validate().map_err(|e| CliError::config(format!("solver: {e}")))?;
        let report = match kind {
            ProblemKind::Kinematic => model.kinematic.as_ref().expect("supported").validate(&bc),
            ProblemKind::Dynamic => model.dynamic.as_ref().expect("supported").validate(&bc),
        }
        .map_err(core_config)?;
        for note in &report.notes {
            log::warn!("{note}");
        }

        let format = self.output.format.unwrap_or_else(|| Format::infer(self.output.path.as_deref()));
        Ok(Resolved {
            model,
            scenario: self.scenario,
            kind,
            bc,
            guess,
            solver: self.solver,
            restarts: self.restarts.unwrap_or(DEFAULT_RESTARTS),
            seed: self.seed.unwrap_or(hamel_core::verify::DEFAULT_SEED),
            out: self.output.path,
            format,
        })
    }
}

/// A fully specified solve request.
#[derive(Debug)]
pub struct Resolved {
    pub model: BuiltinModel,
    pub scenario: Option<String>,
    pub kind: ProblemKind,
    pub bc: BoundaryConditions,
    /// `None` means the problem's default guess.
    pub guess: Option<DVector<f64>>,
    pub solver: ShootingConfig,
    pub restarts: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub format: Format,
}

fn core_config(e: Error) -> CliError {
    CliError::config(e.to_string())
}

fn reals(field: &str, values: &[Real], expected: Option<usize>) -> Result<Vec<f64>, CliError> {
    if let Some(k) = expected {
        if values.len() != k {
            return Err(CliError::config(format!("{field}: length {}, expected {k}", values.len())));
        }
    }
    values
        .iter()
        .enumerate()
        .map(|(i, v)| {
            let x = match v {
                Real::Num(x) => *x,
                Real::Text(s) => match crate::args::parse_vector(s).as_deref() {
                    Ok([x]) => *x,
                    _ => return Err(CliError::config(format!("{field}[{}]: `{s}` is not a number", i + 1))),
                },
            };
            if x.is_finite() {
                Ok(x)
            } else {
                Err(CliError::config(format!("{field}[{}]: not finite", i + 1)))
            }
        })
        .collect()
}
