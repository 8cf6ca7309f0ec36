//! The built-in example systems: frames, costs, Lagrangians, hand-written
//! reference right-hand sides and named boundary-value scenarios.
//!
//! The reference right-hand sides are written out component by component,
//! independently of the generic assembly, and serve as oracles for it.

mod falling_disc;
mod heisenberg;
mod rigid_body;
mod vertical_disc;

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use nalgebra::DVector;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::assembly::{Layout, PhaseState};
use crate::error::{Error, Result};
use crate::frames::{HamelTensor, QuasiFrame};
use crate::problems::{BoundaryConditions, DynamicOcp, KinematicOcp, MechanicalSystem};

pub const MODEL_NAMES: [&str; 6] = [
    "heisenberg",
    "vertical_disc_kin",
    "vertical_disc_dyn",
    "falling_disc_kin",
    "rigid_body_dyn",
    "sphere_dyn",
];

/// Physical constants of the built-in models.
///
/// `radius` is used by the falling disc, `inertia` by the rigid body and the
/// sphere (which requires equal entries). The vertical disc's mass and
/// inertias are fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub radius: f64,
    pub inertia: [f64; 3],
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            radius: 1.0,
            inertia: [1.0, 2.0, 3.0],
        }
    }
}

impl ModelParams {
    /// `(η₃₂, η₁₃, η₂₁) = (I_zz − I_yy, I_xx − I_zz, I_yy − I_xx)`.
    pub fn eta(&self) -> [f64; 3] {
        let [ix, iy, iz] = self.inertia;
        [iz - iy, ix - iz, iy - ix]
    }

    fn defaults_for(kind: Kind) -> Self {
        match kind {
            Kind::Sphere => ModelParams {
                inertia: [1.0; 3],
                ..Default::default()
            },
            _ => ModelParams::default(),
        }
    }

    fn validate(&self, kind: Kind) -> Result<()> {
        let mut errors = Vec::new();
        if !(self.radius > 0.0) || !self.radius.is_finite() {
            errors.push(alloc::format!("radius must be positive, got {}", self.radius));
        }
        if self.inertia.iter().any(|&i| !(i > 0.0) || !i.is_finite()) {
            errors.push(alloc::format!("inertias must be positive, got {:?}", self.inertia));
        }
        if kind == Kind::Sphere && self.inertia.iter().any(|&i| i != self.inertia[0]) {
            errors.push(alloc::format!("sphere inertias must be equal, got {:?}", self.inertia));
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::InvalidProblem(errors))
        }
    }
}

/// A named boundary-value problem on a built-in model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: &'static str,
    pub summary: &'static str,
    pub layout: Layout,
    pub bc: BoundaryConditions,
    /// Explicit shooting guess, for problems whose default guess sits on a
    /// degenerate point of the shooting map.
    pub guess: Option<DVector<f64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Kind {
    Heisenberg,
    VerticalDiscKin,
    VerticalDiscDyn,
    FallingDiscKin,
    RigidBody,
    Sphere,
}

impl Kind {
    fn from_name(name: &str) -> Option<Kind> {
        Some(match name {
            "heisenberg" => Kind::Heisenberg,
            "vertical_disc_kin" => Kind::VerticalDiscKin,
            "vertical_disc_dyn" => Kind::VerticalDiscDyn,
            "falling_disc_kin" => Kind::FallingDiscKin,
            "rigid_body_dyn" => Kind::RigidBody,
            "sphere_dyn" => Kind::Sphere,
            _ => return None,
        })
    }
}

#[derive(Clone)]
pub struct BuiltinModel {
    pub name: &'static str,
    pub params: ModelParams,
    pub frame: QuasiFrame,
    pub kinematic: Option<KinematicOcp>,
    pub dynamic: Option<DynamicOcp>,
    pub mechanical: Option<MechanicalSystem>,
    pub scenarios: Vec<Scenario>,
    /// Coordinate box inside the chart, one `(lo, hi)` per coordinate.
    pub sample_box: Vec<(f64, f64)>,
    kind: Kind,
}

impl core::fmt::Debug for BuiltinModel {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("BuiltinModel")
            .field("name", &self.name)
            .field("params", &self.params)
            .field("frame", &self.frame)
            .field("layouts", &self.layouts())
            .finish_non_exhaustive()
    }
}

pub fn builtin(name: &str) -> Result<BuiltinModel> {
    let kind = lookup(name)?;
    build(kind, ModelParams::defaults_for(kind))
}

/// A built-in model with overridden constants.
pub fn builtin_with(name: &str, params: ModelParams) -> Result<BuiltinModel> {
    build(lookup(name)?, params)
}

/// The default constants of a built-in model.
pub fn default_params(name: &str) -> Result<ModelParams> {
    Ok(ModelParams::defaults_for(lookup(name)?))
}

pub fn all() -> Vec<BuiltinModel> {
    MODEL_NAMES.iter().map(|n| builtin(n).expect("registered")).collect()
}

fn lookup(name: &str) -> Result<Kind> {
    Kind::from_name(name).ok_or_else(|| Error::UnknownModel {
        name: name.to_string(),
        valid: MODEL_NAMES.to_vec(),
    })
}

fn build(kind: Kind, params: ModelParams) -> Result<BuiltinModel> {
    params.validate(kind)?;
    let model = match kind {
        Kind::Heisenberg => heisenberg::model(),
        Kind::VerticalDiscKin => vertical_disc::kinematic_model(),
        Kind::VerticalDiscDyn => vertical_disc::dynamic_model(),
        Kind::FallingDiscKin => falling_disc::model(&params),
        Kind::RigidBody => rigid_body::model("rigid_body_dyn", &params),
        Kind::Sphere => rigid_body::model("sphere_dyn", &params),
    };
    Ok(BuiltinModel {
        kind,
        params,
        ..model
    })
}

impl BuiltinModel {
    pub fn layouts(&self) -> Vec<Layout> {
        let mut out = Vec::new();
        if self.mechanical.is_some() {
            out.push(Layout::Mechanics);
        }
        if self.kinematic.is_some() {
            out.push(Layout::KinematicOc);
        }
        if self.dynamic.is_some() {
            out.push(Layout::DynamicOc);
        }
        out
    }

    /// The optimal-control layout the model's scenarios are posed in.
    pub fn control_layout(&self) -> Layout {
        if self.dynamic.is_some() {
            Layout::DynamicOc
        } else {
            Layout::KinematicOc
        }
    }

    pub fn supports(&self, layout: Layout) -> bool {
        self.layouts().contains(&layout)
    }

    pub fn scenario(&self, name: &str) -> Result<&Scenario> {
        self.scenarios.iter().find(|s| s.name == name).ok_or_else(|| Error::UnknownScenario {
            model: self.name.to_string(),
            name: name.to_string(),
            valid: self.scenarios.iter().map(|s| s.name).collect(),
        })
    }

    /// The Hamel coefficients as written out by hand for this frame, with
    /// every unlisted entry zero.
    pub fn listed_hamel(&self, q: &DVector<f64>) -> HamelTensor {
        match self.kind {
            Kind::Heisenberg => heisenberg::listed_hamel(q),
            Kind::VerticalDiscKin | Kind::VerticalDiscDyn => vertical_disc::listed_hamel(q),
            Kind::FallingDiscKin => falling_disc::listed_hamel(q, &self.params),
            Kind::RigidBody | Kind::Sphere => rigid_body::listed_hamel(),
        }
    }

    /// Hand-written right-hand side in the given layout; mechanics is torque-free.
    pub fn reference_rhs(&self, layout: Layout, state: &PhaseState) -> Result<DVector<f64>> {
        if layout == Layout::Mechanics {
            let free = self.frame.free_count();
            return self.reference_forced(state, &DVector::zeros(free));
        }
        self.check_layout(layout, state)?;
        let y = state.as_vector();
        Ok(match (self.kind, layout) {
            (Kind::Heisenberg, Layout::KinematicOc) => heisenberg::reference_kinematic(y),
            (Kind::VerticalDiscKin, Layout::KinematicOc) => vertical_disc::reference_kinematic(y),
            (Kind::VerticalDiscDyn, Layout::DynamicOc) => vertical_disc::reference_dynamic(y),
            (Kind::FallingDiscKin, Layout::KinematicOc) => falling_disc::reference_kinematic(y, &self.params),
            (Kind::RigidBody, Layout::DynamicOc) => rigid_body::reference_dynamic(y, &self.params),
            (Kind::Sphere, Layout::DynamicOc) => rigid_body::reference_sphere(y, &self.params),
            _ => return Err(self.unsupported(layout)),
        })
    }

    /// Hand-written forced mechanics, driven by free quasi-forces.
    pub fn reference_forced(&self, state: &PhaseState, controls: &DVector<f64>) -> Result<DVector<f64>> {
        self.check_layout(Layout::Mechanics, state)?;
        let free = self.frame.free_count();
        if controls.len() != free {
            return Err(Error::dimension("quasi-force vector", controls.len(), free));
        }
        let y = state.as_vector();
        Ok(match self.kind {
            Kind::VerticalDiscDyn => vertical_disc::reference_mechanics(y, controls),
            Kind::RigidBody | Kind::Sphere => rigid_body::reference_mechanics(y, controls, &self.params),
            _ => return Err(self.unsupported(Layout::Mechanics)),
        })
    }

    /// Quantities that stay constant along exact flows in `state`'s layout.
    pub fn invariants(&self, state: &PhaseState) -> Vec<(&'static str, DVector<f64>)> {
        let mut out = Vec::new();
        if let Some(mu) = state.mu() {
            if !mu.is_empty() {
                out.push(("multipliers", mu));
            }
        }
        let y = state.as_vector();
        match (self.kind, state.layout()) {
            (Kind::Heisenberg, Layout::KinematicOc) => {
                out.push(("control speed", DVector::from_element(1, y[3] * y[3] + y[4] * y[4])));
            }
            (Kind::VerticalDiscDyn, Layout::Mechanics) => {
                out.push(("energy", DVector::from_element(1, 0.75 * y[4] * y[4] + 0.125 * y[5] * y[5])));
            }
            (Kind::RigidBody | Kind::Sphere, Layout::Mechanics) => {
                let [e, p] = rigid_body::euler_integrals(y, &self.params);
                out.push(("energy", DVector::from_element(1, e)));
                out.push(("momentum norm", DVector::from_element(1, p)));
            }
            (Kind::RigidBody, Layout::DynamicOc) => {
                let k = rigid_body::kappa(y, &self.params);
                out.push(("kappa norm", DVector::from_element(1, k.norm())));
            }
            (Kind::Sphere, Layout::DynamicOc) => {
                out.push(("sphere first integral", rigid_body::sphere_first_integral(y)));
            }
            _ => {}
        }
        out
    }

    pub fn sample_q<R: Rng + ?Sized>(&self, rng: &mut R) -> DVector<f64> {
        DVector::from_iterator(self.sample_box.len(), self.sample_box.iter().map(|&(lo, hi)| rng.gen_range(lo..hi)))
    }

    /// A random chart-interior state; rate and multiplier blocks are uniform in `[-1, 1]`.
    pub fn sample_state<R: Rng + ?Sized>(&self, layout: Layout, rng: &mut R) -> PhaseState {
        let (n, m) = (self.frame.n(), self.frame.m());
        let len = layout.state_len(n, m);
        let q = self.sample_q(rng);
        let mut y = DVector::zeros(len);
        y.rows_mut(0, n).copy_from(&q);
        for v in y.iter_mut().skip(n) {
            *v = rng.gen_range(-1.0..1.0);
        }
        PhaseState::new(layout, n, m, y).expect("length from layout")
    }

    fn check_layout(&self, layout: Layout, state: &PhaseState) -> Result<()> {
        if !self.supports(layout) || state.layout() != layout {
            return Err(self.unsupported(layout));
        }
        if state.dims() != (self.frame.n(), self.frame.m()) {
            return Err(Error::dimension(
                alloc::format!("{} state", layout),
                state.as_vector().len(),
                layout.state_len(self.frame.n(), self.frame.m()),
            ));
        }
        Ok(())
    }

    fn unsupported(&self, layout: Layout) -> Error {
        Error::UnsupportedLayout {
            model: String::from(self.name),
            layout,
        }
    }
}

/// Placeholder used by the per-model constructors before `build` fills in
/// the registry-level fields.
fn skeleton(name: &'static str, frame: QuasiFrame, sample_box: Vec<(f64, f64)>) -> BuiltinModel {
    BuiltinModel {
        name,
        params: ModelParams::default(),
        frame,
        kinematic: None,
        dynamic: None,
        mechanical: None,
        scenarios: Vec::new(),
        sample_box,
        kind: Kind::Heisenberg,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn registry_names_resolve() {
        for name in MODEL_NAMES {
            let model = builtin(name).unwrap();
            assert_eq!(model.name, name);
            assert!(!model.scenarios.is_empty(), "{name} has no scenarios");
            assert_eq!(model.sample_box.len(), model.frame.n());
        }
    }

    #[test]
    fn unknown_model_lists_names() {
        let err = builtin("unicycle").unwrap_err();
        match err {
            Error::UnknownModel { valid, .. } => assert_eq!(valid.len(), 6),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn sphere_rejects_unequal_inertias() {
        assert!(builtin_with("sphere_dyn", ModelParams::default()).is_err());
        assert!(builtin_with("rigid_body_dyn", ModelParams { radius: -1.0, ..Default::default() }).is_err());
    }

    #[test]
    fn kinematic_only_models_reject_mechanics() {
        let model = builtin("heisenberg").unwrap();
        let state = PhaseState::zeros(Layout::Mechanics, 3, 1);
        assert!(matches!(
            model.reference_rhs(Layout::Mechanics, &state),
            Err(Error::UnsupportedLayout { .. })
        ));
    }
}
