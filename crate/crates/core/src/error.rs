use alloc::boxed::Box;
use alloc::string::String;
use alloc::vec::Vec;

use crate::assembly::Layout;

pub type Result<T, E = Error> = core::result::Result<T, E>;

/// Errors raised while evaluating frames, assembling equations or solving
/// boundary value problems.
///
/// Indices reported in messages are 1-based.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("singular frame at q = {q:?}: condition estimate {condition:e} exceeds {limit:e}")]
    SingularFrame {
        q: Vec<f64>,
        condition: f64,
        limit: f64,
    },

    #[error("singular {what} (condition estimate {condition:e})")]
    SingularMass { what: &'static str, condition: f64 },

    #[error("{what} length {got}, expected {expected}")]
    Dimension {
        what: String,
        got: usize,
        expected: usize,
    },

    #[error("invalid problem: {}", .0.join("; "))]
    InvalidProblem(Vec<String>),

    #[error("no convergence after {iterations} iterations (best residual {best_residual:e})")]
    NoConvergence {
        iterations: usize,
        best_residual: f64,
        best_unknowns: Vec<f64>,
    },

    #[error("singular shooting Jacobian (largest singular value {sigma_max:e})")]
    SingularJacobian { sigma_max: f64 },

    #[error("unknown model `{name}`; valid names: {}", .valid.join(", "))]
    UnknownModel {
        name: String,
        valid: Vec<&'static str>,
    },

    #[error("model `{model}` has no scenario `{name}`; valid names: {}", .valid.join(", "))]
    UnknownScenario {
        model: String,
        name: String,
        valid: Vec<&'static str>,
    },

    #[error("model `{model}` does not support the {layout} layout")]
    UnsupportedLayout { model: String, layout: Layout },

    #[error("step {step}: {source}")]
    AtStep { step: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn dimension(what: impl Into<String>, got: usize, expected: usize) -> Self {
        Error::Dimension {
            what: what.into(),
            got,
            expected,
        }
    }

    /// Strips any [`Error::AtStep`] wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtStep { source, .. } => source.root(),
            other => other,
        }
    }
}
