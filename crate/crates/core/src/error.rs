use thiserror::Error;

use crate::model::Species;

/// Errors raised by the chemostat models and their numerical machinery.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter `{field}`: {reason}")]
    InvalidParameter { field: String, reason: String },

    #[error("integrator failed to converge at t = {t} (step size {h:e})")]
    NonConvergent { t: f64, h: f64 },

    #[error("integrator exceeded {max_steps} steps before t = {t}")]
    TooManySteps { t: f64, max_steps: usize },

    #[error("root not bracketed on [{lo}, {hi}] in {context}")]
    RootNotBracketed { lo: f64, hi: f64, context: &'static str },

    #[error("no absolutely continuous invariant density: {0}")]
    DegenerateDensity(&'static str),

    #[error("resident species {0} cannot persist in the switched environment")]
    ResidentCannotPersist(Species),

    #[error("resident species {0} went extinct during the ergodic run")]
    ResidentExtinct(Species),

    #[error("invader {0} left the rare window immediately; reduce eps")]
    EmptyWindow(Species),

    #[error("unequal resource inputs ({r01} vs {r02}) where the two-species machinery needs R0^1 = R0^2")]
    UnequalInputs { r01: f64, r02: f64 },

    #[error("species {0} has an empty survival domain D_w")]
    EmptyDomain(Species),

    #[error("degenerate species pair: F_u and F_v coincide")]
    DegenerateSpeciesPair,

    #[error("semi-trivial equilibrium of {0} is missing")]
    MissingEquilibrium(Species),

    #[error("internal inconsistency: {0}")]
    Inconsistent(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("unknown figure `{0}`")]
    UnknownFigure(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(field: &str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        field: field.to_string(),
        reason: reason.into(),
    }
}
