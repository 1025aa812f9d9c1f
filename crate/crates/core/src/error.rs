use thiserror::Error;

use crate::geometry::Vec2;

/// Errors raised by the numerical kernels.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("non-finite input: {0}")]
    NonFinite(&'static str),

    #[error("matrix is not orthogonal (defect {defect:e})")]
    NotOrthogonal { defect: f64 },

    #[error("degenerate Möbius coefficients: ad - bc = 0")]
    Degenerate,

    #[error("point ({}, {}) is within the pole guard of the map", .0.x1, .0.x2)]
    Pole(Vec2),

    #[error("point ({}, {}) is outside the field domain: {reason}", .point.x1, .point.x2)]
    Domain { point: Vec2, reason: String },

    #[error("exponent overflow guard: |u| = {0} exceeds 700")]
    Overflow(f64),

    #[error("eigenvalues ({0}, {1}) lie outside the admissible cone")]
    Cone(f64, f64),

    #[error("anti-holomorphic maps are not supported by this check")]
    ConjugatingUnsupported,

    #[error("no diagonal seed mu with f(mu, mu) = {0} inside the cone")]
    Seed(f64),

    #[error("step failure at r = {r}: {reason}")]
    StepFailure { r: f64, reason: String },

    #[error("least-squares fit diverged (residual {residual:e})")]
    FitDiverged { residual: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    pub(crate) fn domain(point: Vec2, reason: impl Into<String>) -> Self {
        Error::Domain {
            point,
            reason: reason.into(),
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
