use thiserror::Error;

use crate::hybrid::Label;

/// Errors raised by model construction and the numerical routines.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("coupling from label {0} to itself is not allowed")]
    DiagonalCouplingForbidden(Label),

    #[error("duplicate coupling entry {to} <- {from}")]
    DuplicateCoupling { to: Label, from: Label },

    #[error("shape mismatch in {context}: expected {expected}, found {found}")]
    ShapeMismatch {
        context: String,
        expected: String,
        found: String,
    },

    #[error("label {label} out of range (model has {count} labels)")]
    InvalidLabel { label: Label, count: usize },

    #[error("operator for label {label} is not Hermitian (deviation {deviation:e})")]
    NotHermitian { label: Label, deviation: f64 },

    #[error("positivity lost at t = {t}: eigenvalue {min_eigenvalue:e} (step too large?)")]
    PositivityLost { t: f64, min_eigenvalue: f64 },

    #[error("jump requested from label {label} at t = {t} with zero jump intensity")]
    ZeroJumpIntensity { label: Label, t: f64 },

    #[error("grid spacing {spacing} too coarse for detector profile (need <= {required})")]
    GridTooCoarse { spacing: f64, required: f64 },

    #[error("spinors live on different grids")]
    GridMismatch,

    #[error("map {map} sends the state to zero")]
    ZeroImage { map: usize },

    #[error("point cloud is degenerate (all points coincide)")]
    DegenerateCloud,

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

impl Error {
    /// True for failures that come from a numerical guard rather than bad input.
    pub fn is_numerical_guard(&self) -> bool {
        matches!(
            self,
            Error::PositivityLost { .. }
                | Error::ZeroJumpIntensity { .. }
                | Error::ZeroImage { .. }
                | Error::DegenerateCloud
        )
    }

    pub(crate) fn shape(context: impl Into<String>, expected: impl ToString, found: impl ToString) -> Self {
        Error::ShapeMismatch {
            context: context.into(),
            expected: expected.to_string(),
            found: found.to_string(),
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
