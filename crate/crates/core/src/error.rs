use thiserror::Error;

/// Errors raised by the algebra, spectral and solver layers.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum CalibError {
    #[error("quaternion is not unit (|q| = {magnitude})")]
    NonUnitQuaternion { magnitude: f64 },
    #[error("dual quaternion violates the unit conditions ({reason})")]
    NonUnitDualQuaternion { reason: String },
    #[error("matrix is not a rotation: {reason}")]
    NotARotation { reason: String },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("KKT system is singular: {reason}")]
    SingularKkt { reason: String },
    #[error("need at least {required} measurements, got {got}")]
    TooFewMeasurements { required: usize, got: usize },
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
}

pub type Result<T, E = CalibError> = std::result::Result<T, E>;
