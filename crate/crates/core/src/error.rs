use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RisError {
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    #[error("length mismatch: expected {expected} elements, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("empty input: {0}")]
    EmptyInput(&'static str),

    #[error("point coincides with the surface origin")]
    CoincidentPoint,

    #[error("point lies behind or in the plane of the surface (normal component {normal_component:.3e} m)")]
    BehindSurface { normal_component: f64 },

    #[error("degenerate segment: endpoints coincide")]
    DegenerateSegment,

    #[error("pattern is identically zero")]
    DegeneratePattern,

    #[error("infeasible scenario: {0}")]
    Infeasible(String),

    #[error("format error: {0}")]
    Format(String),
}

pub type Result<T> = std::result::Result<T, RisError>;

pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> RisError {
    RisError::InvalidParameter {
        field,
        reason: reason.into(),
    }
}
