use thiserror::Error;

/// Errors produced by the geometry engine.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum QhError {
    /// A value outside the mathematical domain of an operation (zero vector,
    /// non-finite angle, point on the boundary of the domain, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// Malformed user input (duplicate nuclei, empty boundary, bad polygon).
    #[error("input error: {0}")]
    Input(String),

    /// A curve parameter outside its admissible window.
    #[error("parameter {value} outside [{lo}, {hi}]")]
    Parameter { value: f64, lo: f64, hi: f64 },

    /// Winding number requested for a point lying on the loop.
    #[error("point lies within {distance:e} of the loop")]
    AmbiguousPosition { distance: f64 },

    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A curve passes through (or numerically touches) a boundary point.
    #[error("curve touches a boundary point: {0}")]
    Singularity(String),

    /// An iterative solver did not reach its tolerance.
    #[error("no convergence after {iterations} iterations (best residual {residual:e})")]
    Convergence { iterations: usize, residual: f64 },

    /// The grid oracle cannot resolve the query at the requested spacing.
    #[error("resolution error: {0}")]
    Resolution(String),

    /// Contract violation by the caller (e.g. non-adjacent cell).
    #[error("logic error: {0}")]
    Logic(String),
}

pub type Result<T> = std::result::Result<T, QhError>;
