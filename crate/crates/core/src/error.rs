use thiserror::Error;

/// Errors produced by the solver and its supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{what} did not converge after {iterations} iterations (estimate {estimate:e}, residual {residual:e})")]
    NotConverged {
        what: &'static str,
        estimate: f64,
        residual: f64,
        iterations: usize,
    },

    #[error("degenerate projection input in block {block} (singular value ratio {ratio:e})")]
    DegenerateProjection { block: usize, ratio: f64 },

    #[error("row {row} has zero norm and cannot be normalized")]
    ZeroRow { row: usize },

    #[error("point is off the manifold (violation {violation:e})")]
    OffManifold { violation: f64 },

    #[error("direction is not tangent (violation {violation:e})")]
    NotTangent { violation: f64 },

    #[error("unsupported: {0}")]
    Unsupported(String),

    #[error("assumption violated: gamma block {block} vanished at iteration {iteration}")]
    AssumptionViolated { block: usize, iteration: usize },

    #[error("invariant violated at iteration {iteration}: {detail}")]
    InvariantViolated { iteration: usize, detail: String },

    #[error("relative gap undefined for a zero reference value; use the absolute gap")]
    ZeroReference,

    #[error("instance too large: n = {n} exceeds the limit of {max}")]
    TooLarge { n: usize, max: usize },

    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
