use thiserror::Error;

/// Errors produced by state construction, geometry operations, and the
/// surface machinery. Invalid inputs are rejected, never silently repaired.
#[derive(Debug, Error)]
pub enum GqmError {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("dimension {dim} too small: need at least {min}")]
    DimensionTooSmall { dim: usize, min: usize },

    #[error("zero vector cannot represent a state")]
    ZeroVector,

    #[error("vector is not normalized: |psi| = {norm:.17}")]
    NotNormalized { norm: f64 },

    #[error("matrix is not self-adjoint: max |A - A^H| entry = {deviation:.3e}")]
    NotSelfAdjoint { deviation: f64 },

    #[error("matrix is not square: {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },

    #[error("tangent vector is not horizontal at its base: |<psi, v>| = {overlap:.3e}")]
    NotHorizontal { overlap: f64 },

    #[error("tangent vectors are attached to different base points")]
    BaseMismatch,

    #[error("matrix violates positive semidefiniteness: det = {det:.3e}")]
    PsdViolation { det: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("grid needs at least 3 nodes per axis, got {n_s}x{n_t}")]
    GridTooSmall { n_s: usize, n_t: usize },

    #[error("node ({i}, {j}) out of range for {n_s}x{n_t} grid")]
    NodeOutOfRange {
        i: usize,
        j: usize,
        n_s: usize,
        n_t: usize,
    },

    #[error("relaxation stalled at step {step}: energy would not decrease after {halvings} step-size halvings")]
    ConvergenceFailure { step: usize, halvings: u32 },

    #[error("map serialization: {0}")]
    Serialization(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, GqmError>;
