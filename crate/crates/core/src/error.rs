use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// Inputs whose shapes or sizes do not fit together.
    #[error("dimension mismatch: {0}")]
    Dimension(String),

    /// A parameter outside its admissible range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// A named identifiability condition does not hold.
    #[error("identifiability condition {condition} violated: {detail}")]
    Identifiability {
        condition: &'static str,
        detail: String,
    },

    /// Successive projection ran out of residual before collecting every corner.
    #[error("residual vanished after {found} of {requested} corners; input rank is too low")]
    RankDeficient { found: usize, requested: usize },

    /// The corner matrix is too ill-conditioned to invert.
    #[error("degenerate corner matrix: condition number {condition:.3e} exceeds {limit:.0e}")]
    DegenerateCorners { condition: f64, limit: f64 },

    /// An iterative solver did not converge.
    #[error("{solver} did not converge after {iterations} iterations (max residual {residual:.3e}, tolerance {tolerance:.1e})")]
    NoConvergence {
        solver: &'static str,
        iterations: usize,
        residual: f64,
        tolerance: f64,
    },

    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
