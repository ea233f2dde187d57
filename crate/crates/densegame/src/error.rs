use thiserror::Error;

/// Errors surfaced by the library layers.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {got} ({context})")]
    DimensionMismatch {
        expected: usize,
        got: usize,
        context: String,
    },

    #[error("joint space dimension {dim} exceeds cap {cap} (set DENSEGAME_MAX_DIM to raise)")]
    DimensionCap { dim: usize, cap: usize },

    #[error("matrix is not Hermitian: max |M - M†| = {residual:e} exceeds {tol:e}")]
    NotHermitian { residual: f64, tol: f64 },

    #[error("not a density matrix: {reason}")]
    NotDensity { reason: String },

    #[error("matrix is not diagonal: max off-diagonal magnitude {residual:e} exceeds {tol:e}")]
    NotDiagonal { residual: f64, tol: f64 },

    #[error("operator family does not commute: max commutator entry {residual:e} exceeds {tol:e}")]
    NonCommuting { residual: f64, tol: f64 },

    #[error("simultaneous diagonalization failed numerically: {0}")]
    DiagonalizationFailed(String),

    #[error("invalid probability vector: {reason}")]
    InvalidDistribution { reason: String },

    #[error("payoff trace has imaginary residue {residual:e} above tolerance {tol:e}")]
    ImaginaryResidue { residual: f64, tol: f64 },

    #[error("unnormalized input: {reason}")]
    Unnormalized { reason: String },

    #[error("problem size exceeds oracle limits: {0}")]
    OracleLimits(String),

    #[error("invalid game definition: field `{field}`: {reason}")]
    InvalidGame { field: String, reason: String },

    #[error("invalid value: {0}")]
    Invalid(String),

    #[error("game file error: {0}")]
    GameFile(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error("JSON error at line {line}, column {column}: {message}")]
    Json {
        line: usize,
        column: usize,
        message: String,
    },
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Json {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
