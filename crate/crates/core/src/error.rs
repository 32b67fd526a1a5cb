use thiserror::Error;

/// Errors produced by the library and surfaced by the command-line front end.
#[derive(Error, Debug)]
pub enum Error {
    #[error("invalid matrix tuple: {0}")]
    InvalidTuple(String),

    #[error("symbol {symbol} out of range 1..={symbols}")]
    SymbolOutOfRange { symbol: usize, symbols: usize },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix is singular")]
    SingularMatrix,

    #[error("zero vector given where a nonzero vector is required")]
    ZeroVector,

    #[error("budget exceeded for {what}: {required} > cap {cap}")]
    BudgetExceeded { what: String, required: u128, cap: u128 },

    #[error("dimension {dim} exceeds the configured cap {cap}")]
    DimensionCap { dim: usize, cap: usize },

    #[error("eigenvalue solver did not converge")]
    EigenNotConverged,

    #[error("power iteration did not converge after {max_iter} iterations (residual {residual:e})")]
    NotConverged { max_iter: usize, residual: f64 },

    #[error("eigenmatrix is degenerate (min eigenvalue {min_eigenvalue:e}); input tuple is likely reducible")]
    DegenerateEigenmatrix { min_eigenvalue: f64 },

    #[error("every candidate product B1*A_w*B2 vanished; the tuple is reducible")]
    AllCandidatesZero,

    #[error("generator {index} is not invertible")]
    NotInvertible { index: usize },

    #[error("joint fixed space of dimension {dimension} contains no positive-definite element")]
    NoPositiveDefiniteElement { dimension: usize },

    #[error("pressure bracket width {width:e} is not below tolerance {tol:e}")]
    UnsupportedPrecision { width: f64, tol: f64 },

    #[error("parse error at line {line}, column {column}: {message}")]
    Parse { line: usize, column: usize, message: String },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    /// Process exit code used by the command-line front end.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidTuple(_)
            | Error::SymbolOutOfRange { .. }
            | Error::DimensionMismatch(_)
            | Error::Parse { .. }
            | Error::InvalidArgument(_)
            | Error::ZeroVector
            | Error::Json(_) => 2,
            Error::BudgetExceeded { .. } | Error::DimensionCap { .. } => 4,
            Error::Io(_) | Error::Csv(_) => 1,
            _ => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
