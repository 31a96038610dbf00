use thiserror::Error;

/// Crate-wide error type. Numerical preconditions (hermiticity, normality,
/// normalization, truncation adequacy) are checked at construction time and
/// surface here rather than as garbage output.
#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("size limit exceeded: result would hold {rows}x{cols} entries, cap is {cap}")]
    SizeLimit { rows: usize, cols: usize, cap: usize },
    #[error("operator is not hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("operator is not normal (commutator deviation {0:.3e})")]
    NotNormal(f64),
    #[error("operator is not unitary (max deviation {0:.3e})")]
    NotUnitary(f64),
    #[error("not a density operator: {0}")]
    NotDensity(String),
    #[error("vector is not normalized (norm {0})")]
    NotNormalized(f64),
    #[error("state is not cyclic and separating here: {0}")]
    NotCyclic(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("truncation too small: tail weight {tail:.3e} exceeds the requested tolerance {tol:.3e}")]
    TruncationTooSmall { tail: f64, tol: f64 },
    #[error("grid extent too small: X = {got:.3} but the state needs X >= {required:.3}")]
    ExtentTooSmall { got: f64, required: f64 },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed data: {0}")]
    Malformed(String),
}

pub type Result<T> = std::result::Result<T, Error>;
