use thiserror::Error;

/// Errors raised by grid construction, assembly, linear algebra and time stepping.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("index {index} outside the admissible range {lo}..={hi}")]
    IndexOutOfRange { index: usize, lo: usize, hi: usize },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("singular system: zero pivot at row {row}")]
    Singular { row: usize },

    #[error("overflow: {0}")]
    Overflow(String),

    #[error("operation requires the LBC1 boundary treatment")]
    RequiresLbc1,

    #[error("operation requires a homogeneous Dirichlet datum at s = 0")]
    RequiresZeroSource,

    #[error("degenerate order fit: all errors below {threshold:e}")]
    DegenerateFit { threshold: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
