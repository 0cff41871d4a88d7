use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },
    #[error("degenerate basis: column {column} has zero norm")]
    ZeroColumn { column: usize },
    #[error("rank {requested} exceeds maximum {max}")]
    RankTooLarge { requested: usize, max: usize },
    #[error("matrix is not symmetric (max asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },
    #[error("decomposition failed: {0}")]
    Decomposition(String),
    #[error("point {index} coincides with the projection center")]
    PointAtCenter { index: usize },
    #[error("empty point cloud")]
    EmptyCloud,
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },
    #[error("linearization needs {required_bytes} bytes for the Jacobian, limit is {limit_bytes}")]
    MemoryGuard { required_bytes: u64, limit_bytes: u64 },
    #[error("threshold curves have mismatched axes")]
    MismatchedAxes,
    #[error("idx: {0}")]
    Idx(#[from] IdxError),
}

/// Failures while decoding IDX image/label files.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum IdxError {
    #[error("{file} file has magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { file: &'static str, expected: u32, found: u32 },
    #[error("{images} images but {labels} labels")]
    ShapeMismatch { images: usize, labels: usize },
    #[error("{file} file truncated: need {needed} bytes, have {available}")]
    Truncated { file: &'static str, needed: usize, available: usize },
    #[error("empty dataset requested")]
    Empty,
    #[error("label {label} at index {index} is out of range for {classes} classes")]
    BadLabel { index: usize, label: u8, classes: usize },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument { name, reason: reason.into() }
    }
}
