use thiserror::Error;

/// Errors raised by the sketching laboratory.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: String, found: String },

    #[error("entries length {len} does not match {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },

    #[error("non-finite entry at index {index}")]
    NonFinite { index: usize },

    #[error("singular value decomposition did not converge for {rows}x{cols} matrix (fingerprint {fingerprint:016x})")]
    SvdNonConvergence {
        rows: usize,
        cols: usize,
        fingerprint: u64,
    },

    #[error("invalid parameter {name}: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("linear dependence detected at family index {index} (residual ratio {ratio:e})")]
    LinearDependence { index: usize, ratio: f64 },

    #[error("sketch of {entries} dense entries exceeds the limit of {limit}")]
    MemoryGuard { entries: u128, limit: u128 },

    #[error("Frobenius norm {norm} outside the admissible domain (< {limit})")]
    FrobeniusDomain { norm: f64, limit: f64 },

    #[error("exponential overflow: exponent {exponent} at sample {sample}")]
    ExpOverflow { exponent: f64, sample: usize },

    #[error("acceptance rate {rate} of the conditioning event is below the floor {floor}")]
    AcceptanceFloor { rate: f64, floor: f64 },

    #[error("malformed sketch file: {0}")]
    Format(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter {
        name,
        reason: reason.into(),
    }
}
