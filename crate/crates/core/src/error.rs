use thiserror::Error;

/// Errors raised by the numerical core.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid norm exponent {0}: must be >= 1")]
    InvalidExponent(f64),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("feature dimension {0} must be even for the paired cos/sin map")]
    OddFeatureDimension(usize),

    #[error("operation not supported for the {0} feature map variant")]
    UnsupportedVariant(&'static str),

    #[error("unsupported norm exponent {0} for this bound")]
    UnsupportedNorm(f64),

    #[error("sigma_half is singular or not positive on its diagonal")]
    SingularSigmaHalf,

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("degenerate Nystrom map: no eigenvalue above the cutoff {0:e}")]
    DegenerateMap(f64),

    #[error("eigendecomposition did not converge after {0} sweeps")]
    EigenNoConvergence(usize),

    #[error("point is within {0:e} of a kink; finite differences are unreliable there")]
    NearKink(f64),

    #[error("training diverged at update {0}")]
    Diverged(u64),

    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },

    #[error("empty dataset")]
    EmptyDataset,

    #[error("i/o error: {0}")]
    Io(String),

    #[error("corrupt model file: {0}")]
    CorruptModel(String),

    #[error("model file version mismatch: {0}")]
    ModelVersion(String),

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Error {
    Error::InvalidParameter { name, reason: reason.into() }
}

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected == found {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected, found })
    }
}
