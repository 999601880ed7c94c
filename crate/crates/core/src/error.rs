use thiserror::Error;

/// Errors raised by the reconstruction toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("level n = {n} out of range (highest available level is {max})")]
    LevelOutOfRange { n: usize, max: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("configuration error: {0}")]
    Config(String),

    #[error(
        "quasi-singular Gram matrix (condition estimate {condition:.3e}); use a regularized inversion"
    )]
    QuasiSingular { condition: f64 },

    #[error(
        "time basis nearly linearly dependent over T = {period} (condition estimate {condition:.3e}); \
         lengthen the interval or use space-time kernels"
    )]
    IllConditionedTimeBasis { condition: f64, period: f64 },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("geometry mismatch: {0}")]
    GeometryMismatch(String),

    #[error("insufficient margin for smearing: {axis} padding of at least {required:.4} needed")]
    InsufficientMargin { axis: &'static str, required: f64 },

    #[error("distribution not normalized: total mass {mass:.10}")]
    Unnormalized { mass: f64 },

    #[error("zero event total at time index {0}")]
    ZeroTotal(usize),

    #[error("missing kernels for frequency class {0}")]
    MissingClass(String),
}

pub type Result<T> = std::result::Result<T, Error>;
