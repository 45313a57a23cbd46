use thiserror::Error;

/// Errors produced by the analysis pipeline.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("series has fewer than 2 usable observations ({found} found)")]
    EmptySeries { found: usize },

    #[error("malformed header: missing column(s) {missing:?}")]
    MalformedHeader { missing: Vec<String> },

    #[error("csv error: {0}")]
    Csv(String),

    #[error("insufficient data: need at least {needed}, got {got}")]
    InsufficientData { needed: usize, got: usize },

    #[error("every sample value is exactly zero ({zeros} zeros)")]
    AllZeros { zeros: usize },

    #[error("alpha {alpha} is outside the tabulated range (1 - alpha must lie in [0.50, 0.999])")]
    OutOfTableRange { alpha: f64 },

    #[error("no plausible symmetry point on the scanned grid (min Tn = {min_tn}, threshold = {threshold})")]
    NoSymmetryPoint { min_tn: f64, threshold: f64 },

    #[error("sample of size {n} is too large for exhaustive breakpoints (limit {limit})")]
    TooLarge { n: usize, limit: usize },

    #[error("series of {len} prices is too short for a {window}-day window")]
    SeriesTooShort { len: usize, window: usize },

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;
