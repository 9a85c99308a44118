use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("empty system: no admissible words of length {depth}")]
    EmptySystem { depth: usize },

    #[error("depth exhausted: {what} requires depth {required}, available {available}")]
    DepthExhausted {
        what: String,
        required: usize,
        available: usize,
    },

    #[error("invalid system: {0}")]
    InvalidSystem(String),

    #[error("point {0} is not represented in the space")]
    MissingPoint(String),

    #[error("invalid measure: {0}")]
    InvalidMeasure(String),

    #[error("subset sums collide: {left:?} and {right:?} have the same total")]
    SubsetSumCollision { left: Vec<usize>, right: Vec<usize> },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("support violation: {0}")]
    SupportViolation(String),

    #[error("refused: {0}")]
    Refused(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("pattern {pattern:?} is not realizable in the system")]
    Unrealizable { pattern: Vec<(usize, u8)> },

    #[error("invalid config at `{key}`: {message}")]
    Config { key: String, message: String },

    #[error("json: {0}")]
    Json(#[from] serde_json::Error),

    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Stable short name for machine-readable reports.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::EmptySystem { .. } => "empty-system",
            Error::DepthExhausted { .. } => "depth-exhausted",
            Error::InvalidSystem(_) => "invalid-system",
            Error::MissingPoint(_) => "missing-point",
            Error::InvalidMeasure(_) => "invalid-measure",
            Error::SubsetSumCollision { .. } => "subset-sum-collision",
            Error::DimensionMismatch(_) => "dimension-mismatch",
            Error::SupportViolation(_) => "support-violation",
            Error::Refused(_) => "refused",
            Error::InvalidParameter(_) => "invalid-parameter",
            Error::Unrealizable { .. } => "unrealizable",
            Error::Config { .. } => "config",
            Error::Json(_) => "json",
            Error::Io(_) => "io",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
