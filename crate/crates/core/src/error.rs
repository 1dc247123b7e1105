use thiserror::Error;

/// Errors raised by grid construction, operators, norms and the harness.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("non-finite value {value} at node {index}")]
    NonFinite { index: usize, value: f64 },

    #[error("region below grid resolution")]
    EmptyRegion,

    #[error("support margin {have} is below the required {need}")]
    InsufficientMargin { have: usize, need: usize },

    #[error("need at least {need} time nodes, have {have}")]
    TooFewTimeNodes { have: usize, need: usize },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("empty radius set")]
    EmptyRadiusSet,

    #[error("trace window violated: {clause}")]
    TraceWindow { clause: String },

    #[error("scale below resolution: {0}")]
    Unresolved(String),

    #[error("radial quadrature did not resolve the tail (relative tail {0:e})")]
    QuadratureTail(f64),

    #[error("slab does not contain the support of the source: {0}")]
    SupportOutsideSlab(String),

    #[error("negative value {value} at node {index} where a nonnegative input is required")]
    Negative { index: usize, value: f64 },

    #[error("degenerate case: {0}")]
    Degenerate(String),

    #[error("unknown inequality id {id:?}; registered ids: {valid}")]
    UnknownInequality { id: String, valid: String },

    #[error("config error: {0}")]
    Config(String),

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
