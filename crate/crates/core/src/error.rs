use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    Dimension { expected: usize, found: usize },

    #[error("operands live on different bases")]
    BasisMismatch,

    #[error("invalid basis: {0}")]
    InvalidBasis(String),

    #[error("unknown arm `{0}`")]
    UnknownArm(String),

    #[error("beam splitter operands must be distinct (got `{0}` twice)")]
    IdenticalOperands(String),

    #[error("{0} requires a polarization-enabled basis")]
    PolarizationDisabled(&'static str),

    #[error("local operator must be square with dimension {expected}, got {rows}x{cols}")]
    LocalShape {
        expected: usize,
        rows: usize,
        cols: usize,
    },

    #[error("non-finite amplitude at index {0}")]
    NonFinite(usize),

    #[error("operator flagged {flag} fails its defining identity (residual {residual:.3e})")]
    FlagViolation { flag: &'static str, residual: f64 },

    #[error("boundary {boundary} out of range (scenario has {stages} stages)")]
    BoundaryOutOfRange { boundary: usize, stages: usize },

    #[error("degenerate post-selection: |<f|i>| = {0:.3e}, weak value undefined")]
    DegeneratePostselection(f64),

    #[error("post-selection probability is zero, readout undefined")]
    ZeroProbability,

    #[error("invalid pointer `{name}`: {reason}")]
    InvalidPointer { name: String, reason: String },

    #[error("invalid sweep: {0}")]
    InvalidSweep(String),

    #[error("presence threshold must be a non-negative number, got {0}")]
    InvalidThreshold(f64),

    #[error("adjacency graph does not cover arm `{0}`")]
    AdjacencyMissing(String),

    #[error("unknown built-in scenario `{0}` (expected fig1 or fig2)")]
    UnknownScenario(String),

    #[error("cannot serialize scenario: {0}")]
    Unserializable(String),

    #[error("{line}:{column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}
