use thiserror::Error;

/// Contract errors raised by the library. The variant name is what the CLI
/// reports on failure.
#[derive(Debug, Error)]
pub enum Error {
    #[error("vertex subset must be nonempty and proper")]
    EmptySide,
    #[error("vertex subset has zero total degree")]
    DegenerateDegree,
    #[error("instance too large for exhaustive mode: {what} = {got} exceeds {limit}")]
    TooLarge { what: &'static str, got: usize, limit: usize },
    #[error("graph is disconnected")]
    Disconnected,
    #[error("vector has a component outside the range of the matrix (relative residual {0:.3e})")]
    OutOfRange(f64),
    #[error("invalid graph: {0}")]
    InvalidGraph(String),
    #[error("{n} is not divisible by {k}")]
    Indivisible { n: usize, k: usize },
    #[error("no simple connected {k}-regular graph on {m} vertices found")]
    InfeasibleDegree { m: usize, k: usize },
    #[error("unknown hierarchy node {0}")]
    UnknownNode(usize),
    #[error("inconsistent leaf map: {0}")]
    InconsistentLeafMap(String),
    #[error("no contracted vertex with at most 5 neighbors")]
    NoLowDegreeVertex,
    #[error("precondition failed: {0}")]
    PreconditionFailed(String),
    #[error("solver stalled: {0}")]
    SolverStalled(String),
    #[error("dual ratio denominator is zero")]
    ZeroDenominator,
    #[error("cut weights are not a probability distribution: {0}")]
    BadDistribution(String),
    #[error("certificate mismatch: {0}")]
    CertificateMismatch(String),
    #[error("all embedded points coincide")]
    DegenerateEmbedding,
    #[error("node is not bad: {0}")]
    NotBad(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("file not found: {0}")]
    FileNotFound(String),
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Stable name of the error kind.
    pub fn name(&self) -> &'static str {
        match self {
            Error::EmptySide => "EmptySide",
            Error::DegenerateDegree => "DegenerateDegree",
            Error::TooLarge { .. } => "TooLarge",
            Error::Disconnected => "Disconnected",
            Error::OutOfRange(_) => "OutOfRange",
            Error::InvalidGraph(_) => "InvalidGraph",
            Error::Indivisible { .. } => "Indivisible",
            Error::InfeasibleDegree { .. } => "InfeasibleDegree",
            Error::UnknownNode(_) => "UnknownNode",
            Error::InconsistentLeafMap(_) => "InconsistentLeafMap",
            Error::NoLowDegreeVertex => "NoLowDegreeVertex",
            Error::PreconditionFailed(_) => "PreconditionFailed",
            Error::SolverStalled(_) => "SolverStalled",
            Error::ZeroDenominator => "ZeroDenominator",
            Error::BadDistribution(_) => "BadDistribution",
            Error::CertificateMismatch(_) => "CertificateMismatch",
            Error::DegenerateEmbedding => "DegenerateEmbedding",
            Error::NotBad(_) => "NotBad",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::FileNotFound(_) => "FileNotFound",
            Error::Parse { .. } => "ParseError",
            Error::Io(_) => "IoError",
            Error::Json(_) => "JsonError",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
