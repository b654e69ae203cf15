use thiserror::Error;

/// Errors raised by the toolkit's operations.
#[derive(Debug, Error)]
pub enum CoarseError {
    #[error("unknown space `{0}`")]
    UnknownSpace(String),
    #[error("unknown group `{0}`")]
    UnknownGroup(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed input: {0}")]
    Malformed(String),
    #[error("not a metric: {0}")]
    NotMetric(String),
    #[error("point `{0}` is not in the space")]
    MissingPoint(String),
    #[error("depth {requested} exceeds filtration capacity {capacity}")]
    DepthExceeded { requested: usize, capacity: usize },
    #[error("mismatched truncations: {0}")]
    Mismatch(String),
    #[error("empty input: {0}")]
    Empty(&'static str),
    #[error("space too large: {0}")]
    TooLarge(String),
    #[error("degenerate witness: {0}")]
    DegenerateWitness(String),
    #[error("function takes values outside both quarter-disks beyond every tested ball")]
    NotNearIdempotent,
    #[error("trivial idempotent: {0}")]
    TrivialIdempotent(String),
    #[error("one side of the decomposition is bounded: {0}")]
    OneSideBounded(String),
    #[error("decomposition profile diverges: {0}")]
    Divergent(String),
    #[error("maps are not close on the intersection: {0}")]
    NotClose(String),
    #[error("empty intersection A ∩ B")]
    EmptyIntersection,
    #[error("unsupported degree {0}")]
    UnsupportedDegree(usize),
    #[error("cocycle identity fails at {0}")]
    NotCocycle(String),
    #[error("group oracle inconsistency: {0}")]
    OracleInconsistent(String),
    #[error("inconclusive within budget: {0}")]
    Inconclusive(String),
    #[error("pair ({0}, {1}) lies outside the ground set")]
    OutsideGround(usize, usize),
    #[error("enumeration bound exceeded: {0}")]
    BoundExceeded(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T, E = CoarseError> = std::result::Result<T, E>;
