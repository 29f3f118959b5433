use thiserror::Error;

/// Errors raised across the library.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("grid {rows}x{cols} is too small: both dimensions must be at least 2")]
    DimensionTooSmall { rows: usize, cols: usize },
    #[error("not a simple dual cycle: {0}")]
    NotACycle(String),
    #[error("infeasible partition: {0}")]
    InfeasiblePartition(String),
    #[error("{vertices} vertices exceeds the enumeration cap of {cap}")]
    TooLarge { vertices: usize, cap: usize },
    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),
    #[error("vertex at position {0} does not appear on the loop")]
    VertexNotOnLoop(usize),
    #[error("walk erasure does not match the context path")]
    ErasureMismatch,
    #[error("window violation: {0}")]
    WindowViolation(String),
    #[error("target path uses the outer face more often than the source path")]
    OuterDegreeIncrease,
    #[error("walk is not in the image of the map: {0}")]
    NotInImage(String),
    #[error("coloring contains a cross-structure")]
    CrossStructurePresent,
    #[error("region is not an island")]
    NotAnIsland,
    #[error("island encloses a region of its own color")]
    IslandHasHole,
    #[error("pattern mismatch: {0}")]
    PatternMismatch(String),
    #[error("no candidate found: {0}")]
    NoCandidateFound(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("graph is disconnected")]
    DisconnectedGraph,
    #[error("step failed: {0}")]
    StepFailed(String),
    #[error("no statistics to summarize")]
    EmptyStats,
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("i/o error: {0}")]
    Io(String),
}

pub type Result<T> = std::result::Result<T, Error>;

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Parse(e.to_string())
    }
}
