use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("node index {index} out of range for graph with {p} nodes")]
    InvalidNode { index: usize, p: usize },
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("graph is not ancestral (directed/almost directed cycle or non-MAG edge mark)")]
    NonAncestral,
    #[error("input graph contains a directed cycle")]
    CyclicInput,
    #[error("graph is not a DAG: {0}")]
    NotADag(String),
    #[error("invalid target set: {0}")]
    InvalidTargets(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("principal submatrix is numerically singular (rcond {rcond:e})")]
    SingularSubmatrix { rcond: f64 },
    #[error("insufficient sample: n = {n}, conditioning size = {s_size}")]
    InsufficientSample { n: usize, s_size: usize },
    #[error("degenerate correlation {0}")]
    DegenerateCorrelation(f64),
    #[error("dataset has {0} rows; at least 2 are required")]
    TooFewSamples(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("no admissible target set after {attempts} attempts")]
    NoAdmissibleTargets { attempts: usize },
    #[error("node universe mismatch: {0}")]
    UniverseMismatch(String),
    #[error("design matrix is rank deficient")]
    RankDeficient,
    #[error("residual variance {0:e} is below the floor")]
    VarianceFloor(f64),
    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
