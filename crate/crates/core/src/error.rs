use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error(
        "formula needs time-steps up to {required} when evaluated at k={k}, but the signal horizon is {available}"
    )]
    Horizon {
        k: usize,
        required: usize,
        available: usize,
    },

    #[error("invalid signal: {0}")]
    InvalidSignal(String),

    #[error("invalid interval [{lo},{hi}]: lower bound exceeds upper bound")]
    InvalidInterval { lo: usize, hi: usize },

    #[error("parse error at byte {position}: {message}")]
    Parse { position: usize, message: String },

    #[error("template has {expected} temporal operators but {got} intervals were given")]
    Arity { expected: usize, got: usize },

    #[error("template set is not closed under negation: dual of {0} is missing")]
    NotClosedUnderNegation(String),

    #[error("time parameters {thetas:?} exceed the dataset horizon {horizon}")]
    GridHorizon { horizon: usize, thetas: Vec<String> },

    #[error("tree depth {0} is outside the supported range 1..=4")]
    Depth(usize),

    #[error("malformed tree solution: {0}")]
    MalformedSolution(String),

    #[error("dataset is empty")]
    EmptyDataset,

    #[error("invalid dataset: {0}")]
    InvalidDataset(String),

    #[error("row {row}: traces have inconsistent lengths ({found} time-steps, expected {expected})")]
    RaggedTrace { row: usize, expected: usize, found: usize },

    #[error("row {row}: unknown label {label:?}")]
    UnknownLabel { row: usize, label: String },

    #[error("row {row}: non-numeric cell {cell:?}")]
    NonNumeric { row: usize, cell: String },

    #[error("split fraction {fraction} leaves an empty part")]
    EmptySplit { fraction: f64 },

    #[error("inconsistent problem: {0}")]
    InconsistentProblem(String),

    #[error("regularization weight {0} is outside [0, 1]")]
    Lambda(f64),

    #[error("assignment is missing a value for variable {0}")]
    MissingVariable(String),

    #[error("search space of {size} candidate trees exceeds the brute-force limit {limit}")]
    SearchSpaceTooLarge { size: u128, limit: u128 },

    #[error("manifest mismatch: {0}")]
    Manifest(String),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
