use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),

    #[error("row {row}: expected {expected} columns, found {found}")]
    RaggedRow {
        row: u64,
        expected: usize,
        found: usize,
    },

    #[error("row {row}, column {col}: cannot parse {value:?} as a number")]
    NonNumeric { row: u64, col: usize, value: String },

    #[error("row {row}, column {col}: value is not finite")]
    NonFinite { row: u64, col: usize },

    #[error("data set is empty")]
    EmptyData,

    #[error("invalid synthetic spec: {0}")]
    InvalidSpec(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("length mismatch: expected {expected}, found {found}")]
    LengthMismatch { expected: usize, found: usize },

    #[error("invalid size: {0}")]
    InvalidSize(String),

    #[error("invalid weights: {0}")]
    InvalidWeights(String),

    #[error("{m} qubits exceeds the limit of {max}")]
    TooManyQubits { m: usize, max: usize },

    #[error("qubit index {index} out of range for {m} qubits")]
    IndexOutOfRange { index: usize, m: usize },

    #[error("polynomial has degree {degree}; only quadratic polynomials can be compiled")]
    NotQuadratic { degree: usize },

    #[error("unsupported Taylor order {0} for polynomial extraction (only 0 and 1)")]
    UnsupportedOrder(String),

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),

    #[error("qasm line {line}: {msg}")]
    Qasm { line: usize, msg: String },

    #[error("invalid config: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
