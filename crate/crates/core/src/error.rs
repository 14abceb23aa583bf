use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot access {path}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("invalid config: {0}")]
    Config(String),
    #[error("unknown column `{0}`")]
    UnknownColumn(String),
    #[error("row {row}, column `{column}`: cannot parse `{value}` as a number")]
    Parse {
        row: usize,
        column: String,
        value: String,
    },
    #[error("label column `{column}` is not binary (saw {values:?})")]
    LabelNotBinary { column: String, values: Vec<String> },
    #[error("row {row} has {found} cells, expected {expected}")]
    RaggedRow {
        row: usize,
        found: usize,
        expected: usize,
    },
    #[error("dataset is empty")]
    EmptyDataset,
    #[error("dataset has no rows with label 0; false-positive rates are undefined")]
    NoNegatives,
    #[error("label class {0} is absent")]
    LabelClassAbsent(u8),
    #[error("protected column `{column}` has value {value} outside [-1, 1]")]
    UnscaledColumn { column: String, value: f64 },
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("brute-force oracle limited to n <= {max_n}, d <= {max_d}; got n = {n}, d = {d}")]
    SizeGuard {
        n: usize,
        d: usize,
        max_n: usize,
        max_d: usize,
    },
    #[error("subgroup id {0} is not in the registry")]
    UnresolvedGroup(usize),
    #[error("no protected attributes")]
    NoProtected,
    #[error("cannot compute a frontier of zero points")]
    EmptyFrontier,
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
