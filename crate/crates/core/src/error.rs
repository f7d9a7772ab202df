use std::path::PathBuf;

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("row {line} has {found} fields, expected {expected}")]
    RaggedRow { line: u64, expected: usize, found: usize },
    #[error("duplicate column name `{0}`")]
    DuplicateColumn(String),
    #[error("unknown attribute `{0}`")]
    UnknownAttribute(String),
    #[error("value `{value}` does not occur in attribute `{attr}`")]
    UnknownValue { attr: String, value: String },
    #[error("selection is empty")]
    EmptySelection,
    #[error("distribution undefined on a table with zero total")]
    EmptyTable,
    #[error("attribute set is not a subset of the table attributes")]
    NotSubset,
    #[error("joint domain of {0} attributes is too large to index")]
    TooManyCells(usize),
    #[error("margins disagree: row total {rows}, column total {cols}")]
    MarginMismatch { rows: u64, cols: u64 },
    #[error("arguments overlap: {0}")]
    Overlap(String),
    #[error("invalid query: {0}")]
    InvalidQuery(String),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot parse `{input}`: {reason}")]
    Parse { input: String, reason: String },
    #[error("invalid DAG: {0}")]
    InvalidDag(String),
    #[error("unknown node `{0}`")]
    UnknownNode(String),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}
