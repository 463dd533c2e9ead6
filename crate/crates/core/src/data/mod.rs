//! Tabular input: schema-typed CSV loading, preprocessing, feature corruption
//! and paired mini-batch sampling.

mod batch;
mod corrupt;
mod dataset;
mod matrix;
mod preprocess;
mod schema;
pub mod synth;

use std::path::Path;

use thiserror::Error;

pub use batch::{sample_batch_pairs, train_test_split, BatchPair};
pub use corrupt::{corrupt, corrupted_count, CorruptionResult};
pub use dataset::{default_missing_tokens, load_csv, ColumnData, TabularDataset, DEFAULT_MISSING_TOKENS};
pub use matrix::{FeatureMatrix, Labels};
pub use preprocess::{backward_difference, fit_preprocessor, transform, FeatureEncoder, LabelEncoder, Preprocessor};
pub use schema::{ColumnKind, ColumnSchema, Schema, Task};
pub use synth::{synthesize, SynthSpec};

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error("column not found: {0}")]
    ColumnNotFound(String),
    #[error("column {column:?}, row {row}: cannot parse {value:?} as a number")]
    Parse { column: String, row: usize, value: String },
    #[error("file has no data rows")]
    EmptyFile,
    #[error("invalid schema: {0}")]
    InvalidSchema(String),
    #[error("schema mismatch: {0}")]
    SchemaMismatch(String),
    #[error("every feature column was dropped")]
    AllColumnsDropped,
    #[error("corruption ratio {0} is outside [0, 1]")]
    InvalidRatio(f64),
    #[error("need at least {needed} rows, got {got}")]
    TooFewRows { needed: usize, got: usize },
    #[error("row {row}: label is missing")]
    MissingLabel { row: usize },
    #[error("row {row}: invalid label {value:?}")]
    InvalidLabel { row: usize, value: String },
    #[error("{0}")]
    InvalidArgument(String),
}

impl DataError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        DataError::Io {
            path: path.display().to_string(),
            source,
        }
    }
}
