//! Embedding export, plug-and-play concatenation, a logistic-regression
//! probe, metrics, and 2-D PCA projections.

mod embed;
mod metrics;
mod pca;
mod probe;

use thiserror::Error;

pub use embed::{concat_plug_and_play, concat_rows, embed, held_out_reconstruction, EmbeddingTable};
pub use metrics::{accuracy, auc, metric, rmse, MetricKind};
pub use pca::{pca2, projection_csv, projection_svg, Projection, PCA_ITERATIONS, PCA_TOLERANCE};
pub use probe::{train_probe, ProbeConfig, ProbeModel};

use crate::data::DataError;
use crate::model::ModelError;
use crate::train::TrainError;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("expected width {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("{0} values but {1} labels")]
    LengthMismatch(usize, usize),
    #[error("need at least {needed} samples, got {got}")]
    TooFewSamples { needed: usize, got: usize },
    #[error("label {label} is outside [0, {n_classes})")]
    InvalidLabel { label: usize, n_classes: usize },
    #[error("AUC is undefined when only one class is present")]
    SingleClass,
    #[error("{0}")]
    Unsupported(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Data(#[from] DataError),
}

type Result<T, E = EvalError> = std::result::Result<T, E>;
