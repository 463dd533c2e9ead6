//! Losses, optimizers, the pre-training loop (self-supervised or
//! label-assisted) and supervised fine-tuning.

mod check;
mod finetune;
mod log;
mod loss;
mod optim;
mod pretrain;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use check::{loss_gradcheck, tiny_model_config, LOSS_CHECK_SEED};
pub use finetune::{finetune, finetune_split};
pub use log::{EpochRecord, TrainLog};
pub use loss::{cls_loss, cls_loss_value, recon_loss, recon_loss_value, total_loss, total_loss_value, ReconTerms, ReconValues};
pub use optim::{Adam, RmsProp, ADAM_BETA1, ADAM_BETA2, EPSILON, RMSPROP_DECAY};
pub use pretrain::{pretrain, pretrain_model};

use crate::data::DataError;
use crate::model::ModelError;
use crate::tensor::TensorError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("training needs labels but the matrix has none")]
    MissingLabels,
    #[error("label {label} is outside [0, {n_classes})")]
    LabelOutOfRange { label: usize, n_classes: usize },
    #[error("{0}")]
    ShapeMismatch(String),
    #[error("non-finite gradient for {0}")]
    NonFiniteGradient(String),
    #[error("nothing to train")]
    NothingToTrain,
    #[error("validation split is empty")]
    ValidationTooSmall,
    #[error(transparent)]
    Data(#[from] DataError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

type Result<T, E = TrainError> = std::result::Result<T, E>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// Fraction of features replaced during corruption.
    pub ratio: f64,
    pub batch_size: usize,
    pub pretrain_epochs: usize,
    /// RMSprop learning rate.
    pub pretrain_lr: f64,
    /// Weight of the prediction loss when pre-training with labels.
    pub alpha: f64,
    pub finetune_epochs: usize,
    /// Adam learning rate.
    pub finetune_lr: f64,
    /// Fine-tuning stops after this many epochs without a better validation loss.
    pub patience: usize,
    /// Held-out share of the fine-tuning rows used for early stopping.
    pub validation_fraction: f64,
    pub seed: u64,
    /// Decode and penalise the switched pairs.
    pub switching: bool,
    pub label_assisted: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            ratio: 0.3,
            batch_size: 128,
            pretrain_epochs: 1000,
            pretrain_lr: 3e-4,
            alpha: 1.0,
            finetune_epochs: 200,
            finetune_lr: 1e-3,
            patience: 20,
            validation_fraction: 0.2,
            seed: 0,
            switching: true,
            label_assisted: false,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(TrainError::InvalidConfig(msg.into()));
        if !(0.0..=1.0).contains(&self.ratio) {
            return bad("ratio must lie in [0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.pretrain_lr.is_finite() && self.pretrain_lr > 0.0) || !(self.finetune_lr.is_finite() && self.finetune_lr > 0.0) {
            return bad("learning rates must be positive");
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return bad("alpha must be non-negative");
        }
        if self.patience == 0 {
            return bad("patience must be positive");
        }
        if !(self.validation_fraction > 0.0 && self.validation_fraction < 1.0) {
            return bad("validation_fraction must lie in (0, 1)");
        }
        Ok(())
    }
}
