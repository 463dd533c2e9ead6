use serde::{Deserialize, Serialize};

use super::ModelError;

/// What the prediction heads output.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum HeadTask {
    Classification { n_classes: usize },
    Regression,
}

impl HeadTask {
    pub fn output_width(self) -> usize {
        match self {
            HeadTask::Classification { n_classes } => n_classes,
            HeadTask::Regression => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Input feature dimension; also the encoder output width.
    pub m: usize,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Width of each of the salient and mutual embeddings.
    pub d_e: usize,
    /// Prediction head task; `None` builds no heads.
    pub head: Option<HeadTask>,
    /// Hidden width of an optional two-layer pre-training head.
    #[serde(default)]
    pub head_hidden: Option<usize>,
    pub seed: u64,
}

impl ModelConfig {
    /// Default architecture for `m` input features: 3 layers, 2 heads,
    /// `d_model = 32`, `d_ff = 64`, `d_e = m`.
    pub fn new(m: usize) -> Self {
        Self {
            m,
            d_model: 32,
            n_layers: 3,
            n_heads: 2,
            d_ff: 64,
            d_e: m,
            head: None,
            head_hidden: None,
            seed: 0,
        }
    }

    pub fn with_head(mut self, head: HeadTask) -> Self {
        self.head = Some(head);
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let dims = [
            ("m", self.m),
            ("d_model", self.d_model),
            ("n_layers", self.n_layers),
            ("n_heads", self.n_heads),
            ("d_ff", self.d_ff),
            ("d_e", self.d_e),
        ];
        if let Some((name, _)) = dims.iter().find(|(_, v)| *v == 0) {
            return Err(ModelError::InvalidConfig(format!("{name} must be positive")));
        }
        if !self.d_model.is_multiple_of(self.n_heads) {
            return Err(ModelError::InvalidConfig(format!(
                "d_model {} is not divisible by n_heads {}",
                self.d_model, self.n_heads
            )));
        }
        match self.head {
            Some(HeadTask::Classification { n_classes }) if n_classes < 2 => {
                return Err(ModelError::InvalidConfig("classification head needs at least 2 classes".into()))
            }
            _ => {}
        }
        if self.head_hidden == Some(0) {
            return Err(ModelError::InvalidConfig("head_hidden must be positive".into()));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults() {
        let c = ModelConfig::new(14);
        assert_eq!((c.d_model, c.n_layers, c.n_heads, c.d_ff, c.d_e), (32, 3, 2, 64, 14));
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_dimensions() {
        let mut c = ModelConfig::new(4);
        c.n_heads = 3;
        assert!(c.validate().is_err());
        let mut c = ModelConfig::new(4);
        c.d_e = 0;
        assert!(c.validate().is_err());
        let c = ModelConfig::new(4).with_head(HeadTask::Classification { n_classes: 1 });
        assert!(c.validate().is_err());
    }
}
