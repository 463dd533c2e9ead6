use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{CliError, Result};
use crate::data::{default_missing_tokens, SynthSpec};
use crate::eval::MetricKind;
use crate::model::ModelConfig;
use crate::train::TrainConfig;

/// Architecture settings; the input width comes from the fitted preprocessor.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelSettings {
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    /// Defaults to the input width.
    pub d_e: Option<usize>,
    pub head_hidden: Option<usize>,
}

impl Default for ModelSettings {
    fn default() -> Self {
        let base = ModelConfig::new(1);
        Self {
            d_model: base.d_model,
            n_layers: base.n_layers,
            n_heads: base.n_heads,
            d_ff: base.d_ff,
            d_e: None,
            head_hidden: None,
        }
    }
}

impl ModelSettings {
    pub fn model_config(&self, m: usize, seed: u64) -> ModelConfig {
        ModelConfig {
            m,
            d_model: self.d_model,
            n_layers: self.n_layers,
            n_heads: self.n_heads,
            d_ff: self.d_ff,
            d_e: self.d_e.unwrap_or(m),
            head: None,
            head_hidden: self.head_hidden,
            seed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSettings {
    /// Predictions CSV scored by `eval`; defaults to `<out>/predictions.csv`.
    pub predictions: Option<PathBuf>,
    pub kind: MetricKind,
}

impl Default for EvalSettings {
    fn default() -> Self {
        Self {
            predictions: None,
            kind: MetricKind::Auc,
        }
    }
}

/// Everything a command needs, read from one JSON document. Relative paths
/// are resolved against the directory holding the config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub schema: Option<PathBuf>,
    pub out: PathBuf,
    /// Checkpoint read by finetune/embed/project; defaults to `<out>/checkpoint.json`.
    pub checkpoint: Option<PathBuf>,
    pub missing_tokens: Vec<String>,
    /// Share of rows held out from pre-training and fine-tuning.
    pub holdout_fraction: f64,
    pub model: ModelSettings,
    pub train: TrainConfig,
    pub synth: SynthSpec,
    pub eval: EvalSettings,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            data: None,
            schema: None,
            out: PathBuf::from("out"),
            checkpoint: None,
            missing_tokens: default_missing_tokens(),
            holdout_fraction: 0.2,
            model: ModelSettings::default(),
            train: TrainConfig::default(),
            synth: SynthSpec::default(),
            eval: EvalSettings::default(),
        }
    }
}

/// Command-line values that replace config-file values.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub no_switch: bool,
    pub alpha: Option<f64>,
    pub ratio: Option<f64>,
    pub out: Option<PathBuf>,
}

impl RunConfig {
    pub fn from_json_str(text: &str, base: &Path) -> Result<Self> {
        let mut config: RunConfig = serde_json::from_str(text).map_err(|e| CliError::Usage(format!("config: {e}")))?;
        config.resolve(base);
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new(""));
        Self::from_json_str(&text, base)
    }

    fn resolve(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        for p in [&mut self.data, &mut self.schema, &mut self.checkpoint, &mut self.eval.predictions]
            .into_iter()
            .flatten()
        {
            join(p);
        }
        join(&mut self.out);
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(seed) = o.seed {
            self.train.seed = seed;
            self.synth.seed = seed;
        }
        if o.no_switch {
            self.train.switching = false;
        }
        if let Some(alpha) = o.alpha {
            self.train.alpha = alpha;
        }
        if let Some(ratio) = o.ratio {
            self.train.ratio = ratio;
        }
        if let Some(out) = &o.out {
            self.out = out.clone();
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.holdout_fraction) {
            return Err(CliError::Usage("holdout_fraction must lie in [0, 1)".into()));
        }
        self.train.validate()?;
        Ok(())
    }

    pub fn checkpoint_path(&self) -> PathBuf {
        self.checkpoint.clone().unwrap_or_else(|| self.out.join("checkpoint.json"))
    }

    pub fn predictions_path(&self) -> PathBuf {
        self.eval.predictions.clone().unwrap_or_else(|| self.out.join("predictions.csv"))
    }

    /// An input path that must be set and exist.
    pub fn input(&self, path: &Option<PathBuf>, key: &str) -> Result<PathBuf> {
        let p = path.clone().ok_or_else(|| CliError::Usage(format!("config key {key:?} is required")))?;
        if !p.exists() {
            return Err(CliError::Usage(format!("{key} {} does not exist", p.display())));
        }
        Ok(p)
    }
}
