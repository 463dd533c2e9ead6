use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{CliError, Result};
use crate::data::{Preprocessor, Schema};
use crate::model::{ModelConfig, ParamEntry, SwitchTabModel};
use crate::train::TrainConfig;
use crate::util::write_atomic;

pub const FORMAT_VERSION: u32 = 1;

/// A trained model together with everything needed to apply it to raw rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checkpoint {
    pub format_version: u32,
    pub schema_hash: String,
    pub schema: Schema,
    pub model_config: ModelConfig,
    pub preprocessor: Preprocessor,
    pub train_config: TrainConfig,
    pub params: Vec<ParamEntry>,
}

impl Checkpoint {
    pub fn new(model: &SwitchTabModel, preprocessor: &Preprocessor, train_config: &TrainConfig) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            schema_hash: preprocessor.schema.hash(),
            schema: preprocessor.schema.clone(),
            model_config: model.config().clone(),
            preprocessor: preprocessor.clone(),
            train_config: train_config.clone(),
            params: model.params().to_entries(),
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("checkpoint serializes")
    }

    pub fn from_json_str(text: &str) -> std::result::Result<Self, String> {
        // Read the version first so a newer file reports that, not a field error.
        #[derive(Deserialize)]
        struct Version {
            format_version: Option<u32>,
        }
        let v: Version = serde_json::from_str(text).map_err(|e| e.to_string())?;
        match v.format_version {
            None => return Err("missing format_version".into()),
            Some(found) if found > FORMAT_VERSION => {
                return Err(format!("format_version {found} is newer than supported version {FORMAT_VERSION}"))
            }
            Some(_) => {}
        }
        let ck: Checkpoint = serde_json::from_str(text).map_err(|e| e.to_string())?;
        if ck.schema_hash != ck.schema.hash() {
            return Err("schema_hash does not match the embedded schema".into());
        }
        Ok(ck)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::checkpoint(path, e))?;
        Self::from_json_str(&text).map_err(|e| CliError::checkpoint(path, e))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        write_atomic(path, self.to_json().as_bytes()).map_err(|e| CliError::io(path, e))
    }

    pub fn model(&self, path: &Path) -> Result<SwitchTabModel> {
        SwitchTabModel::from_entries(self.model_config.clone(), self.params.clone()).map_err(|e| CliError::checkpoint(path, e))
    }

    /// Fails with a schema mismatch unless `schema` hashes to the stored digest.
    pub fn check_schema(&self, schema: &Schema) -> Result<()> {
        let found = schema.hash();
        if found != self.schema_hash {
            return Err(CliError::SchemaMismatch {
                expected: self.schema_hash.clone(),
                found,
            });
        }
        Ok(())
    }
}
