use std::collections::HashSet;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::DataError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnKind {
    Numerical,
    Categorical,
    Label,
}

impl ColumnKind {
    fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numerical => "numerical",
            ColumnKind::Categorical => "categorical",
            ColumnKind::Label => "label",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Task {
    Binary,
    Multiclass,
    Regression,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ColumnSchema {
    pub name: String,
    pub kind: ColumnKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub task: Option<Task>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub classes: Option<usize>,
}

impl ColumnSchema {
    pub fn numerical(name: &str) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Numerical,
            task: None,
            classes: None,
        }
    }

    pub fn categorical(name: &str) -> Self {
        Self {
            kind: ColumnKind::Categorical,
            ..Self::numerical(name)
        }
    }

    pub fn label(name: &str, task: Task, classes: Option<usize>) -> Self {
        Self {
            name: name.into(),
            kind: ColumnKind::Label,
            task: Some(task),
            classes,
        }
    }
}

/// Ordered column declarations for a dataset.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Schema {
    pub columns: Vec<ColumnSchema>,
}

impl Schema {
    pub fn new(columns: Vec<ColumnSchema>) -> Result<Self, DataError> {
        let schema = Self { columns };
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_str(text: &str) -> Result<Self, DataError> {
        let schema: Schema = serde_json::from_str(text)?;
        schema.validate()?;
        Ok(schema)
    }

    pub fn from_json_file(path: &Path) -> Result<Self, DataError> {
        let text = std::fs::read_to_string(path).map_err(|e| DataError::io(path, e))?;
        Self::from_json_str(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("schema serializes")
    }

    pub fn validate(&self) -> Result<(), DataError> {
        if self.columns.is_empty() {
            return Err(DataError::InvalidSchema("schema has no columns".into()));
        }
        let mut seen = HashSet::new();
        for col in &self.columns {
            if !seen.insert(col.name.as_str()) {
                return Err(DataError::InvalidSchema(format!("duplicate column name {:?}", col.name)));
            }
            match (col.kind, col.task) {
                (ColumnKind::Label, None) => {
                    return Err(DataError::InvalidSchema(format!("label column {:?} needs a task", col.name)))
                }
                (ColumnKind::Label, Some(Task::Multiclass)) if col.classes.is_none_or(|k| k < 2) => {
                    return Err(DataError::InvalidSchema(format!(
                        "multiclass label {:?} needs classes >= 2",
                        col.name
                    )))
                }
                (ColumnKind::Label, Some(Task::Binary)) if col.classes.is_some_and(|k| k != 2) => {
                    return Err(DataError::InvalidSchema(format!("binary label {:?} must have 2 classes", col.name)))
                }
                (ColumnKind::Numerical | ColumnKind::Categorical, Some(_)) => {
                    return Err(DataError::InvalidSchema(format!("feature column {:?} cannot carry a task", col.name)))
                }
                _ => {}
            }
        }
        if self.columns.iter().filter(|c| c.kind == ColumnKind::Label).count() > 1 {
            return Err(DataError::InvalidSchema("at most one label column is allowed".into()));
        }
        Ok(())
    }

    pub fn label(&self) -> Option<(usize, &ColumnSchema)> {
        self.columns.iter().enumerate().find(|(_, c)| c.kind == ColumnKind::Label)
    }

    /// Order-sensitive SHA-256 digest of column names and kinds, hex encoded.
    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        for col in &self.columns {
            hasher.update(col.name.as_bytes());
            hasher.update([0u8]);
            hasher.update(col.kind.as_str().as_bytes());
            hasher.update([0u8]);
        }
        hex::encode(hasher.finalize())
    }
}
