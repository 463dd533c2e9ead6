//! Two-class synthetic tables with class-dependent and shared Gaussian columns.

use rand::seq::SliceRandom;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::dataset::{ColumnData, TabularDataset};
use super::schema::{ColumnSchema, Schema, Task};
use super::DataError;
use crate::util::seeded_rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SynthSpec {
    pub n: usize,
    pub class_dims: usize,
    pub shared_dims: usize,
    /// Distance between the two class means on every class column.
    pub separation: f64,
    /// Standard deviation of the class columns.
    pub noise: f64,
    pub seed: u64,
}

impl Default for SynthSpec {
    fn default() -> Self {
        Self {
            n: 500,
            class_dims: 4,
            shared_dims: 4,
            separation: 2.0,
            noise: 0.3,
            seed: 7,
        }
    }
}

/// Standard deviation of the class-independent columns.
pub const SHARED_SD: f64 = 1.0;

/// Columns `c0..`, `s0..` and a binary `label`. Classes are balanced
/// (`n / 2` rows of class 0) and appear in shuffled order.
pub fn synthesize(spec: &SynthSpec) -> Result<TabularDataset, DataError> {
    if spec.n < 4 {
        return Err(DataError::TooFewRows { needed: 4, got: spec.n });
    }
    if spec.class_dims == 0 || spec.shared_dims == 0 {
        return Err(DataError::InvalidArgument("class_dims and shared_dims must be at least 1".into()));
    }
    if !(spec.noise >= 0.0 && spec.noise.is_finite() && spec.separation.is_finite()) {
        return Err(DataError::InvalidArgument("noise must be finite and non-negative".into()));
    }
    let mut rng = seeded_rng(spec.seed);
    let mut labels: Vec<usize> = (0..spec.n).map(|i| usize::from(i >= spec.n / 2)).collect();
    labels.shuffle(&mut rng);

    let half = spec.separation / 2.0;
    let class_dist = [
        Normal::new(-half, spec.noise).expect("valid normal"),
        Normal::new(half, spec.noise).expect("valid normal"),
    ];
    let shared_dist = Normal::new(0.0, SHARED_SD).expect("valid normal");

    let mut class_cols = vec![Vec::with_capacity(spec.n); spec.class_dims];
    let mut shared_cols = vec![Vec::with_capacity(spec.n); spec.shared_dims];
    for &y in &labels {
        for col in class_cols.iter_mut() {
            col.push(Some(class_dist[y].sample(&mut rng)));
        }
        for col in shared_cols.iter_mut() {
            col.push(Some(shared_dist.sample(&mut rng)));
        }
    }

    let mut schema_cols = Vec::new();
    let mut data = Vec::new();
    for (j, col) in class_cols.into_iter().enumerate() {
        schema_cols.push(ColumnSchema::numerical(&format!("c{j}")));
        data.push(ColumnData::Numeric(col));
    }
    for (j, col) in shared_cols.into_iter().enumerate() {
        schema_cols.push(ColumnSchema::numerical(&format!("s{j}")));
        data.push(ColumnData::Numeric(col));
    }
    schema_cols.push(ColumnSchema::label("label", Task::Binary, Some(2)));
    data.push(ColumnData::Text(labels.iter().map(|y| Some(y.to_string())).collect()));
    TabularDataset::new(Schema::new(schema_cols)?, data)
}
