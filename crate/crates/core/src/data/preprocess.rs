//! Imputation, backward-difference coding of categoricals and min-max scaling.
//!
//! Fitting follows a fixed order: drop columns that are missing in every row,
//! impute (numerical mean, categorical mode), expand categoricals through the
//! backward-difference contrast matrix, then scale every derived column to
//! `[0, 1]` with its training extrema. Corruption pools are the columns of the
//! transformed training matrix.

use serde::{Deserialize, Serialize};

use super::dataset::{ColumnData, TabularDataset};
use super::matrix::{FeatureMatrix, Labels};
use super::schema::{ColumnKind, Schema, Task};
use super::DataError;

/// Backward-difference contrast matrix for `k` levels (`k` rows, `k − 1` columns).
///
/// Column `j` contrasts level `j + 1` with level `j`: entries are
/// `−(k − 1 − j) / k` for levels `0..=j` and `(j + 1) / k` above.
pub fn backward_difference(k: usize) -> Vec<Vec<f64>> {
    let kf = k as f64;
    (0..k)
        .map(|level| {
            (0..k.saturating_sub(1))
                .map(|j| {
                    if level <= j {
                        -((k - 1 - j) as f64) / kf
                    } else {
                        (j + 1) as f64 / kf
                    }
                })
                .collect()
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum FeatureEncoder {
    Numerical {
        column: usize,
        name: String,
        mean: f64,
        min: f64,
        max: f64,
    },
    Categorical {
        column: usize,
        name: String,
        mode: String,
        levels: Vec<String>,
        contrast: Vec<Vec<f64>>,
    },
}

impl FeatureEncoder {
    fn width(&self) -> usize {
        match self {
            FeatureEncoder::Numerical { .. } => 1,
            FeatureEncoder::Categorical { levels, .. } => levels.len() - 1,
        }
    }

    fn output_names(&self) -> Vec<String> {
        match self {
            FeatureEncoder::Numerical { name, .. } => vec![name.clone()],
            FeatureEncoder::Categorical { name, levels, .. } => {
                (0..levels.len() - 1).map(|i| format!("{name}__bd{i}")).collect()
            }
        }
    }

    /// Appends the unscaled encoding of row `row` to `out`.
    fn encode(&self, data: &TabularDataset, row: usize, out: &mut Vec<f64>) {
        match self {
            FeatureEncoder::Numerical { column, mean, .. } => {
                let ColumnData::Numeric(cells) = data.column(*column) else {
                    unreachable!("schema checked")
                };
                out.push(cells[row].unwrap_or(*mean));
            }
            FeatureEncoder::Categorical {
                column,
                mode,
                levels,
                contrast,
                ..
            } => {
                let ColumnData::Text(cells) = data.column(*column) else {
                    unreachable!("schema checked")
                };
                let value = cells[row].as_deref().unwrap_or(mode);
                let idx = levels
                    .iter()
                    .position(|l| l == value)
                    .or_else(|| levels.iter().position(|l| l == mode))
                    .expect("mode is a level");
                out.extend_from_slice(&contrast[idx]);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum LabelEncoder {
    Classes {
        column: usize,
        task: Task,
        /// Raw label strings; position is the class index.
        levels: Vec<String>,
    },
    Regression {
        column: usize,
    },
}

impl LabelEncoder {
    fn fit(schema: &Schema, data: &TabularDataset) -> Result<Option<Self>, DataError> {
        let Some((column, decl)) = schema.label() else {
            return Ok(None);
        };
        match decl.task {
            Some(Task::Regression) => Ok(Some(LabelEncoder::Regression { column })),
            Some(task) => {
                let ColumnData::Text(cells) = data.column(column) else {
                    unreachable!("classification labels are text")
                };
                let declared = match task {
                    Task::Binary => Some(decl.classes.unwrap_or(2)),
                    _ => decl.classes,
                };
                let present: Vec<&str> = cells.iter().flatten().map(String::as_str).collect();
                let all_int = present.iter().all(|s| s.parse::<usize>().is_ok());
                let levels: Vec<String> = if all_int {
                    let max = present.iter().map(|s| s.parse::<usize>().unwrap()).max().unwrap_or(0);
                    let k = declared.unwrap_or(max + 1).max(max + 1);
                    (0..k).map(|i| i.to_string()).collect()
                } else {
                    let mut distinct: Vec<String> = present.iter().map(|s| s.to_string()).collect();
                    distinct.sort();
                    distinct.dedup();
                    distinct
                };
                if let Some(k) = declared {
                    if levels.len() > k {
                        return Err(DataError::InvalidLabel {
                            row: 0,
                            value: format!("{} distinct labels for {k} declared classes", levels.len()),
                        });
                    }
                }
                let mut levels = levels;
                if let Some(k) = declared {
                    let mut i = 0;
                    while levels.len() < k {
                        let filler = format!("__unseen{i}");
                        if !levels.contains(&filler) {
                            levels.push(filler);
                        }
                        i += 1;
                    }
                }
                Ok(Some(LabelEncoder::Classes { column, task, levels }))
            }
            None => unreachable!("validated schema"),
        }
    }

    fn encode(&self, data: &TabularDataset) -> Result<Labels, DataError> {
        match self {
            LabelEncoder::Regression { column } => {
                let ColumnData::Numeric(cells) = data.column(*column) else {
                    unreachable!("schema checked")
                };
                let values = cells
                    .iter()
                    .enumerate()
                    .map(|(row, c)| c.ok_or(DataError::MissingLabel { row: row + 1 }))
                    .collect::<Result<_, _>>()?;
                Ok(Labels::Regression { values })
            }
            LabelEncoder::Classes { column, levels, .. } => {
                let ColumnData::Text(cells) = data.column(*column) else {
                    unreachable!("schema checked")
                };
                let values = cells
                    .iter()
                    .enumerate()
                    .map(|(row, c)| {
                        let v = c.as_deref().ok_or(DataError::MissingLabel { row: row + 1 })?;
                        levels.iter().position(|l| l == v).ok_or_else(|| DataError::InvalidLabel {
                            row: row + 1,
                            value: v.to_string(),
                        })
                    })
                    .collect::<Result<_, _>>()?;
                Ok(Labels::Classes {
                    values,
                    n_classes: levels.len(),
                })
            }
        }
    }
}

/// Fitted preprocessing state. Immutable after fitting.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Preprocessor {
    pub schema: Schema,
    pub features: Vec<FeatureEncoder>,
    pub dropped: Vec<String>,
    pub scale_min: Vec<f64>,
    pub scale_max: Vec<f64>,
    pub label: Option<LabelEncoder>,
    pub pools: Vec<Vec<f64>>,
}

impl Preprocessor {
    /// Number of derived (post-encoding) columns.
    pub fn output_width(&self) -> usize {
        self.scale_min.len()
    }

    pub fn output_names(&self) -> Vec<String> {
        self.features.iter().flat_map(FeatureEncoder::output_names).collect()
    }

    fn encode_unscaled(&self, data: &TabularDataset) -> Vec<f64> {
        let width = self.features.iter().map(FeatureEncoder::width).sum::<usize>();
        let mut out = Vec::with_capacity(data.n() * width);
        for row in 0..data.n() {
            for f in &self.features {
                f.encode(data, row, &mut out);
            }
        }
        out
    }

    fn scale(&self, raw: &mut [f64]) {
        let m = self.output_width();
        for row in raw.chunks_mut(m) {
            for ((v, lo), hi) in row.iter_mut().zip(&self.scale_min).zip(&self.scale_max) {
                *v = if hi > lo { ((*v - lo) / (hi - lo)).clamp(0.0, 1.0) } else { 0.5 };
            }
        }
    }
}

/// Fits the preprocessing pipeline on training rows.
pub fn fit_preprocessor(train: &TabularDataset) -> Result<Preprocessor, DataError> {
    let schema = train.schema().clone();
    let mut features = Vec::new();
    let mut dropped = Vec::new();
    for (column, decl) in schema.columns.iter().enumerate() {
        match (decl.kind, train.column(column)) {
            (ColumnKind::Label, _) => {}
            (ColumnKind::Numerical, ColumnData::Numeric(cells)) => {
                let present: Vec<f64> = cells.iter().flatten().copied().collect();
                if present.is_empty() {
                    dropped.push(decl.name.clone());
                    continue;
                }
                let mean = present.iter().sum::<f64>() / present.len() as f64;
                let min = present.iter().copied().fold(f64::INFINITY, f64::min);
                let max = present.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                features.push(FeatureEncoder::Numerical {
                    column,
                    name: decl.name.clone(),
                    mean,
                    min,
                    max,
                });
            }
            (ColumnKind::Categorical, ColumnData::Text(cells)) => {
                let mut levels: Vec<String> = Vec::new();
                let mut counts: Vec<usize> = Vec::new();
                for v in cells.iter().flatten() {
                    match levels.iter().position(|l| l == v) {
                        Some(i) => counts[i] += 1,
                        None => {
                            levels.push(v.clone());
                            counts.push(1);
                        }
                    }
                }
                if levels.len() < 2 {
                    dropped.push(decl.name.clone());
                    continue;
                }
                // Ties go to the earliest-appearing level.
                let best = counts.iter().copied().max().unwrap();
                let mode = levels[counts.iter().position(|&c| c == best).unwrap()].clone();
                let contrast = backward_difference(levels.len());
                features.push(FeatureEncoder::Categorical {
                    column,
                    name: decl.name.clone(),
                    mode,
                    levels,
                    contrast,
                });
            }
            _ => unreachable!("dataset cell types match the schema"),
        }
    }
    if features.is_empty() {
        return Err(DataError::AllColumnsDropped);
    }

    let label = LabelEncoder::fit(&schema, train)?;
    let mut prep = Preprocessor {
        schema,
        features,
        dropped,
        scale_min: Vec::new(),
        scale_max: Vec::new(),
        label,
        pools: Vec::new(),
    };
    let m = prep.features.iter().map(FeatureEncoder::width).sum::<usize>();
    let mut raw = prep.encode_unscaled(train);
    prep.scale_min = vec![f64::INFINITY; m];
    prep.scale_max = vec![f64::NEG_INFINITY; m];
    for row in raw.chunks(m) {
        for (j, v) in row.iter().enumerate() {
            prep.scale_min[j] = prep.scale_min[j].min(*v);
            prep.scale_max[j] = prep.scale_max[j].max(*v);
        }
    }
    prep.scale(&mut raw);
    prep.pools = (0..m).map(|j| raw.chunks(m).map(|row| row[j]).collect()).collect();
    Ok(prep)
}

/// Applies a fitted preprocessor. Labels are encoded when the schema has a
/// label column.
pub fn transform(prep: &Preprocessor, data: &TabularDataset) -> Result<FeatureMatrix, DataError> {
    if data.schema() != &prep.schema {
        return Err(DataError::SchemaMismatch(
            "dataset schema differs from the one the preprocessor was fitted on".into(),
        ));
    }
    let mut values = prep.encode_unscaled(data);
    prep.scale(&mut values);
    let labels = prep.label.as_ref().map(|l| l.encode(data)).transpose()?;
    FeatureMatrix::new(
        data.n(),
        prep.output_width(),
        values,
        labels,
        prep.pools.clone(),
        prep.output_names(),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::schema::ColumnSchema;

    fn numeric(cells: &[Option<f64>]) -> TabularDataset {
        let schema = Schema::new(vec![ColumnSchema::numerical("x")]).unwrap();
        TabularDataset::new(schema, vec![ColumnData::Numeric(cells.to_vec())]).unwrap()
    }

    fn text(cells: &[Option<&str>]) -> ColumnData {
        ColumnData::Text(cells.iter().map(|c| c.map(str::to_string)).collect())
    }

    #[test]
    fn backward_difference_matches_reference_table() {
        // Standard backward-difference coding for four levels.
        let reference = [
            [-0.75, -0.5, -0.25],
            [0.25, -0.5, -0.25],
            [0.25, 0.5, -0.25],
            [0.25, 0.5, 0.75],
        ];
        let c = backward_difference(4);
        for (row, expected) in c.iter().zip(reference) {
            assert_eq!(row.as_slice(), expected.as_slice());
        }
        assert_eq!(backward_difference(2), vec![vec![-0.5], vec![0.5]]);
        let k3 = backward_difference(3);
        assert_eq!(k3[0], vec![-2.0 / 3.0, -1.0 / 3.0]);
        assert_eq!(k3[2], vec![1.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn numeric_stats_ignore_missing() {
        let ds = numeric(&[Some(1.0), Some(2.0), None, Some(3.0)]);
        let prep = fit_preprocessor(&ds).unwrap();
        match &prep.features[0] {
            FeatureEncoder::Numerical { mean, min, max, .. } => {
                assert_eq!((*mean, *min, *max), (2.0, 1.0, 3.0));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn min_max_scaling() {
        let ds = numeric(&[Some(1.0), Some(2.0), Some(3.0)]);
        let prep = fit_preprocessor(&ds).unwrap();
        let fm = transform(&prep, &ds).unwrap();
        assert_eq!(fm.values(), &[0.0, 0.5, 1.0]);
    }

    #[test]
    fn constant_column_maps_to_midpoint() {
        let ds = numeric(&[Some(4.0), Some(4.0)]);
        let fm = transform(&fit_preprocessor(&ds).unwrap(), &ds).unwrap();
        assert_eq!(fm.values(), &[0.5, 0.5]);
    }

    #[test]
    fn categorical_mode_and_levels() {
        let schema = Schema::new(vec![ColumnSchema::categorical("c")]).unwrap();
        let ds = TabularDataset::new(schema, vec![text(&[Some("a"), Some("a"), Some("b"), None])]).unwrap();
        let prep = fit_preprocessor(&ds).unwrap();
        match &prep.features[0] {
            FeatureEncoder::Categorical { mode, levels, .. } => {
                assert_eq!(mode, "a");
                assert_eq!(levels, &["a", "b"]);
            }
            other => panic!("unexpected {other:?}"),
        }
        assert_eq!(prep.output_width(), 1);
        let fm = transform(&prep, &ds).unwrap();
        // Binary contrast codes (-1/2, +1/2) scale to 0 and 1; missing takes the mode.
        assert_eq!(fm.values(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(fm.column_names(), &["c__bd0"]);
    }

    #[test]
    fn unseen_level_maps_to_mode() {
        let schema = Schema::new(vec![ColumnSchema::categorical("c")]).unwrap();
        let train = TabularDataset::new(schema.clone(), vec![text(&[Some("a"), Some("b"), Some("b")])]).unwrap();
        let test = TabularDataset::new(schema, vec![text(&[Some("zzz")])]).unwrap();
        let prep = fit_preprocessor(&train).unwrap();
        let fm = transform(&prep, &test).unwrap();
        assert_eq!(fm.values(), &[1.0]);
    }

    #[test]
    fn out_of_range_values_are_clipped() {
        let train = numeric(&[Some(0.0), Some(10.0)]);
        let test = numeric(&[Some(-5.0), Some(20.0), None]);
        let prep = fit_preprocessor(&train).unwrap();
        assert_eq!(transform(&prep, &test).unwrap().values(), &[0.0, 1.0, 0.5]);
    }

    #[test]
    fn all_missing_and_single_level_columns_are_dropped() {
        let schema = Schema::new(vec![
            ColumnSchema::numerical("gone"),
            ColumnSchema::categorical("flat"),
            ColumnSchema::numerical("kept"),
        ])
        .unwrap();
        let ds = TabularDataset::new(
            schema,
            vec![
                ColumnData::Numeric(vec![None, None]),
                text(&[Some("q"), None]),
                ColumnData::Numeric(vec![Some(1.0), Some(2.0)]),
            ],
        )
        .unwrap();
        let prep = fit_preprocessor(&ds).unwrap();
        assert_eq!(prep.dropped, vec!["gone", "flat"]);
        assert_eq!(prep.output_names(), vec!["kept"]);
    }

    #[test]
    fn everything_dropped_is_an_error() {
        let ds = numeric(&[None, None]);
        assert!(matches!(fit_preprocessor(&ds), Err(DataError::AllColumnsDropped)));
    }

    #[test]
    fn labels_are_encoded() {
        let schema = Schema::new(vec![
            ColumnSchema::numerical("x"),
            ColumnSchema::label("y", Task::Multiclass, Some(3)),
        ])
        .unwrap();
        let ds = TabularDataset::new(
            schema,
            vec![
                ColumnData::Numeric(vec![Some(1.0), Some(2.0)]),
                text(&[Some("2"), Some("0")]),
            ],
        )
        .unwrap();
        let fm = transform(&fit_preprocessor(&ds).unwrap(), &ds).unwrap();
        assert_eq!(
            fm.labels(),
            Some(&Labels::Classes {
                values: vec![2, 0],
                n_classes: 3
            })
        );
    }

    #[test]
    fn schema_mismatch_is_rejected() {
        let prep = fit_preprocessor(&numeric(&[Some(1.0)])).unwrap();
        let other_schema = Schema::new(vec![ColumnSchema::numerical("y")]).unwrap();
        let other = TabularDataset::new(other_schema, vec![ColumnData::Numeric(vec![Some(1.0)])]).unwrap();
        assert!(matches!(transform(&prep, &other), Err(DataError::SchemaMismatch(_))));
    }
}
