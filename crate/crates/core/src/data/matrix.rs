use std::io::Write;

use serde::{Deserialize, Serialize};

use super::DataError;
use crate::tensor::Tensor;

/// Encoded targets aligned with matrix rows.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum Labels {
    Classes { values: Vec<usize>, n_classes: usize },
    Regression { values: Vec<f64> },
}

impl Labels {
    pub fn len(&self) -> usize {
        match self {
            Labels::Classes { values, .. } => values.len(),
            Labels::Regression { values } => values.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn select(&self, rows: &[usize]) -> Self {
        match self {
            Labels::Classes { values, n_classes } => Labels::Classes {
                values: rows.iter().map(|&r| values[r]).collect(),
                n_classes: *n_classes,
            },
            Labels::Regression { values } => Labels::Regression {
                values: rows.iter().map(|&r| values[r]).collect(),
            },
        }
    }

    /// Label of row `i` rendered for CSV output.
    pub fn display(&self, i: usize) -> String {
        match self {
            Labels::Classes { values, .. } => values[i].to_string(),
            Labels::Regression { values } => values[i].to_string(),
        }
    }
}

/// Fully numeric, scaled `n × M` feature matrix.
///
/// `pools` holds, per column, the transformed training values that feature
/// corruption samples from.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureMatrix {
    n: usize,
    m: usize,
    values: Vec<f64>,
    labels: Option<Labels>,
    pools: Vec<Vec<f64>>,
    column_names: Vec<String>,
}

impl FeatureMatrix {
    /// Builds a matrix whose pools are its own columns.
    pub fn from_rows(rows: &[Vec<f64>], labels: Option<Labels>) -> Result<Self, DataError> {
        let m = rows.first().map_or(0, Vec::len);
        let values = rows.concat();
        let names = (0..m).map(|j| format!("x{j}")).collect();
        let mut out = Self::new(rows.len(), m, values, labels, Vec::new(), names)?;
        out.pools = (0..m).map(|j| out.column(j)).collect();
        Ok(out)
    }

    pub fn new(
        n: usize,
        m: usize,
        values: Vec<f64>,
        labels: Option<Labels>,
        pools: Vec<Vec<f64>>,
        column_names: Vec<String>,
    ) -> Result<Self, DataError> {
        if n == 0 || m == 0 {
            return Err(DataError::InvalidArgument("feature matrix must be non-empty".into()));
        }
        if values.len() != n * m || column_names.len() != m {
            return Err(DataError::InvalidArgument("feature matrix dimensions disagree".into()));
        }
        if let Some(bad) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(DataError::InvalidArgument(format!("feature value {bad} outside [0, 1]")));
        }
        if labels.as_ref().is_some_and(|l| l.len() != n) {
            return Err(DataError::InvalidArgument("label count differs from row count".into()));
        }
        if !pools.is_empty() && (pools.len() != m || pools.iter().any(Vec::is_empty)) {
            return Err(DataError::InvalidArgument("one non-empty pool per column required".into()));
        }
        Ok(Self {
            n,
            m,
            values,
            labels,
            pools,
            column_names,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Post-encoding feature dimension.
    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        (0..self.n).map(|i| self.values[i * self.m + j]).collect()
    }

    pub fn labels(&self) -> Option<&Labels> {
        self.labels.as_ref()
    }

    pub fn pools(&self) -> &[Vec<f64>] {
        &self.pools
    }

    pub fn column_names(&self) -> &[String] {
        &self.column_names
    }

    /// Rows `rows` as a `[rows.len(), M]` tensor.
    pub fn batch(&self, rows: &[usize]) -> Tensor {
        let mut values = Vec::with_capacity(rows.len() * self.m);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Tensor::new(vec![rows.len(), self.m], values).expect("batch shape")
    }

    pub fn to_tensor(&self) -> Tensor {
        Tensor::new(vec![self.n, self.m], self.values.clone()).expect("matrix shape")
    }

    /// Subset of rows; pools are kept (they describe the training marginal).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, DataError> {
        if rows.is_empty() || rows.iter().any(|&r| r >= self.n) {
            return Err(DataError::InvalidArgument("invalid row selection".into()));
        }
        let mut values = Vec::with_capacity(rows.len() * self.m);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Ok(Self {
            n: rows.len(),
            m: self.m,
            values,
            labels: self.labels.as_ref().map(|l| l.select(rows)),
            pools: self.pools.clone(),
            column_names: self.column_names.clone(),
        })
    }

    /// CSV with one header row of derived column names, plus `label` when present.
    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header: Vec<String> = self.column_names.clone();
        if self.labels.is_some() {
            header.push("label".into());
        }
        w.write_record(&header)?;
        for i in 0..self.n {
            let mut rec: Vec<String> = self.row(i).iter().map(|v| v.to_string()).collect();
            if let Some(l) = &self.labels {
                rec.push(l.display(i));
            }
            w.write_record(&rec)?;
        }
        w.flush().map_err(|e| DataError::io(std::path::Path::new("<csv>"), e))?;
        Ok(())
    }
}
