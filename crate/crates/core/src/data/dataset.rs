use std::io::{Read, Write};
use std::path::Path;

use super::schema::{ColumnKind, Schema, Task};
use super::DataError;

/// Default tokens treated as a missing cell.
pub const DEFAULT_MISSING_TOKENS: [&str; 4] = ["", "NA", "NaN", "null"];

/// Raw cells of one column; `None` is the missing marker.
#[derive(Clone, Debug, PartialEq)]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Text(Vec<Option<String>>),
}

impl ColumnData {
    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Text(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, rows: &[usize]) -> Self {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(rows.iter().map(|&r| v[r]).collect()),
            ColumnData::Text(v) => ColumnData::Text(rows.iter().map(|&r| v[r].clone()).collect()),
        }
    }

    fn cell_string(&self, row: usize) -> String {
        match self {
            ColumnData::Numeric(v) => v[row].map(|x| x.to_string()).unwrap_or_default(),
            ColumnData::Text(v) => v[row].clone().unwrap_or_default(),
        }
    }
}

/// Whether a column of this declaration stores parsed numbers.
fn is_numeric(kind: ColumnKind, task: Option<Task>) -> bool {
    match kind {
        ColumnKind::Numerical => true,
        ColumnKind::Categorical => false,
        ColumnKind::Label => task == Some(Task::Regression),
    }
}

/// Schema-typed raw rows, stored column-wise.
#[derive(Clone, Debug, PartialEq)]
pub struct TabularDataset {
    schema: Schema,
    columns: Vec<ColumnData>,
    n: usize,
}

impl TabularDataset {
    pub fn new(schema: Schema, columns: Vec<ColumnData>) -> Result<Self, DataError> {
        schema.validate()?;
        if columns.len() != schema.columns.len() {
            return Err(DataError::SchemaMismatch(format!(
                "{} columns for a {}-column schema",
                columns.len(),
                schema.columns.len()
            )));
        }
        let n = columns[0].len();
        for (col, decl) in columns.iter().zip(&schema.columns) {
            if col.len() != n {
                return Err(DataError::InvalidArgument("columns have different lengths".into()));
            }
            if matches!(col, ColumnData::Numeric(_)) != is_numeric(decl.kind, decl.task) {
                return Err(DataError::SchemaMismatch(format!("column {:?} has the wrong cell type", decl.name)));
            }
        }
        if n == 0 {
            return Err(DataError::EmptyFile);
        }
        Ok(Self { schema, columns, n })
    }

    pub fn schema(&self) -> &Schema {
        &self.schema
    }

    pub fn columns(&self) -> &[ColumnData] {
        &self.columns
    }

    pub fn column(&self, i: usize) -> &ColumnData {
        &self.columns[i]
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn select_rows(&self, rows: &[usize]) -> Result<Self, DataError> {
        if rows.iter().any(|&r| r >= self.n) {
            return Err(DataError::InvalidArgument("row index out of range".into()));
        }
        Self::new(self.schema.clone(), self.columns.iter().map(|c| c.select(rows)).collect())
    }

    /// Reads a CSV with a header row. Columns not named in `schema` are ignored.
    pub fn from_csv_reader<R: Read>(reader: R, schema: &Schema, missing_tokens: &[String]) -> Result<Self, DataError> {
        schema.validate()?;
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(true)
            .trim(csv::Trim::All)
            .from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.is_empty() {
            return Err(DataError::EmptyFile);
        }
        let mut positions = Vec::with_capacity(schema.columns.len());
        for col in &schema.columns {
            let pos = headers
                .iter()
                .position(|h| h == col.name)
                .ok_or_else(|| DataError::ColumnNotFound(col.name.clone()))?;
            positions.push(pos);
        }
        let mut columns: Vec<ColumnData> = schema
            .columns
            .iter()
            .map(|c| {
                if is_numeric(c.kind, c.task) {
                    ColumnData::Numeric(Vec::new())
                } else {
                    ColumnData::Text(Vec::new())
                }
            })
            .collect();
        for (row_idx, record) in rdr.records().enumerate() {
            let record = record?;
            for ((col, &pos), decl) in columns.iter_mut().zip(&positions).zip(&schema.columns) {
                let raw = record.get(pos).unwrap_or("");
                let missing = missing_tokens.iter().any(|t| t == raw);
                match col {
                    ColumnData::Numeric(cells) => {
                        if missing {
                            cells.push(None);
                        } else {
                            let v: f64 = raw.parse().map_err(|_| DataError::Parse {
                                column: decl.name.clone(),
                                row: row_idx + 1,
                                value: raw.to_string(),
                            })?;
                            if !v.is_finite() {
                                return Err(DataError::Parse {
                                    column: decl.name.clone(),
                                    row: row_idx + 1,
                                    value: raw.to_string(),
                                });
                            }
                            cells.push(Some(v));
                        }
                    }
                    ColumnData::Text(cells) => cells.push((!missing).then(|| raw.to_string())),
                }
            }
        }
        if columns[0].is_empty() {
            return Err(DataError::EmptyFile);
        }
        Self::new(schema.clone(), columns)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<(), DataError> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(self.schema.columns.iter().map(|c| c.name.as_str()))?;
        for row in 0..self.n {
            w.write_record(self.columns.iter().map(|c| c.cell_string(row)))?;
        }
        w.flush().map_err(|e| DataError::io(Path::new("<csv>"), e))?;
        Ok(())
    }
}

/// Loads a CSV file typed by `schema`.
pub fn load_csv(path: &Path, schema: &Schema, missing_tokens: &[String]) -> Result<TabularDataset, DataError> {
    let file = std::fs::File::open(path).map_err(|e| DataError::io(path, e))?;
    TabularDataset::from_csv_reader(file, schema, missing_tokens)
}

pub fn default_missing_tokens() -> Vec<String> {
    DEFAULT_MISSING_TOKENS.iter().map(|s| s.to_string()).collect()
}
