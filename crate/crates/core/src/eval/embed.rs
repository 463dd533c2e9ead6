use std::fmt::Write as _;

use rand::seq::SliceRandom;

use super::{EvalError, Result};
use crate::data::{FeatureMatrix, Labels};
use crate::model::{ModelConfig, SwitchTabModel};
use crate::train::{recon_loss_value, ReconValues};
use crate::util::seeded_rng;

const CHUNK: usize = 256;

/// Per-row encodings `z`, salient `s` and mutual `m` parts.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingTable {
    pub row_ids: Vec<usize>,
    pub z: Vec<Vec<f64>>,
    pub s: Vec<Vec<f64>>,
    pub m: Vec<Vec<f64>>,
    pub labels: Option<Labels>,
}

impl EmbeddingTable {
    pub fn len(&self) -> usize {
        self.row_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.row_ids.is_empty()
    }

    /// `row_id, z_*, s_*, m_*[, label]`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("row_id");
        let widths = [("z", &self.z), ("s", &self.s), ("m", &self.m)];
        for (prefix, rows) in widths {
            for j in 0..rows.first().map_or(0, Vec::len) {
                write!(out, ",{prefix}_{j}").unwrap();
            }
        }
        if self.labels.is_some() {
            out.push_str(",label");
        }
        out.push('\n');
        for i in 0..self.len() {
            write!(out, "{}", self.row_ids[i]).unwrap();
            for v in self.z[i].iter().chain(&self.s[i]).chain(&self.m[i]) {
                write!(out, ",{v}").unwrap();
            }
            if let Some(l) = &self.labels {
                write!(out, ",{}", l.display(i)).unwrap();
            }
            out.push('\n');
        }
        out
    }
}

fn split_rows(t: &crate::tensor::Tensor) -> Vec<Vec<f64>> {
    let w = t.shape()[1];
    t.values().chunks(w).map(<[f64]>::to_vec).collect()
}

/// Encodes and decouples every (uncorrupted) row of `matrix`, in order.
pub fn embed(model: &SwitchTabModel, matrix: &FeatureMatrix) -> Result<EmbeddingTable> {
    let expected = model.config().m;
    if matrix.m() != expected {
        return Err(EvalError::WidthMismatch { expected, got: matrix.m() });
    }
    let mut table = EmbeddingTable {
        row_ids: (0..matrix.n()).collect(),
        z: Vec::with_capacity(matrix.n()),
        s: Vec::with_capacity(matrix.n()),
        m: Vec::with_capacity(matrix.n()),
        labels: matrix.labels().cloned(),
    };
    let rows: Vec<usize> = (0..matrix.n()).collect();
    for chunk in rows.chunks(CHUNK) {
        let z = model.encode(&matrix.batch(chunk))?;
        let (s, m) = model.decouple(&z)?;
        table.z.extend(split_rows(&z));
        table.s.extend(split_rows(&s));
        table.m.extend(split_rows(&m));
    }
    Ok(table)
}

/// `x ⊕ s`, raw features first.
pub fn concat_plug_and_play(x: &[f64], s: &[f64], config: &ModelConfig) -> Result<Vec<f64>> {
    if x.len() != config.m {
        return Err(EvalError::WidthMismatch { expected: config.m, got: x.len() });
    }
    if s.len() != config.d_e {
        return Err(EvalError::WidthMismatch {
            expected: config.d_e,
            got: s.len(),
        });
    }
    Ok([x, s].concat())
}

/// Row-wise [`concat_plug_and_play`] of a matrix and its embedding table.
pub fn concat_rows(matrix: &FeatureMatrix, table: &EmbeddingTable, config: &ModelConfig) -> Result<Vec<Vec<f64>>> {
    if table.len() != matrix.n() {
        return Err(EvalError::LengthMismatch(matrix.n(), table.len()));
    }
    (0..matrix.n())
        .map(|i| concat_plug_and_play(matrix.row(i), &table.s[i], config))
        .collect()
}

/// Reconstruction losses on uncorrupted rows of `matrix`, each paired with
/// a row drawn by a seeded permutation. Switched terms are always computed.
pub fn held_out_reconstruction(model: &SwitchTabModel, matrix: &FeatureMatrix, seed: u64) -> Result<ReconValues> {
    let expected = model.config().m;
    if matrix.m() != expected {
        return Err(EvalError::WidthMismatch { expected, got: matrix.m() });
    }
    if matrix.n() < 2 {
        return Err(EvalError::TooFewSamples { needed: 2, got: matrix.n() });
    }
    let first: Vec<usize> = (0..matrix.n()).collect();
    let mut second = first.clone();
    second.shuffle(&mut seeded_rng(seed));
    let x1 = matrix.batch(&first);
    let x2 = matrix.batch(&second);
    let out = model.forward_pair(&x1, &x2)?;
    Ok(recon_loss_value(&x1, &x2, &out, true)?)
}
