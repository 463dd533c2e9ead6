use rand::seq::index::sample;
use rand::Rng;

use super::DataError;
use crate::tensor::Tensor;

/// A corrupted view of a batch.
#[derive(Clone, Debug, PartialEq)]
pub struct CorruptionResult {
    pub values: Tensor,
    /// Sorted corrupted column indices, one set per row.
    pub mask: Vec<Vec<usize>>,
    pub t: usize,
}

/// `floor(ratio · M)`, tolerant of representation error in `ratio · M`.
pub fn corrupted_count(ratio: f64, m: usize) -> usize {
    ((ratio * m as f64) + 1e-9).floor().min(m as f64) as usize
}

/// Replaces `floor(ratio · M)` distinct, uniformly chosen entries of each row
/// with values drawn uniformly from that column's empirical pool.
pub fn corrupt<R: Rng + ?Sized>(
    batch: &Tensor,
    pools: &[Vec<f64>],
    ratio: f64,
    rng: &mut R,
) -> Result<CorruptionResult, DataError> {
    if !(0.0..=1.0).contains(&ratio) {
        return Err(DataError::InvalidRatio(ratio));
    }
    let &[rows, m] = batch.shape() else {
        return Err(DataError::InvalidArgument("corrupt expects a 2-D batch".into()));
    };
    if pools.len() != m || pools.iter().any(Vec::is_empty) {
        return Err(DataError::InvalidArgument("one non-empty pool per column required".into()));
    }
    let t = corrupted_count(ratio, m);
    let mut values = batch.clone();
    let mut mask = Vec::with_capacity(rows);
    for i in 0..rows {
        let mut cols = sample(rng, m, t).into_vec();
        cols.sort_unstable();
        for &j in &cols {
            let pool = &pools[j];
            values.values_mut()[i * m + j] = pool[rng.random_range(0..pool.len())];
        }
        mask.push(cols);
    }
    Ok(CorruptionResult { values, mask, t })
}
