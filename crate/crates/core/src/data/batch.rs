use rand::seq::SliceRandom;
use rand::Rng;

use super::DataError;

/// Row indices of two mini-batches; position `i` of `first` pairs with
/// position `i` of `second`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BatchPair {
    pub first: Vec<usize>,
    pub second: Vec<usize>,
}

impl BatchPair {
    pub fn len(&self) -> usize {
        self.first.len()
    }

    pub fn is_empty(&self) -> bool {
        self.first.is_empty()
    }
}

/// One epoch of paired batches from two independent permutations of `0..n`.
pub fn sample_batch_pairs<R: Rng + ?Sized>(n: usize, batch_size: usize, rng: &mut R) -> Result<Vec<BatchPair>, DataError> {
    if n < 2 {
        return Err(DataError::TooFewRows { needed: 2, got: n });
    }
    if batch_size == 0 {
        return Err(DataError::InvalidArgument("batch size must be positive".into()));
    }
    let mut first: Vec<usize> = (0..n).collect();
    let mut second = first.clone();
    first.shuffle(rng);
    second.shuffle(rng);
    Ok(first
        .chunks(batch_size)
        .zip(second.chunks(batch_size))
        .map(|(a, b)| {
            let len = a.len().min(b.len());
            BatchPair {
                first: a[..len].to_vec(),
                second: b[..len].to_vec(),
            }
        })
        .collect())
}

/// Shuffled split of `0..n` into (train, held-out) with `round(n · fraction)`
/// held-out rows.
pub fn train_test_split<R: Rng + ?Sized>(n: usize, fraction: f64, rng: &mut R) -> (Vec<usize>, Vec<usize>) {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let held = ((n as f64) * fraction.clamp(0.0, 1.0)).round() as usize;
    let test = idx.split_off(n - held);
    (idx, test)
}
