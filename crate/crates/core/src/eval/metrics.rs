use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MetricKind {
    Accuracy,
    Auc,
    Rmse,
}

impl MetricKind {
    pub fn name(self) -> &'static str {
        match self {
            MetricKind::Accuracy => "accuracy",
            MetricKind::Auc => "auc",
            MetricKind::Rmse => "rmse",
        }
    }
}

fn same_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(EvalError::LengthMismatch(a, b));
    }
    if a == 0 {
        return Err(EvalError::TooFewSamples { needed: 1, got: 0 });
    }
    Ok(())
}

pub fn accuracy(predicted: &[usize], labels: &[usize]) -> Result<f64> {
    same_len(predicted.len(), labels.len())?;
    let hits = predicted.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Mann–Whitney AUC for binary labels, each tied positive/negative pair
/// counting one half.
pub fn auc(scores: &[f64], labels: &[usize]) -> Result<f64> {
    same_len(scores.len(), labels.len())?;
    if let Some(&bad) = labels.iter().find(|&&l| l > 1) {
        return Err(EvalError::InvalidLabel { label: bad, n_classes: 2 });
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::Unsupported("scores must be finite".into()));
    }
    let n_pos = labels.iter().filter(|&&l| l == 1).count();
    let n_neg = labels.len() - n_pos;
    if n_pos == 0 || n_neg == 0 {
        return Err(EvalError::SingleClass);
    }
    // Midranks over the sorted scores; the positive rank sum gives U.
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].partial_cmp(&scores[b]).unwrap_or(Ordering::Equal));
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        // ranks i+1 ..= j+1, doubled to stay in integers
        let twice_mid = (i + j + 2) as f64;
        let pos_in_group = order[i..=j].iter().filter(|&&k| labels[k] == 1).count();
        rank_sum += twice_mid * pos_in_group as f64;
        i = j + 1;
    }
    let pos = n_pos as f64;
    let u_twice = rank_sum - pos * (pos + 1.0);
    Ok(u_twice / (2.0 * pos * n_neg as f64))
}

pub fn rmse(predicted: &[f64], targets: &[f64]) -> Result<f64> {
    same_len(predicted.len(), targets.len())?;
    let sq: f64 = predicted.iter().zip(targets).map(|(p, t)| (p - t) * (p - t)).sum();
    Ok((sq / targets.len() as f64).sqrt())
}

fn as_class(v: f64) -> Result<usize> {
    if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
        Ok(v as usize)
    } else {
        Err(EvalError::Unsupported(format!("{v} is not a class index")))
    }
}

/// Scores `predictions` against `labels`. For accuracy, predictions are
/// class indices; for AUC, real-valued scores for class 1.
pub fn metric(predictions: &[f64], labels: &[f64], kind: MetricKind) -> Result<f64> {
    match kind {
        MetricKind::Rmse => rmse(predictions, labels),
        MetricKind::Accuracy => {
            let p = predictions.iter().map(|&v| as_class(v)).collect::<Result<Vec<_>>>()?;
            let l = labels.iter().map(|&v| as_class(v)).collect::<Result<Vec<_>>>()?;
            accuracy(&p, &l)
        }
        MetricKind::Auc => {
            let l = labels.iter().map(|&v| as_class(v)).collect::<Result<Vec<_>>>()?;
            auc(predictions, &l)
        }
    }
}
