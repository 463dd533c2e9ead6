use serde::{Deserialize, Serialize};

use super::{EvalError, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub lr: f64,
    pub iterations: usize,
    /// L2 penalty on the weights (not the biases).
    pub l2: f64,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        Self {
            lr: 0.1,
            iterations: 500,
            l2: 1e-4,
        }
    }
}

/// Multinomial logistic regression.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProbeModel {
    /// `n_classes × width`.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub config: ProbeConfig,
    /// Set when training saw a single class; that class is always predicted.
    pub constant: Option<usize>,
}

fn softmax_into(logits: &mut [f64]) {
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in logits.iter_mut() {
        *v = (*v - top).exp();
        total += *v;
    }
    logits.iter_mut().for_each(|v| *v /= total);
}

/// Fits a probe by full-batch gradient descent on mean cross-entropy plus
/// `l2/2 · ‖W‖²`, starting from zero weights.
pub fn train_probe(features: &[Vec<f64>], labels: &[usize], n_classes: usize, config: &ProbeConfig) -> Result<ProbeModel> {
    let n = features.len();
    if n < 2 {
        return Err(EvalError::TooFewSamples { needed: 2, got: n });
    }
    if labels.len() != n {
        return Err(EvalError::LengthMismatch(n, labels.len()));
    }
    let width = features[0].len();
    if width == 0 {
        return Err(EvalError::Unsupported("probe needs at least one feature".into()));
    }
    if let Some(row) = features.iter().find(|r| r.len() != width) {
        return Err(EvalError::WidthMismatch { expected: width, got: row.len() });
    }
    if let Some(&bad) = labels.iter().find(|&&l| l >= n_classes) {
        return Err(EvalError::InvalidLabel { label: bad, n_classes });
    }
    let mut model = ProbeModel {
        weights: vec![vec![0.0; width]; n_classes],
        bias: vec![0.0; n_classes],
        config: config.clone(),
        constant: None,
    };
    if labels.iter().all(|&l| l == labels[0]) {
        model.constant = Some(labels[0]);
        return Ok(model);
    }
    let mut grad_w = vec![vec![0.0; width]; n_classes];
    let mut grad_b = vec![0.0; n_classes];
    let mut p = vec![0.0; n_classes];
    for _ in 0..config.iterations {
        grad_w.iter_mut().for_each(|r| r.fill(0.0));
        grad_b.fill(0.0);
        for (x, &y) in features.iter().zip(labels) {
            model.logits_into(x, &mut p);
            softmax_into(&mut p);
            p[y] -= 1.0;
            for (k, &pk) in p.iter().enumerate() {
                grad_b[k] += pk;
                for (g, xv) in grad_w[k].iter_mut().zip(x) {
                    *g += pk * xv;
                }
            }
        }
        let inv = 1.0 / n as f64;
        for k in 0..n_classes {
            for (w, g) in model.weights[k].iter_mut().zip(&grad_w[k]) {
                *w -= config.lr * (g * inv + config.l2 * *w);
            }
            model.bias[k] -= config.lr * grad_b[k] * inv;
        }
    }
    Ok(model)
}

impl ProbeModel {
    pub fn n_classes(&self) -> usize {
        self.bias.len()
    }

    fn logits_into(&self, x: &[f64], out: &mut [f64]) {
        for (k, o) in out.iter_mut().enumerate() {
            *o = self.bias[k] + self.weights[k].iter().zip(x).map(|(w, v)| w * v).sum::<f64>();
        }
    }

    fn check(&self, x: &[f64]) -> Result<()> {
        let width = self.weights[0].len();
        if x.len() != width {
            return Err(EvalError::WidthMismatch { expected: width, got: x.len() });
        }
        Ok(())
    }

    /// Class probabilities.
    pub fn probabilities(&self, x: &[f64]) -> Result<Vec<f64>> {
        self.check(x)?;
        let mut p = vec![0.0; self.n_classes()];
        if let Some(c) = self.constant {
            p[c] = 1.0;
            return Ok(p);
        }
        self.logits_into(x, &mut p);
        softmax_into(&mut p);
        Ok(p)
    }

    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        self.check(x)?;
        if let Some(c) = self.constant {
            return Ok(c);
        }
        let mut logits = vec![0.0; self.n_classes()];
        self.logits_into(x, &mut logits);
        Ok((0..logits.len()).fold(0, |b, k| if logits[k] > logits[b] { k } else { b }))
    }

    pub fn predict_all(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.predict(r)).collect()
    }

    /// Probability of class 1, for binary AUC.
    pub fn positive_scores(&self, rows: &[Vec<f64>]) -> Result<Vec<f64>> {
        if self.n_classes() != 2 {
            return Err(EvalError::Unsupported("positive-class scores need a binary probe".into()));
        }
        rows.iter().map(|r| self.probabilities(r).map(|p| p[1])).collect()
    }
}
