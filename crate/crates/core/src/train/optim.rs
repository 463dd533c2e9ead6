use super::{Result, TrainError};
use crate::tensor::Tensor;

pub const RMSPROP_DECAY: f64 = 0.9;
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const EPSILON: f64 = 1e-8;

fn check(params: &[Tensor], grads: &[Tensor], state: &[Tensor]) -> Result<()> {
    if params.len() != grads.len() || params.len() != state.len() {
        return Err(TrainError::ShapeMismatch(format!(
            "{} parameters, {} gradients, {} accumulators",
            params.len(),
            grads.len(),
            state.len()
        )));
    }
    for (i, (p, g)) in params.iter().zip(grads).enumerate() {
        if p.shape() != g.shape() || p.shape() != state[i].shape() {
            return Err(TrainError::ShapeMismatch(format!(
                "parameter {i} has shape {:?}, gradient {:?}",
                p.shape(),
                g.shape()
            )));
        }
        if !g.is_finite() {
            return Err(TrainError::NonFiniteGradient(format!("parameter {i}")));
        }
    }
    Ok(())
}

/// RMSprop with a squared-gradient moving average.
#[derive(Clone, Debug, PartialEq)]
pub struct RmsProp {
    pub acc: Vec<Tensor>,
}

impl RmsProp {
    pub fn new(params: &[Tensor]) -> Self {
        Self {
            acc: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
        }
    }

    /// `acc ← 0.9·acc + 0.1·g²; θ ← θ − lr·g / (√acc + ε)`, then zeroes `grads`.
    /// A non-finite gradient aborts the step before anything changes.
    pub fn step(&mut self, params: &mut [Tensor], grads: &mut [Tensor], lr: f64) -> Result<()> {
        check(params, grads, &self.acc)?;
        for ((p, g), a) in params.iter_mut().zip(grads.iter_mut()).zip(&mut self.acc) {
            for ((pv, gv), av) in p.values_mut().iter_mut().zip(g.values()).zip(a.values_mut()) {
                *av = RMSPROP_DECAY * *av + (1.0 - RMSPROP_DECAY) * gv * gv;
                *pv -= lr * gv / (av.sqrt() + EPSILON);
            }
            g.fill_zero();
        }
        Ok(())
    }
}

/// Adam with bias-corrected moments.
#[derive(Clone, Debug, PartialEq)]
pub struct Adam {
    pub first: Vec<Tensor>,
    pub second: Vec<Tensor>,
    pub steps: u64,
}

impl Adam {
    pub fn new(params: &[Tensor]) -> Self {
        let zeros: Vec<Tensor> = params.iter().map(|p| Tensor::zeros(p.shape())).collect();
        Self {
            first: zeros.clone(),
            second: zeros,
            steps: 0,
        }
    }

    pub fn step(&mut self, params: &mut [Tensor], grads: &mut [Tensor], lr: f64) -> Result<()> {
        check(params, grads, &self.first)?;
        self.steps += 1;
        let c1 = 1.0 - ADAM_BETA1.powf(self.steps as f64);
        let c2 = 1.0 - ADAM_BETA2.powf(self.steps as f64);
        for (i, (p, g)) in params.iter_mut().zip(grads.iter_mut()).enumerate() {
            let m = self.first[i].values_mut();
            let v = self.second[i].values_mut();
            for (k, (pv, gv)) in p.values_mut().iter_mut().zip(g.values()).enumerate() {
                m[k] = ADAM_BETA1 * m[k] + (1.0 - ADAM_BETA1) * gv;
                v[k] = ADAM_BETA2 * v[k] + (1.0 - ADAM_BETA2) * gv * gv;
                *pv -= lr * (m[k] / c1) / ((v[k] / c2).sqrt() + EPSILON);
            }
            g.fill_zero();
        }
        Ok(())
    }
}
