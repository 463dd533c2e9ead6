//! Finite-difference checks of every operation on random inputs.

use rand::Rng;
use serde::Serialize;

use super::{grad_check, GradReport, Graph, OpKind, Result, Tensor, Var};
use crate::util::seeded_rng;

#[derive(Clone, Debug, Serialize)]
pub struct OpCheck {
    pub op: String,
    pub seed: u64,
    pub report: GradReport,
}

/// Reduces `y` to a scalar through a fixed random weighting, so that
/// sum-preserving ops (softmax, mean) still have informative gradients.
fn weighted_mean(g: &mut Graph, y: Var, weights: &Tensor) -> Result<Var> {
    let w = g.constant(weights.clone());
    let prod = g.mul(y, w)?;
    g.mean(prod, None)
}

fn random<R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor {
    let n: usize = shape.iter().product();
    Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random_range(-1.0..1.0)).collect()).expect("valid shape")
}

/// Entries with magnitude in `[0.2, 1]` and random sign, away from kinks.
fn away_from_zero<R: Rng>(rng: &mut R, shape: &[usize]) -> Tensor {
    let mut t = random(rng, shape);
    for v in t.values_mut() {
        let mag = 0.2 + 0.8 * v.abs();
        *v = if rng.random_bool(0.5) { mag } else { -mag };
    }
    t
}

/// The op kinds covered by [`op_gradchecks`], with the input shapes used.
pub const CHECKED_OPS: &[&str] = &[
    "matmul", "matmul_batched", "add", "add_broadcast", "sub", "mul", "mul_broadcast", "scale", "sigmoid", "relu",
    "square", "sqrt", "softmax", "log_softmax", "mean", "mean_axis", "concat", "slice", "transpose", "transpose_3d",
    "layer_norm", "reshape",
];

fn case<R: Rng>(name: &str, rng: &mut R) -> (Vec<Tensor>, OpKind, Vec<usize>) {
    use OpKind::*;
    match name {
        "matmul" => (vec![random(rng, &[3, 4]), random(rng, &[4, 2])], MatMul, vec![3, 2]),
        "matmul_batched" => (vec![random(rng, &[2, 3, 4]), random(rng, &[2, 4, 3])], MatMul, vec![2, 3, 3]),
        "add" => (vec![random(rng, &[3, 4]), random(rng, &[3, 4])], Add, vec![3, 4]),
        "add_broadcast" => (vec![random(rng, &[2, 3, 4]), random(rng, &[4])], Add, vec![2, 3, 4]),
        "sub" => (vec![random(rng, &[3, 4]), random(rng, &[3, 4])], Sub, vec![3, 4]),
        "mul" => (vec![random(rng, &[3, 4]), random(rng, &[3, 4])], Mul, vec![3, 4]),
        "mul_broadcast" => (vec![random(rng, &[2, 3, 4]), random(rng, &[3, 4])], Mul, vec![2, 3, 4]),
        "scale" => (vec![random(rng, &[3, 4])], Scale(-1.7), vec![3, 4]),
        "sigmoid" => (vec![random(rng, &[3, 4])], Sigmoid, vec![3, 4]),
        "relu" => (vec![away_from_zero(rng, &[3, 4])], Relu, vec![3, 4]),
        "square" => (vec![random(rng, &[3, 4])], Square, vec![3, 4]),
        "sqrt" => {
            let mut t = random(rng, &[3, 4]);
            t.values_mut().iter_mut().for_each(|v| *v = 0.5 + v.abs());
            (vec![t], Sqrt, vec![3, 4])
        }
        "softmax" => (vec![random(rng, &[3, 4])], Softmax, vec![3, 4]),
        "log_softmax" => (vec![random(rng, &[3, 4])], LogSoftmax, vec![3, 4]),
        "mean" => (vec![random(rng, &[3, 4])], Mean(None), vec![]),
        "mean_axis" => (vec![random(rng, &[2, 3, 4])], Mean(Some(1)), vec![2, 4]),
        "concat" => (vec![random(rng, &[3, 2]), random(rng, &[3, 3])], Concat, vec![3, 5]),
        "slice" => (vec![random(rng, &[3, 5])], Slice { start: 1, len: 3 }, vec![3, 3]),
        "transpose" => (vec![random(rng, &[3, 4])], Transpose, vec![4, 3]),
        "transpose_3d" => (vec![random(rng, &[2, 3, 4])], Transpose, vec![2, 4, 3]),
        "layer_norm" => {
            let mut gain = random(rng, &[4]);
            gain.values_mut().iter_mut().for_each(|v| *v += 1.0);
            (vec![random(rng, &[2, 3, 4]), gain, random(rng, &[4])], LayerNorm, vec![2, 3, 4])
        }
        "reshape" => (vec![random(rng, &[2, 6])], Reshape(vec![3, 4]), vec![3, 4]),
        other => unreachable!("unknown op case {other}"),
    }
}

/// Gradient checks of every case in [`CHECKED_OPS`] for `seed`.
pub fn op_gradchecks(seed: u64, epsilon: f64, tolerance: f64) -> Result<Vec<OpCheck>> {
    let mut rng = seeded_rng(seed);
    let mut out = Vec::with_capacity(CHECKED_OPS.len());
    for &name in CHECKED_OPS {
        let (inputs, kind, out_shape) = case(name, &mut rng);
        let weights = if out_shape.is_empty() { Tensor::scalar(1.3) } else { away_from_zero(&mut rng, &out_shape) };
        let build = |g: &mut Graph, p: &[Var]| -> Result<Var> {
            let y = g.apply(kind.clone(), p)?;
            weighted_mean(g, y, &weights)
        };
        let report = grad_check(build, &inputs, epsilon, tolerance)?;
        out.push(OpCheck {
            op: name.to_string(),
            seed,
            report,
        });
    }
    Ok(out)
}
