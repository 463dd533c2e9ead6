use super::kernels::gemm;
use super::{Result, Tensor, TensorError, LAYER_NORM_EPS};

/// Handle to a node recorded on a [`Graph`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(pub(crate) usize);

/// The closed set of differentiable operations.
///
/// Shape rules:
/// - `MatMul`: `[.., m, k] x [k, n] -> [.., m, n]` (shared right operand), or
///   `[b, m, k] x [b, k, n] -> [b, m, n]` (batched).
/// - `Add`, `Sub`, `Mul`: the right operand's shape must equal the left's or
///   be a suffix of it; it is broadcast over the leading axes.
/// - `Softmax`, `LogSoftmax`, `Concat`, `Slice`, `LayerNorm`: act on the last axis.
///   `LayerNorm` takes `(x, gain, offset)` with gain/offset of shape `[d]`.
/// - `Mean(None)` reduces to a scalar; `Mean(Some(axis))` removes that axis.
/// - `Transpose` swaps the last two axes of a 2-D or 3-D tensor.
#[derive(Clone, Debug, PartialEq)]
pub enum OpKind {
    Leaf,
    MatMul,
    Add,
    Sub,
    Mul,
    Scale(f64),
    Sigmoid,
    Relu,
    Square,
    Sqrt,
    Softmax,
    LogSoftmax,
    Mean(Option<usize>),
    Concat,
    Slice { start: usize, len: usize },
    Transpose,
    LayerNorm,
    Reshape(Vec<usize>),
}

impl OpKind {
    pub fn name(&self) -> &'static str {
        match self {
            OpKind::Leaf => "leaf",
            OpKind::MatMul => "matmul",
            OpKind::Add => "add",
            OpKind::Sub => "subtract",
            OpKind::Mul => "multiply",
            OpKind::Scale(_) => "scale",
            OpKind::Sigmoid => "sigmoid",
            OpKind::Relu => "relu",
            OpKind::Square => "square",
            OpKind::Sqrt => "sqrt",
            OpKind::Softmax => "softmax",
            OpKind::LogSoftmax => "log_softmax",
            OpKind::Mean(_) => "mean",
            OpKind::Concat => "concat",
            OpKind::Slice { .. } => "slice",
            OpKind::Transpose => "transpose",
            OpKind::LayerNorm => "layer_norm",
            OpKind::Reshape(_) => "reshape",
        }
    }
}

pub(super) struct Node {
    pub(super) value: Tensor,
    pub(super) grad: Option<Tensor>,
    pub(super) kind: OpKind,
    pub(super) parents: Vec<Var>,
    pub(super) requires_grad: bool,
}

/// Append-only record of a computation. Nodes are created in topological
/// order, so the graph is acyclic by construction.
#[derive(Default)]
pub struct Graph {
    pub(super) nodes: Vec<Node>,
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Splits a shape into (rows, last extent) for last-axis operations.
fn rows_last(op: &'static str, shape: &[usize]) -> Result<(usize, usize)> {
    match shape.last() {
        Some(&d) if d > 0 => Ok((shape.iter().product::<usize>() / d, d)),
        _ => Err(TensorError::EmptyAxis { op }),
    }
}

impl Graph {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Adds a leaf that does not receive gradients.
    pub fn constant(&mut self, value: Tensor) -> Var {
        self.push(value, OpKind::Leaf, Vec::new(), false)
    }

    /// Adds a leaf that receives gradients on [`Graph::backward`].
    pub fn param(&mut self, value: Tensor) -> Var {
        self.push(value, OpKind::Leaf, Vec::new(), true)
    }

    pub fn value(&self, var: Var) -> &Tensor {
        &self.nodes[var.0].value
    }

    pub fn shape(&self, var: Var) -> &[usize] {
        self.nodes[var.0].value.shape()
    }

    pub fn grad(&self, var: Var) -> Option<&Tensor> {
        self.nodes[var.0].grad.as_ref()
    }

    pub fn requires_grad(&self, var: Var) -> bool {
        self.nodes[var.0].requires_grad
    }

    pub fn zero_grad(&mut self) {
        for node in &mut self.nodes {
            node.grad = None;
        }
    }

    fn push(&mut self, value: Tensor, kind: OpKind, parents: Vec<Var>, requires_grad: bool) -> Var {
        self.nodes.push(Node {
            value,
            grad: None,
            kind,
            parents,
            requires_grad,
        });
        Var(self.nodes.len() - 1)
    }

    /// Records `kind` applied to `operands` and returns the result node.
    pub fn apply(&mut self, kind: OpKind, operands: &[Var]) -> Result<Var> {
        let op = kind.name();
        let expected = match kind {
            OpKind::Leaf => {
                return Err(TensorError::InvalidArgument(
                    "leaves are created with constant() or param()".into(),
                ))
            }
            OpKind::Concat => operands.len().max(1),
            OpKind::MatMul | OpKind::Add | OpKind::Sub | OpKind::Mul => 2,
            OpKind::LayerNorm => 3,
            _ => 1,
        };
        if operands.len() != expected {
            return Err(TensorError::Arity {
                op,
                expected,
                got: operands.len(),
            });
        }
        let value = {
            let vals: Vec<&Tensor> = operands.iter().map(|v| &self.nodes[v.0].value).collect();
            forward(&kind, &vals)?
        };
        if !value.is_finite() {
            return Err(TensorError::NonFinite { op });
        }
        let requires_grad = operands.iter().any(|v| self.nodes[v.0].requires_grad);
        Ok(self.push(value, kind, operands.to_vec(), requires_grad))
    }

    pub fn matmul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::MatMul, &[a, b])
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::Add, &[a, b])
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::Sub, &[a, b])
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        self.apply(OpKind::Mul, &[a, b])
    }

    pub fn scale(&mut self, a: Var, factor: f64) -> Result<Var> {
        self.apply(OpKind::Scale(factor), &[a])
    }

    pub fn sigmoid(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Sigmoid, &[a])
    }

    pub fn relu(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Relu, &[a])
    }

    pub fn square(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Square, &[a])
    }

    pub fn sqrt(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Sqrt, &[a])
    }

    pub fn softmax(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Softmax, &[a])
    }

    pub fn log_softmax(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::LogSoftmax, &[a])
    }

    pub fn mean(&mut self, a: Var, axis: Option<usize>) -> Result<Var> {
        self.apply(OpKind::Mean(axis), &[a])
    }

    pub fn concat(&mut self, parts: &[Var]) -> Result<Var> {
        self.apply(OpKind::Concat, parts)
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Result<Var> {
        self.apply(OpKind::Slice { start, len }, &[a])
    }

    pub fn transpose(&mut self, a: Var) -> Result<Var> {
        self.apply(OpKind::Transpose, &[a])
    }

    pub fn layer_norm(&mut self, x: Var, gain: Var, offset: Var) -> Result<Var> {
        self.apply(OpKind::LayerNorm, &[x, gain, offset])
    }

    pub fn reshape(&mut self, a: Var, shape: &[usize]) -> Result<Var> {
        self.apply(OpKind::Reshape(shape.to_vec()), &[a])
    }

    /// `x · w + b` with `b` broadcast over rows.
    pub fn affine(&mut self, x: Var, weight: Var, bias: Var) -> Result<Var> {
        let xw = self.matmul(x, weight)?;
        self.add(xw, bias)
    }
}

fn mismatch(op: &'static str, a: &Tensor, b: &Tensor) -> TensorError {
    TensorError::ShapeMismatch {
        op,
        lhs: a.shape().to_vec(),
        rhs: b.shape().to_vec(),
    }
}

fn map(a: &Tensor, f: impl Fn(f64) -> f64) -> Tensor {
    Tensor {
        shape: a.shape.clone(),
        values: a.values.iter().map(|&v| f(v)).collect(),
    }
}

fn broadcast_binary(op: &'static str, a: &Tensor, b: &Tensor, f: impl Fn(f64, f64) -> f64) -> Result<Tensor> {
    if !a.shape.ends_with(&b.shape) {
        return Err(mismatch(op, a, b));
    }
    let nb = b.numel();
    let mut values = Vec::with_capacity(a.numel());
    for chunk in a.values.chunks(nb) {
        values.extend(chunk.iter().zip(&b.values).map(|(&x, &y)| f(x, y)));
    }
    Ok(Tensor {
        shape: a.shape.clone(),
        values,
    })
}

/// Shape classification for `MatMul`, shared by forward and backward.
pub(super) enum MatMulShape {
    Shared { rows: usize, k: usize, n: usize },
    Batched { batch: usize, m: usize, k: usize, n: usize },
}

pub(super) fn matmul_shape(a: &Tensor, b: &Tensor) -> Result<MatMulShape> {
    let (sa, sb) = (a.shape(), b.shape());
    if sa.len() >= 2 && sb.len() == 2 && sa[sa.len() - 1] == sb[0] {
        let k = sb[0];
        return Ok(MatMulShape::Shared {
            rows: a.numel() / k,
            k,
            n: sb[1],
        });
    }
    if sa.len() == 3 && sb.len() == 3 && sa[0] == sb[0] && sa[2] == sb[1] {
        return Ok(MatMulShape::Batched {
            batch: sa[0],
            m: sa[1],
            k: sa[2],
            n: sb[2],
        });
    }
    Err(mismatch("matmul", a, b))
}

fn forward(kind: &OpKind, x: &[&Tensor]) -> Result<Tensor> {
    let op = kind.name();
    match kind {
        OpKind::Leaf => unreachable!("leaves have no forward rule"),
        OpKind::MatMul => {
            let (a, b) = (x[0], x[1]);
            match matmul_shape(a, b)? {
                MatMulShape::Shared { rows, k, n } => {
                    let mut out = vec![0.0; rows * n];
                    gemm(rows, k, n, &a.values, false, &b.values, false, &mut out, false);
                    let mut shape = a.shape[..a.shape.len() - 1].to_vec();
                    shape.push(n);
                    Ok(Tensor { shape, values: out })
                }
                MatMulShape::Batched { batch, m, k, n } => {
                    let mut out = vec![0.0; batch * m * n];
                    for i in 0..batch {
                        gemm(
                            m,
                            k,
                            n,
                            &a.values[i * m * k..(i + 1) * m * k],
                            false,
                            &b.values[i * k * n..(i + 1) * k * n],
                            false,
                            &mut out[i * m * n..(i + 1) * m * n],
                            false,
                        );
                    }
                    Ok(Tensor {
                        shape: vec![batch, m, n],
                        values: out,
                    })
                }
            }
        }
        OpKind::Add => broadcast_binary(op, x[0], x[1], |a, b| a + b),
        OpKind::Sub => broadcast_binary(op, x[0], x[1], |a, b| a - b),
        OpKind::Mul => broadcast_binary(op, x[0], x[1], |a, b| a * b),
        OpKind::Scale(c) => Ok(map(x[0], |v| c * v)),
        OpKind::Sigmoid => Ok(map(x[0], sigmoid)),
        OpKind::Relu => Ok(map(x[0], |v| v.max(0.0))),
        OpKind::Square => Ok(map(x[0], |v| v * v)),
        OpKind::Sqrt => Ok(map(x[0], f64::sqrt)),
        OpKind::Softmax | OpKind::LogSoftmax => {
            let a = x[0];
            let (_, d) = rows_last(op, &a.shape)?;
            let log = matches!(kind, OpKind::LogSoftmax);
            let mut values = Vec::with_capacity(a.numel());
            for row in a.values.chunks(d) {
                let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                if log {
                    let lse = row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
                    values.extend(row.iter().map(|v| v - max - lse));
                } else {
                    let start = values.len();
                    values.extend(row.iter().map(|v| (v - max).exp()));
                    let sum: f64 = values[start..].iter().sum();
                    values[start..].iter_mut().for_each(|v| *v /= sum);
                }
            }
            Ok(Tensor {
                shape: a.shape.clone(),
                values,
            })
        }
        OpKind::Mean(None) => {
            let a = x[0];
            let mean = a.values.iter().sum::<f64>() / a.numel() as f64;
            Ok(Tensor::scalar(mean))
        }
        OpKind::Mean(Some(axis)) => {
            let a = x[0];
            let (outer, len, inner) = axis_split(op, &a.shape, *axis)?;
            let mut values = vec![0.0; outer * inner];
            for o in 0..outer {
                for l in 0..len {
                    let src = &a.values[(o * len + l) * inner..(o * len + l + 1) * inner];
                    for (dst, s) in values[o * inner..(o + 1) * inner].iter_mut().zip(src) {
                        *dst += s;
                    }
                }
            }
            values.iter_mut().for_each(|v| *v /= len as f64);
            let mut shape = a.shape.clone();
            shape.remove(*axis);
            Ok(Tensor { shape, values })
        }
        OpKind::Concat => {
            let first = x[0];
            let lead = &first.shape[..first.shape.len().saturating_sub(1)];
            let (rows, _) = rows_last(op, &first.shape)?;
            let mut total = 0;
            for t in x {
                if t.shape.len() != first.shape.len() || &t.shape[..t.shape.len() - 1] != lead {
                    return Err(mismatch(op, first, t));
                }
                total += t.shape[t.shape.len() - 1];
            }
            let mut values = Vec::with_capacity(rows * total);
            for r in 0..rows {
                for t in x {
                    let d = t.shape[t.shape.len() - 1];
                    values.extend_from_slice(&t.values[r * d..(r + 1) * d]);
                }
            }
            let mut shape = lead.to_vec();
            shape.push(total);
            Ok(Tensor { shape, values })
        }
        OpKind::Slice { start, len } => {
            let a = x[0];
            let (_, d) = rows_last(op, &a.shape)?;
            if *len == 0 || start + len > d {
                return Err(TensorError::InvalidArgument(format!(
                    "slice [{start}, {}) out of range for last extent {d}",
                    start + len
                )));
            }
            let mut values = Vec::with_capacity(a.numel() / d * len);
            for row in a.values.chunks(d) {
                values.extend_from_slice(&row[*start..start + len]);
            }
            let mut shape = a.shape.clone();
            *shape.last_mut().unwrap() = *len;
            Ok(Tensor { shape, values })
        }
        OpKind::Transpose => {
            let a = x[0];
            let (batch, r, c) = match *a.shape.as_slice() {
                [r, c] => (1, r, c),
                [b, r, c] => (b, r, c),
                _ => {
                    return Err(TensorError::InvalidShape {
                        shape: a.shape.clone(),
                        reason: "transpose expects a 2-D or 3-D tensor".into(),
                    })
                }
            };
            let mut values = vec![0.0; a.numel()];
            transpose_into(batch, r, c, &a.values, &mut values);
            let mut shape = a.shape.clone();
            let n = shape.len();
            shape.swap(n - 2, n - 1);
            Ok(Tensor { shape, values })
        }
        OpKind::LayerNorm => {
            let (a, gain, offset) = (x[0], x[1], x[2]);
            let (_, d) = rows_last(op, &a.shape)?;
            if gain.shape != [d] {
                return Err(mismatch(op, a, gain));
            }
            if offset.shape != [d] {
                return Err(mismatch(op, a, offset));
            }
            let mut values = Vec::with_capacity(a.numel());
            for row in a.values.chunks(d) {
                let (mean, rstd) = row_stats(row);
                values.extend(
                    row.iter()
                        .zip(&gain.values)
                        .zip(&offset.values)
                        .map(|((v, g), b)| (v - mean) * rstd * g + b),
                );
            }
            Ok(Tensor {
                shape: a.shape.clone(),
                values,
            })
        }
        OpKind::Reshape(shape) => x[0].clone().reshaped(shape.clone()),
    }
}

/// Mean and reciprocal standard deviation of one layer-norm row.
pub(super) fn row_stats(row: &[f64]) -> (f64, f64) {
    let d = row.len() as f64;
    let mean = row.iter().sum::<f64>() / d;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d;
    (mean, 1.0 / (var + LAYER_NORM_EPS).sqrt())
}

pub(super) fn axis_split(op: &'static str, shape: &[usize], axis: usize) -> Result<(usize, usize, usize)> {
    if axis >= shape.len() {
        return Err(TensorError::EmptyAxis { op });
    }
    let outer = shape[..axis].iter().product();
    let inner = shape[axis + 1..].iter().product();
    Ok((outer, shape[axis], inner))
}

pub(super) fn transpose_into(batch: usize, r: usize, c: usize, src: &[f64], dst: &mut [f64]) {
    for b in 0..batch {
        let s = &src[b * r * c..(b + 1) * r * c];
        let d = &mut dst[b * r * c..(b + 1) * r * c];
        for i in 0..r {
            for j in 0..c {
                d[j * r + i] = s[i * c + j];
            }
        }
    }
}
