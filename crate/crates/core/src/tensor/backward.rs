use super::graph::{axis_split, matmul_shape, row_stats, transpose_into, Graph, MatMulShape, OpKind, Var};
use super::kernels::gemm;
use super::{Result, Tensor, TensorError};

fn accumulate(slot: &mut Option<Vec<f64>>, contribution: Vec<f64>) {
    match slot {
        Some(existing) => existing.iter_mut().zip(&contribution).for_each(|(e, c)| *e += c),
        None => *slot = Some(contribution),
    }
}

/// Sums a gradient of the broadcast output shape back onto a suffix-shaped operand.
fn reduce_to(g: &[f64], nb: usize) -> Vec<f64> {
    let mut out = vec![0.0; nb];
    for chunk in g.chunks(nb) {
        out.iter_mut().zip(chunk).for_each(|(o, c)| *o += c);
    }
    out
}

impl Graph {
    /// Back-propagates from a scalar `root`, adding `d root / d node` into the
    /// gradient of every node that depends on a parameter leaf.
    ///
    /// Gradients accumulate across calls; use [`Graph::zero_grad`] to reset.
    pub fn backward(&mut self, root: Var) -> Result<()> {
        let root_value = &self.nodes[root.0].value;
        if root_value.numel() != 1 {
            return Err(TensorError::NotScalar(root_value.shape().to_vec()));
        }
        let mut pending: Vec<Option<Vec<f64>>> = vec![None; root.0 + 1];
        pending[root.0] = Some(vec![1.0]);

        for idx in (0..=root.0).rev() {
            let Some(g) = pending[idx].take() else { continue };
            let node = &self.nodes[idx];
            if !node.requires_grad {
                continue;
            }
            if !g.iter().all(|v| v.is_finite()) {
                return Err(TensorError::NonFinite { op: "backward" });
            }
            for (parent, contribution) in self.vjp(idx, &g) {
                if self.nodes[parent.0].requires_grad {
                    accumulate(&mut pending[parent.0], contribution);
                }
            }
            let node = &mut self.nodes[idx];
            match &mut node.grad {
                Some(existing) => existing
                    .values_mut()
                    .iter_mut()
                    .zip(&g)
                    .for_each(|(e, c)| *e += c),
                None => node.grad = Some(Tensor::new(node.value.shape().to_vec(), g)?),
            }
        }
        Ok(())
    }

    /// Vector-Jacobian products of node `idx` for upstream gradient `g`.
    fn vjp(&self, idx: usize, g: &[f64]) -> Vec<(Var, Vec<f64>)> {
        let node = &self.nodes[idx];
        let p = &node.parents;
        let val = |v: Var| &self.nodes[v.0].value;
        let needs = |v: Var| self.nodes[v.0].requires_grad;
        let out = &node.value;
        let mut res = Vec::with_capacity(p.len());
        match &node.kind {
            OpKind::Leaf => {}
            OpKind::MatMul => {
                let (a, b) = (val(p[0]), val(p[1]));
                match matmul_shape(a, b).expect("shape validated in forward") {
                    MatMulShape::Shared { rows, k, n } => {
                        if needs(p[0]) {
                            let mut da = vec![0.0; rows * k];
                            gemm(rows, n, k, g, false, b.values(), true, &mut da, false);
                            res.push((p[0], da));
                        }
                        if needs(p[1]) {
                            let mut db = vec![0.0; k * n];
                            gemm(k, rows, n, a.values(), true, g, false, &mut db, false);
                            res.push((p[1], db));
                        }
                    }
                    MatMulShape::Batched { batch, m, k, n } => {
                        let (mut da, mut db) = (vec![0.0; batch * m * k], vec![0.0; batch * k * n]);
                        for i in 0..batch {
                            let gi = &g[i * m * n..(i + 1) * m * n];
                            let ai = &a.values()[i * m * k..(i + 1) * m * k];
                            let bi = &b.values()[i * k * n..(i + 1) * k * n];
                            gemm(m, n, k, gi, false, bi, true, &mut da[i * m * k..(i + 1) * m * k], false);
                            gemm(k, m, n, ai, true, gi, false, &mut db[i * k * n..(i + 1) * k * n], false);
                        }
                        res.push((p[0], da));
                        res.push((p[1], db));
                    }
                }
            }
            OpKind::Add | OpKind::Sub => {
                let nb = val(p[1]).numel();
                if needs(p[0]) {
                    res.push((p[0], g.to_vec()));
                }
                if needs(p[1]) {
                    let mut db = reduce_to(g, nb);
                    if node.kind == OpKind::Sub {
                        db.iter_mut().for_each(|v| *v = -*v);
                    }
                    res.push((p[1], db));
                }
            }
            OpKind::Mul => {
                let (a, b) = (val(p[0]), val(p[1]));
                let nb = b.numel();
                if needs(p[0]) {
                    let mut da = Vec::with_capacity(g.len());
                    for chunk in g.chunks(nb) {
                        da.extend(chunk.iter().zip(b.values()).map(|(gv, bv)| gv * bv));
                    }
                    res.push((p[0], da));
                }
                if needs(p[1]) {
                    let prod: Vec<f64> = g.iter().zip(a.values()).map(|(gv, av)| gv * av).collect();
                    res.push((p[1], reduce_to(&prod, nb)));
                }
            }
            OpKind::Scale(c) => res.push((p[0], g.iter().map(|v| c * v).collect())),
            OpKind::Sigmoid => res.push((
                p[0],
                g.iter().zip(out.values()).map(|(gv, y)| gv * y * (1.0 - y)).collect(),
            )),
            OpKind::Relu => res.push((
                p[0],
                g.iter()
                    .zip(val(p[0]).values())
                    .map(|(gv, x)| if *x > 0.0 { *gv } else { 0.0 })
                    .collect(),
            )),
            OpKind::Square => res.push((
                p[0],
                g.iter().zip(val(p[0]).values()).map(|(gv, x)| 2.0 * x * gv).collect(),
            )),
            OpKind::Sqrt => res.push((
                p[0],
                g.iter().zip(out.values()).map(|(gv, y)| gv / (2.0 * y)).collect(),
            )),
            OpKind::Softmax => {
                let d = *out.shape().last().unwrap();
                let mut da = Vec::with_capacity(g.len());
                for (gr, yr) in g.chunks(d).zip(out.values().chunks(d)) {
                    let dot: f64 = gr.iter().zip(yr).map(|(a, b)| a * b).sum();
                    da.extend(gr.iter().zip(yr).map(|(gv, y)| y * (gv - dot)));
                }
                res.push((p[0], da));
            }
            OpKind::LogSoftmax => {
                let d = *out.shape().last().unwrap();
                let mut da = Vec::with_capacity(g.len());
                for (gr, yr) in g.chunks(d).zip(out.values().chunks(d)) {
                    let total: f64 = gr.iter().sum();
                    da.extend(gr.iter().zip(yr).map(|(gv, ly)| gv - ly.exp() * total));
                }
                res.push((p[0], da));
            }
            OpKind::Mean(None) => {
                let n = val(p[0]).numel();
                res.push((p[0], vec![g[0] / n as f64; n]));
            }
            OpKind::Mean(Some(axis)) => {
                let a = val(p[0]);
                let (outer, len, inner) = axis_split("mean", a.shape(), *axis).expect("validated in forward");
                let mut da = vec![0.0; a.numel()];
                for o in 0..outer {
                    let src = &g[o * inner..(o + 1) * inner];
                    for l in 0..len {
                        let dst = &mut da[(o * len + l) * inner..(o * len + l + 1) * inner];
                        dst.iter_mut().zip(src).for_each(|(d, s)| *d = s / len as f64);
                    }
                }
                res.push((p[0], da));
            }
            OpKind::Concat => {
                let total = *out.shape().last().unwrap();
                let rows = out.numel() / total;
                let mut offset = 0;
                for &part in p {
                    let d = *val(part).shape().last().unwrap();
                    if needs(part) {
                        let mut dp = Vec::with_capacity(rows * d);
                        for r in 0..rows {
                            dp.extend_from_slice(&g[r * total + offset..r * total + offset + d]);
                        }
                        res.push((part, dp));
                    }
                    offset += d;
                }
            }
            OpKind::Slice { start, len } => {
                let a = val(p[0]);
                let d = *a.shape().last().unwrap();
                let mut da = vec![0.0; a.numel()];
                for (dst, src) in da.chunks_mut(d).zip(g.chunks(*len)) {
                    dst[*start..start + len].copy_from_slice(src);
                }
                res.push((p[0], da));
            }
            OpKind::Transpose => {
                // Output is [.., c, r]; transposing the gradient back restores [.., r, c].
                let s = out.shape();
                let n = s.len();
                let batch = if n == 3 { s[0] } else { 1 };
                let mut da = vec![0.0; g.len()];
                transpose_into(batch, s[n - 2], s[n - 1], g, &mut da);
                res.push((p[0], da));
            }
            OpKind::LayerNorm => {
                let (x, gain) = (val(p[0]), val(p[1]));
                let d = gain.numel();
                let mut dx = Vec::with_capacity(x.numel());
                let mut dgain = vec![0.0; d];
                let mut doffset = vec![0.0; d];
                let mut xhat = vec![0.0; d];
                let mut dxhat = vec![0.0; d];
                for (xr, gr) in x.values().chunks(d).zip(g.chunks(d)) {
                    let (mean, rstd) = row_stats(xr);
                    for j in 0..d {
                        xhat[j] = (xr[j] - mean) * rstd;
                        dxhat[j] = gr[j] * gain.values()[j];
                        dgain[j] += gr[j] * xhat[j];
                        doffset[j] += gr[j];
                    }
                    let mean_dxhat = dxhat.iter().sum::<f64>() / d as f64;
                    let mean_dxhat_xhat = dxhat.iter().zip(&xhat).map(|(a, b)| a * b).sum::<f64>() / d as f64;
                    dx.extend((0..d).map(|j| rstd * (dxhat[j] - mean_dxhat - xhat[j] * mean_dxhat_xhat)));
                }
                res.push((p[0], dx));
                res.push((p[1], dgain));
                res.push((p[2], doffset));
            }
            OpKind::Reshape(_) => res.push((p[0], g.to_vec())),
        }
        res
    }
}
