//! Central finite-difference verification of analytic gradients.

use serde::Serialize;

use super::{Graph, Result, Tensor, TensorError, Var};

pub const DEFAULT_EPSILON: f64 = 1e-5;

/// Outcome of comparing analytic and numeric gradients.
#[derive(Clone, Debug, Serialize)]
pub struct GradReport {
    /// Largest relative error per parameter tensor, in input order.
    pub per_param: Vec<f64>,
    pub max_rel_error: f64,
    pub epsilon: f64,
    pub tolerance: f64,
    pub passed: bool,
}

fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / (analytic.abs() + numeric.abs()).max(1e-12)
}

fn evaluate<F>(build: &F, params: &[Tensor]) -> Result<f64>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.constant(p.clone())).collect();
    let root = build(&mut g, &vars)?;
    let loss = g.value(root).item()?;
    if !loss.is_finite() {
        return Err(TensorError::NonFinite { op: "grad_check" });
    }
    Ok(loss)
}

/// Analytic gradients of `build` at `params` via [`Graph::backward`].
pub fn analytic_gradients<F>(build: &F, params: &[Tensor]) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let mut g = Graph::new();
    let vars: Vec<Var> = params.iter().map(|p| g.param(p.clone())).collect();
    let root = build(&mut g, &vars)?;
    g.backward(root)?;
    Ok(vars
        .iter()
        .zip(params)
        .map(|(&v, p)| g.grad(v).cloned().unwrap_or_else(|| Tensor::zeros(p.shape())))
        .collect())
}

/// `(f(θ+ε) − f(θ−ε)) / 2ε` for every component of every parameter.
pub fn numeric_gradients<F>(build: &F, params: &[Tensor], epsilon: f64) -> Result<Vec<Tensor>>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(TensorError::InvalidArgument("epsilon must be positive".into()));
    }
    let mut work = params.to_vec();
    let mut out = Vec::with_capacity(params.len());
    for pi in 0..params.len() {
        let mut grad = Tensor::zeros(params[pi].shape());
        for j in 0..params[pi].numel() {
            let original = params[pi].values()[j];
            work[pi].values_mut()[j] = original + epsilon;
            let plus = evaluate(build, &work)?;
            work[pi].values_mut()[j] = original - epsilon;
            let minus = evaluate(build, &work)?;
            work[pi].values_mut()[j] = original;
            grad.values_mut()[j] = (plus - minus) / (2.0 * epsilon);
        }
        out.push(grad);
    }
    Ok(out)
}

/// Component-wise relative error `|a − n| / max(1e-12, |a| + |n|)`.
pub fn compare_gradients(analytic: &[Tensor], numeric: &[Tensor], epsilon: f64, tolerance: f64) -> GradReport {
    let per_param: Vec<f64> = analytic
        .iter()
        .zip(numeric)
        .map(|(a, n)| {
            a.values()
                .iter()
                .zip(n.values())
                .map(|(&x, &y)| relative_error(x, y))
                .fold(0.0, f64::max)
        })
        .collect();
    let max_rel_error = per_param.iter().copied().fold(0.0, f64::max);
    GradReport {
        per_param,
        max_rel_error,
        epsilon,
        tolerance,
        passed: max_rel_error < tolerance,
    }
}

/// Checks the analytic gradient of the scalar built by `build` against
/// central differences.
pub fn grad_check<F>(build: F, params: &[Tensor], epsilon: f64, tolerance: f64) -> Result<GradReport>
where
    F: Fn(&mut Graph, &[Var]) -> Result<Var>,
{
    let analytic = analytic_gradients(&build, params)?;
    let numeric = numeric_gradients(&build, params, epsilon)?;
    Ok(compare_gradients(&analytic, &numeric, epsilon, tolerance))
}
