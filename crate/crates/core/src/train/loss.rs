use super::{Result, TrainError};
use crate::data::Labels;
use crate::model::{ForwardOutputs, ForwardValues};
use crate::tensor::{Graph, Tensor, Var};

/// Reconstruction loss split into its recovered and switched parts.
#[derive(Clone, Copy, Debug)]
pub struct ReconTerms {
    pub recovered: Var,
    pub switched: Option<Var>,
    pub total: Var,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ReconValues {
    pub recovered: f64,
    pub switched: Option<f64>,
    pub total: f64,
}

fn mse(g: &mut Graph, pred: Var, target: Var) -> Result<Var> {
    if g.shape(pred) != g.shape(target) {
        return Err(TrainError::ShapeMismatch(format!(
            "reconstruction {:?} vs target {:?}",
            g.shape(pred),
            g.shape(target)
        )));
    }
    let diff = g.sub(pred, target)?;
    let sq = g.square(diff)?;
    Ok(g.mean(sq, None)?)
}

/// Batch mean of the per-sample squared reconstruction errors, each averaged
/// over features, against the uncorrupted `x1` and `x2`. The switched terms
/// are included when `out` carries switched reconstructions.
pub fn recon_loss(g: &mut Graph, x1: Var, x2: Var, out: &ForwardOutputs) -> Result<ReconTerms> {
    let r1 = mse(g, out.recovered1, x1)?;
    let r2 = mse(g, out.recovered2, x2)?;
    let recovered = g.add(r1, r2)?;
    let switched = match (out.switched1, out.switched2) {
        (Some(a), Some(b)) => {
            let s1 = mse(g, a, x1)?;
            let s2 = mse(g, b, x2)?;
            Some(g.add(s1, s2)?)
        }
        _ => None,
    };
    let total = match switched {
        Some(s) => g.add(recovered, s)?,
        None => recovered,
    };
    Ok(ReconTerms { recovered, switched, total })
}

/// [`recon_loss`] on concrete tensors.
pub fn recon_loss_value(x1: &Tensor, x2: &Tensor, out: &ForwardValues, switching: bool) -> Result<ReconValues> {
    let mut g = Graph::new();
    let c = |g: &mut Graph, t: &Tensor| g.constant(t.clone());
    let outputs = ForwardOutputs {
        z1: c(&mut g, &out.z1),
        z2: c(&mut g, &out.z2),
        s1: c(&mut g, &out.s1),
        s2: c(&mut g, &out.s2),
        m1: c(&mut g, &out.m1),
        m2: c(&mut g, &out.m2),
        recovered1: c(&mut g, &out.recovered1),
        recovered2: c(&mut g, &out.recovered2),
        switched1: switching.then(|| c(&mut g, &out.switched1)),
        switched2: switching.then(|| c(&mut g, &out.switched2)),
    };
    let a = c(&mut g, x1);
    let b = c(&mut g, x2);
    let terms = recon_loss(&mut g, a, b, &outputs)?;
    let item = |v: Var| g.value(v).item();
    Ok(ReconValues {
        recovered: item(terms.recovered)?,
        switched: terms.switched.map(item).transpose()?,
        total: item(terms.total)?,
    })
}

fn one_hot(values: &[usize], n_classes: usize) -> Result<Tensor> {
    let mut t = Tensor::zeros(&[values.len(), n_classes]);
    for (i, &c) in values.iter().enumerate() {
        if c >= n_classes {
            return Err(TrainError::LabelOutOfRange { label: c, n_classes });
        }
        t.values_mut()[i * n_classes + c] = 1.0;
    }
    Ok(t)
}

/// Prediction loss pooled over every sample of every stream: mean
/// cross-entropy for class labels, root mean squared error for regression.
pub fn cls_loss(g: &mut Graph, streams: &[(Var, &Labels)]) -> Result<Var> {
    let total: usize = streams.iter().map(|(_, l)| l.len()).sum();
    if total == 0 {
        return Err(TrainError::ShapeMismatch("no samples to score".into()));
    }
    let regression = matches!(streams[0].1, Labels::Regression { .. });
    let mut acc: Option<Var> = None;
    for &(pred, labels) in streams {
        let shape = g.shape(pred).to_vec();
        let (target, sign) = match labels {
            Labels::Classes { values, n_classes } if !regression => {
                if shape != [values.len(), *n_classes] {
                    return Err(TrainError::ShapeMismatch(format!(
                        "logits {shape:?} for {} labels of {n_classes} classes",
                        values.len()
                    )));
                }
                (one_hot(values, *n_classes)?, -1.0)
            }
            Labels::Regression { values } if regression => {
                if shape != [values.len(), 1] {
                    return Err(TrainError::ShapeMismatch(format!(
                        "predictions {shape:?} for {} targets",
                        values.len()
                    )));
                }
                (Tensor::new(vec![values.len(), 1], values.clone())?, 1.0)
            }
            _ => return Err(TrainError::ShapeMismatch("streams mix label kinds".into())),
        };
        let target = g.constant(target);
        let per_entry = if regression {
            let diff = g.sub(pred, target)?;
            g.square(diff)?
        } else {
            let logp = g.log_softmax(pred)?;
            g.mul(logp, target)?
        };
        // mean over this stream's entries, rescaled to a share of the pooled mean
        let mean = g.mean(per_entry, None)?;
        let numel = (shape[0] * shape[1]) as f64;
        let part = g.scale(mean, sign * numel / total as f64)?;
        acc = Some(match acc {
            Some(a) => g.add(a, part)?,
            None => part,
        });
    }
    let pooled = acc.expect("at least one stream");
    Ok(if regression { g.sqrt(pooled)? } else { pooled })
}

/// [`cls_loss`] on concrete tensors.
pub fn cls_loss_value(streams: &[(&Tensor, &Labels)]) -> Result<f64> {
    let mut g = Graph::new();
    let vars: Vec<(Var, &Labels)> = streams.iter().map(|(t, l)| (g.constant((*t).clone()), *l)).collect();
    let loss = cls_loss(&mut g, &vars)?;
    Ok(g.value(loss).item()?)
}

/// `recon + α · cls`; without a prediction loss this is just `recon`.
pub fn total_loss(g: &mut Graph, recon: Var, cls: Option<Var>, alpha: f64) -> Result<Var> {
    Ok(match cls {
        Some(c) => {
            let weighted = g.scale(c, alpha)?;
            g.add(recon, weighted)?
        }
        None => recon,
    })
}

pub fn total_loss_value(recon: f64, cls: Option<f64>, alpha: f64) -> f64 {
    match cls {
        Some(c) => recon + alpha * c,
        None => recon,
    }
}
