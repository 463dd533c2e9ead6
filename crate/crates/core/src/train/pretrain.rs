use std::time::Instant;

use super::loss::{cls_loss, recon_loss, total_loss};
use super::{EpochRecord, Result, RmsProp, TrainConfig, TrainError, TrainLog};
use crate::data::{corrupt, sample_batch_pairs, FeatureMatrix, Labels};
use crate::model::{BoundModel, Head, HeadTask, ModelConfig, SwitchTabModel};
use crate::tensor::{Graph, Tensor};
use crate::util::seeded_rng;

pub(super) fn head_for(labels: &Labels) -> HeadTask {
    match labels {
        Labels::Classes { n_classes, .. } => HeadTask::Classification { n_classes: *n_classes },
        Labels::Regression { .. } => HeadTask::Regression,
    }
}

/// Gradients of every bound parameter; parameters the loss never reached get zeros.
pub(super) fn gradients(g: &Graph, bound: &BoundModel, params: &[Tensor]) -> Vec<Tensor> {
    bound
        .params
        .iter()
        .zip(params)
        .map(|(&v, p)| g.grad(v).cloned().unwrap_or_else(|| Tensor::zeros(p.shape())))
        .collect()
}

pub(super) fn name_errors(model: &SwitchTabModel, err: TrainError) -> TrainError {
    match err {
        TrainError::NonFiniteGradient(what) => {
            let name = what
                .strip_prefix("parameter ")
                .and_then(|i| i.parse::<usize>().ok())
                .and_then(|i| model.params().names().get(i).cloned());
            TrainError::NonFiniteGradient(name.unwrap_or(what))
        }
        other => other,
    }
}

/// Initialises a model from `model_config` and pre-trains it on `matrix`.
///
/// With `label_assisted`, a missing head in `model_config` is derived from
/// the matrix labels.
pub fn pretrain(matrix: &FeatureMatrix, config: &TrainConfig, model_config: ModelConfig) -> Result<(SwitchTabModel, TrainLog)> {
    let mut model_config = model_config;
    if config.label_assisted {
        let labels = matrix.labels().ok_or(TrainError::MissingLabels)?;
        let want = head_for(labels);
        match model_config.head {
            None => model_config.head = Some(want),
            Some(h) if h != want => {
                return Err(TrainError::InvalidConfig(format!(
                    "model head {h:?} does not match the labels ({want:?})"
                )))
            }
            Some(_) => {}
        }
    }
    let model = SwitchTabModel::init(model_config)?;
    pretrain_model(model, matrix, config)
}

/// Pre-trains an existing model: per epoch, paired batches are corrupted,
/// reconstructed and, when label-assisted, classified from their encodings.
pub fn pretrain_model(mut model: SwitchTabModel, matrix: &FeatureMatrix, config: &TrainConfig) -> Result<(SwitchTabModel, TrainLog)> {
    config.validate()?;
    if matrix.m() != model.config().m {
        return Err(TrainError::ShapeMismatch(format!(
            "matrix has {} features, model expects {}",
            matrix.m(),
            model.config().m
        )));
    }
    let labels = if config.label_assisted {
        let labels = matrix.labels().ok_or(TrainError::MissingLabels)?;
        if model.config().head != Some(head_for(labels)) {
            return Err(TrainError::InvalidConfig("model has no head matching the labels".into()));
        }
        Some(labels)
    } else {
        None
    };
    let mut log = TrainLog::new(config.switching);
    if config.pretrain_epochs == 0 {
        return Ok((model, log));
    }
    let mut rng = seeded_rng(config.seed);
    let mut opt = RmsProp::new(model.params().tensors());
    let started = Instant::now();
    for epoch in 1..=config.pretrain_epochs {
        let pairs = sample_batch_pairs(matrix.n(), config.batch_size, &mut rng)?;
        let (mut rec, mut sw, mut cls_sum, mut tot, mut count) = (0.0, 0.0, 0.0, 0.0, 0usize);
        for pair in &pairs {
            let x1 = matrix.batch(&pair.first);
            let x2 = matrix.batch(&pair.second);
            let c1 = corrupt(&x1, matrix.pools(), config.ratio, &mut rng)?;
            let c2 = corrupt(&x2, matrix.pools(), config.ratio, &mut rng)?;

            let mut g = Graph::new();
            let bound = model.bind(&mut g, true);
            let t1 = g.constant(x1);
            let t2 = g.constant(x2);
            let in1 = g.constant(c1.values);
            let in2 = g.constant(c2.values);
            let out = bound.forward_pair(&mut g, in1, in2, config.switching)?;
            let recon = recon_loss(&mut g, t1, t2, &out)?;
            let cls = match labels {
                Some(l) => {
                    let (l1, l2) = (l.select(&pair.first), l.select(&pair.second));
                    let p1 = bound.predict(&mut g, out.z1, Head::Pretrain)?;
                    let p2 = bound.predict(&mut g, out.z2, Head::Pretrain)?;
                    Some(cls_loss(&mut g, &[(p1, &l1), (p2, &l2)])?)
                }
                None => None,
            };
            let total = total_loss(&mut g, recon.total, cls, config.alpha)?;
            g.backward(total)?;

            let mut grads = gradients(&g, &bound, model.params().tensors());
            let w = pair.len() as f64;
            rec += w * g.value(recon.recovered).item()?;
            if let Some(s) = recon.switched {
                sw += w * g.value(s).item()?;
            }
            if let Some(c) = cls {
                cls_sum += w * g.value(c).item()?;
            }
            tot += w * g.value(total).item()?;
            count += pair.len();
            drop(g);
            opt.step(model.params_mut().tensors_mut(), &mut grads, config.pretrain_lr)
                .map_err(|e| name_errors(&model, e))?;
        }
        let n = count as f64;
        log.records.push(EpochRecord {
            epoch,
            recon_recovered: Some(rec / n),
            recon_switched: config.switching.then_some(sw / n),
            cls: labels.map(|_| cls_sum / n),
            total: tot / n,
            val_metric: None,
            val_loss: None,
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });
    }
    Ok((model, log))
}
