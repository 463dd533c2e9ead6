use std::time::Instant;

use rand::seq::SliceRandom;

use super::loss::cls_loss;
use super::pretrain::{gradients, head_for, name_errors};
use super::{Adam, EpochRecord, Result, TrainConfig, TrainError, TrainLog};
use crate::data::{train_test_split, FeatureMatrix, Labels};
use crate::model::{Head, SwitchTabModel};
use crate::tensor::{Graph, Tensor};
use crate::util::seeded_rng;

/// (train, validation) rows used by [`finetune`] for `n` rows under `config`.
pub fn finetune_split(n: usize, config: &TrainConfig) -> (Vec<usize>, Vec<usize>) {
    train_test_split(n, config.validation_fraction, &mut seeded_rng(config.seed))
}

/// Validation loss and metric (accuracy, or RMSE for regression).
fn validate(model: &SwitchTabModel, x: &Tensor, labels: &Labels) -> Result<(f64, f64)> {
    let mut g = Graph::new();
    let bound = model.bind(&mut g, false);
    let xv = g.constant(x.clone());
    let z = bound.encode(&mut g, xv)?;
    let pred = bound.predict(&mut g, z, Head::Finetune)?;
    let loss = cls_loss(&mut g, &[(pred, labels)])?;
    let loss = g.value(loss).item()?;
    let metric = match labels {
        Labels::Classes { values, n_classes } => {
            let scores = g.value(pred).values();
            let hits = values
                .iter()
                .enumerate()
                .filter(|&(i, &y)| {
                    let row = &scores[i * n_classes..(i + 1) * n_classes];
                    let best = (0..*n_classes).fold(0, |b, k| if row[k] > row[b] { k } else { b });
                    best == y
                })
                .count();
            hits as f64 / values.len() as f64
        }
        Labels::Regression { .. } => loss,
    };
    Ok((loss, metric))
}

/// Trains the encoder and the fine-tuning head end to end on uncorrupted
/// rows with Adam, stopping once the validation loss has not improved for
/// `patience` epochs. Returns the parameters of the best validation epoch.
pub fn finetune(model: &SwitchTabModel, matrix: &FeatureMatrix, config: &TrainConfig) -> Result<(SwitchTabModel, TrainLog)> {
    config.validate()?;
    if config.finetune_epochs == 0 {
        return Err(TrainError::NothingToTrain);
    }
    let labels = matrix.labels().ok_or(TrainError::MissingLabels)?;
    if matrix.m() != model.config().m {
        return Err(TrainError::ShapeMismatch(format!(
            "matrix has {} features, model expects {}",
            matrix.m(),
            model.config().m
        )));
    }
    let (mut train_rows, val_rows) = finetune_split(matrix.n(), config);
    if val_rows.is_empty() {
        return Err(TrainError::ValidationTooSmall);
    }
    if train_rows.is_empty() {
        return Err(TrainError::NothingToTrain);
    }
    let mut rng = seeded_rng(config.seed.wrapping_add(1));
    let mut model = model.with_head(head_for(labels), &mut rng)?;
    let val_x = matrix.batch(&val_rows);
    let val_labels = labels.select(&val_rows);

    let mut opt = Adam::new(model.params().tensors());
    let mut log = TrainLog::new(false);
    let mut best: Option<(f64, usize, SwitchTabModel)> = None;
    let started = Instant::now();
    for epoch in 1..=config.finetune_epochs {
        train_rows.shuffle(&mut rng);
        let (mut loss_sum, mut count) = (0.0, 0usize);
        for chunk in train_rows.chunks(config.batch_size) {
            let batch_labels = labels.select(chunk);
            let mut g = Graph::new();
            let bound = model.bind(&mut g, true);
            let x = g.constant(matrix.batch(chunk));
            let z = bound.encode(&mut g, x)?;
            let pred = bound.predict(&mut g, z, Head::Finetune)?;
            let loss = cls_loss(&mut g, &[(pred, &batch_labels)])?;
            g.backward(loss)?;
            loss_sum += chunk.len() as f64 * g.value(loss).item()?;
            count += chunk.len();
            let mut grads = gradients(&g, &bound, model.params().tensors());
            drop(g);
            opt.step(model.params_mut().tensors_mut(), &mut grads, config.finetune_lr)
                .map_err(|e| name_errors(&model, e))?;
        }
        let (val_loss, val_metric) = validate(&model, &val_x, &val_labels)?;
        let train_loss = loss_sum / count as f64;
        log.records.push(EpochRecord {
            epoch,
            recon_recovered: None,
            recon_switched: None,
            cls: Some(train_loss),
            total: train_loss,
            val_metric: Some(val_metric),
            val_loss: Some(val_loss),
            wall_clock_secs: started.elapsed().as_secs_f64(),
        });
        match &best {
            Some((b, _, _)) if val_loss >= *b => {}
            _ => best = Some((val_loss, epoch, model.clone())),
        }
        let best_epoch = best.as_ref().map_or(epoch, |b| b.1);
        if epoch - best_epoch >= config.patience {
            break;
        }
    }
    let (_, best_epoch, best_model) = best.expect("at least one epoch ran");
    log.best_epoch = Some(best_epoch);
    Ok((best_model, log))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{fit_preprocessor, synthesize, transform, SynthSpec};
    use crate::model::ModelConfig;

    fn small_model(m: usize) -> SwitchTabModel {
        SwitchTabModel::init(ModelConfig {
            d_model: 8,
            n_layers: 1,
            d_ff: 8,
            ..ModelConfig::new(m)
        })
        .unwrap()
    }

    fn separable(n: usize) -> FeatureMatrix {
        let data = synthesize(&SynthSpec {
            n,
            class_dims: 2,
            shared_dims: 2,
            separation: 4.0,
            ..SynthSpec::default()
        })
        .unwrap();
        transform(&fit_preprocessor(&data).unwrap(), &data).unwrap()
    }

    #[test]
    fn zero_epochs_is_an_error() {
        let cfg = TrainConfig {
            finetune_epochs: 0,
            ..TrainConfig::default()
        };
        let err = finetune(&small_model(4), &separable(20), &cfg).unwrap_err();
        assert_eq!(err.to_string(), "nothing to train");
    }

    #[test]
    fn requires_labels_and_a_validation_split() {
        let x = separable(20);
        let rows: Vec<Vec<f64>> = (0..20).map(|i| x.row(i).to_vec()).collect();
        let bare = FeatureMatrix::from_rows(&rows, None).unwrap();
        assert!(matches!(
            finetune(&small_model(4), &bare, &TrainConfig::default()),
            Err(TrainError::MissingLabels)
        ));
        let cfg = TrainConfig {
            validation_fraction: 0.01,
            ..TrainConfig::default()
        };
        assert!(matches!(
            finetune(&small_model(4), &separable(20), &cfg),
            Err(TrainError::ValidationTooSmall)
        ));
    }

    #[test]
    fn separable_data_is_learned() {
        let cfg = TrainConfig {
            finetune_epochs: 200,
            batch_size: 32,
            seed: 2,
            ..TrainConfig::default()
        };
        let (model, log) = finetune(&small_model(4), &separable(200), &cfg).unwrap();
        let best = log.best_epoch.unwrap();
        let acc = log.records[best - 1].val_metric.unwrap();
        assert!(acc >= 0.95, "validation accuracy {acc}");
        assert!(model.config().head.is_some());
    }

    #[test]
    fn returns_the_best_validation_model() {
        // A large step size makes the validation loss wander, so the last
        // epoch is rarely the best one.
        let cfg = TrainConfig {
            finetune_epochs: 60,
            finetune_lr: 0.05,
            patience: 5,
            batch_size: 8,
            seed: 9,
            ..TrainConfig::default()
        };
        let x = separable(60);
        let (model, log) = finetune(&small_model(4), &x, &cfg).unwrap();
        let best = log.best_epoch.unwrap();
        let last = log.last().unwrap().epoch;
        assert!(best < last);
        assert_eq!(last - best, cfg.patience);
        let min = log.records.iter().map(|r| r.val_loss.unwrap()).fold(f64::INFINITY, f64::min);
        assert_eq!(log.records[best - 1].val_loss.unwrap(), min);

        let (_, val) = finetune_split(x.n(), &cfg);
        let (loss, _) = validate(&model, &x.batch(&val), &x.labels().unwrap().select(&val)).unwrap();
        assert_eq!(loss, min);
    }
}
