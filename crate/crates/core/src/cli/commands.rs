use std::io::Write;
use std::path::Path;

use serde::Serialize;

use super::{Checkpoint, CliError, Result, RunConfig};
use crate::data::{fit_preprocessor, load_csv, synthesize, train_test_split, FeatureMatrix, Labels, Schema, TabularDataset};
use crate::eval::{embed, metric, pca2, projection_csv, projection_svg};
use crate::model::{Head, SwitchTabModel};
use crate::tensor::{GradReport, DEFAULT_EPSILON};
use crate::train::{finetune, loss_gradcheck, pretrain, LOSS_CHECK_SEED};
use crate::util::{seeded_rng, write_atomic};

/// Tolerance used by `gradcheck`.
const GRADCHECK_TOLERANCE: f64 = 1e-4;

fn write_out(path: &Path, contents: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    }
    write_atomic(path, contents).map_err(|e| CliError::io(path, e))
}

fn report(stdout: &mut dyn Write, line: impl std::fmt::Display) -> Result<()> {
    writeln!(stdout, "{line}").map_err(|e| CliError::io(Path::new("<stdout>"), e))
}

fn load_schema(config: &RunConfig) -> Result<Schema> {
    Ok(Schema::from_json_file(&config.input(&config.schema, "schema")?)?)
}

fn load_data(config: &RunConfig, schema: &Schema) -> Result<TabularDataset> {
    Ok(load_csv(&config.input(&config.data, "data")?, schema, &config.missing_tokens)?)
}

/// Rows used for training and the held-out rows, fixed by the seed.
fn split(n: usize, config: &RunConfig) -> (Vec<usize>, Vec<usize>) {
    if config.holdout_fraction == 0.0 {
        return ((0..n).collect(), Vec::new());
    }
    train_test_split(n, config.holdout_fraction, &mut seeded_rng(config.train.seed))
}

/// The checkpoint, its model and the data it applies to, after checking the
/// data schema against the stored hash.
fn load_for_checkpoint(config: &RunConfig) -> Result<(Checkpoint, SwitchTabModel, TabularDataset)> {
    let path = config.checkpoint_path();
    let ck = Checkpoint::load(&path)?;
    let model = ck.model(&path)?;
    let schema = match &config.schema {
        Some(_) => load_schema(config)?,
        None => ck.schema.clone(),
    };
    ck.check_schema(&schema)?;
    let data = load_data(config, &schema)?;
    Ok((ck, model, data))
}

fn transform(ck: &Checkpoint, data: &TabularDataset) -> Result<FeatureMatrix> {
    Ok(crate::data::transform(&ck.preprocessor, data)?)
}

pub fn cmd_synth(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let data = synthesize(&config.synth)?;
    let mut csv = Vec::new();
    data.write_csv(&mut csv)?;
    let data_path = config.out.join("data.csv");
    let schema_path = config.out.join("schema.json");
    write_out(&data_path, &csv)?;
    write_out(&schema_path, data.schema().to_json().as_bytes())?;
    report(stdout, format_args!("wrote {} rows to {}", data.n(), data_path.display()))?;
    report(stdout, format_args!("wrote {}", schema_path.display()))
}

pub fn cmd_pretrain(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let schema = load_schema(config)?;
    if config.train.label_assisted && schema.label().is_none() {
        return Err(CliError::Usage(
            "label-assisted pre-training needs a label column, but the schema declares no column of kind \"label\"".into(),
        ));
    }
    let data = load_data(config, &schema)?;
    let (train_rows, _) = split(data.n(), config);
    let train = data.select_rows(&train_rows)?;
    let prep = fit_preprocessor(&train)?;
    let matrix = crate::data::transform(&prep, &train)?;
    let model_config = config.model.model_config(matrix.m(), config.train.seed);
    let (model, log) = pretrain(&matrix, &config.train, model_config)?;

    let ck = Checkpoint::new(&model, &prep, &config.train);
    let ck_path = config.out.join("checkpoint.json");
    let log_path = config.out.join("pretrain_log.csv");
    write_out(&log_path, log.to_csv().as_bytes())?;
    write_out(&ck_path, ck.to_json().as_bytes())?;
    if let Some(last) = log.last() {
        report(stdout, format_args!("epoch {} total loss {:.6}", last.epoch, last.total))?;
    }
    report(stdout, format_args!("wrote {}", ck_path.display()))
}

fn softmax(logits: &[f64]) -> Vec<f64> {
    let top = logits.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = logits.iter().map(|v| (v - top).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|v| v / total).collect()
}

/// `label,score,prediction` rows. Binary scores are P(class 1); multiclass
/// scores are the probability of the predicted class.
fn predictions_csv(model: &SwitchTabModel, matrix: &FeatureMatrix) -> Result<String> {
    let labels = matrix.labels().ok_or(crate::train::TrainError::MissingLabels)?;
    let z = model.encode(&matrix.to_tensor())?;
    let out = model.predict(&z, Head::Finetune)?;
    let width = *out.shape().last().expect("2-D output");
    let mut csv = String::from("label,score,prediction\n");
    for (i, row) in out.values().chunks(width).enumerate() {
        let (score, prediction) = match labels {
            Labels::Regression { .. } => (row[0], row[0].to_string()),
            Labels::Classes { n_classes, .. } => {
                let p = softmax(row);
                let best = (0..p.len()).fold(0, |b, k| if p[k] > p[b] { k } else { b });
                (if *n_classes == 2 { p[1] } else { p[best] }, best.to_string())
            }
        };
        csv.push_str(&format!("{},{score},{prediction}\n", labels.display(i)));
    }
    Ok(csv)
}

pub fn cmd_finetune(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let (ck, model, data) = load_for_checkpoint(config)?;
    let (train_rows, test_rows) = split(data.n(), config);
    let train = transform(&ck, &data.select_rows(&train_rows)?)?;
    let (tuned, log) = finetune(&model, &train, &config.train)?;
    let eval_rows = if test_rows.is_empty() { train_rows } else { test_rows };
    let held = transform(&ck, &data.select_rows(&eval_rows)?)?;
    let predictions = predictions_csv(&tuned, &held)?;

    let out = Checkpoint::new(&tuned, &ck.preprocessor, &config.train);
    let ck_path = config.out.join("finetuned.json");
    write_out(&config.out.join("finetune_log.csv"), log.to_csv().as_bytes())?;
    write_out(&config.predictions_path(), predictions.as_bytes())?;
    write_out(&ck_path, out.to_json().as_bytes())?;
    report(stdout, format_args!("best epoch {}", log.best_epoch.unwrap_or(0)))?;
    report(stdout, format_args!("wrote {}", ck_path.display()))
}

pub fn cmd_embed(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let (ck, model, data) = load_for_checkpoint(config)?;
    let table = embed(&model, &transform(&ck, &data)?)?;
    let path = config.out.join("embeddings.csv");
    write_out(&path, table.to_csv().as_bytes())?;
    report(stdout, format_args!("wrote {} rows to {}", table.len(), path.display()))
}

#[derive(Serialize)]
struct MetricReport<'a> {
    metric: &'a str,
    value: f64,
    n: usize,
}

pub fn cmd_eval(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let path = config.input(&Some(config.predictions_path()), "eval.predictions")?;
    let mut reader = csv::Reader::from_path(&path).map_err(crate::data::DataError::from)?;
    let headers = reader.headers().map_err(crate::data::DataError::from)?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Usage(format!("{} has no {name:?} column", path.display())))
    };
    let label_col = column("label")?;
    let score_col = column("score")?;
    let predicted_col = match config.eval.kind {
        crate::eval::MetricKind::Accuracy => column("prediction").or(Ok::<_, CliError>(score_col))?,
        _ => score_col,
    };
    let (mut labels, mut preds) = (Vec::new(), Vec::new());
    for (row, record) in reader.records().enumerate() {
        let record = record.map_err(crate::data::DataError::from)?;
        let num = |col: usize| -> Result<f64> {
            let cell = record.get(col).unwrap_or("");
            cell.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("{} row {}: {cell:?} is not a number", path.display(), row + 1)))
        };
        labels.push(num(label_col)?);
        preds.push(num(predicted_col)?);
    }
    let value = metric(&preds, &labels, config.eval.kind)?;
    let json = serde_json::to_string(&MetricReport {
        metric: config.eval.kind.name(),
        value,
        n: labels.len(),
    })
    .expect("report serializes");
    report(stdout, json)
}

pub fn cmd_project(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let (ck, model, data) = load_for_checkpoint(config)?;
    let matrix = transform(&ck, &data)?;
    let table = embed(&model, &matrix)?;
    let groups: Vec<String> = match matrix.labels() {
        Some(l) => (0..l.len()).map(|i| l.display(i)).collect(),
        None => vec!["all".into(); matrix.n()],
    };
    for (name, vectors) in [("salient", &table.s), ("mutual", &table.m)] {
        let proj = pca2(vectors)?;
        let stem = config.out.join(format!("projection_{name}"));
        write_out(&stem.with_extension("csv"), projection_csv(&proj, &groups).as_bytes())?;
        write_out(&stem.with_extension("svg"), projection_svg(&proj, &groups, name).as_bytes())?;
        report(
            stdout,
            format_args!("{name}: explained variance {:.4} {:.4}", proj.explained[0], proj.explained[1]),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct CheckLine<'a> {
    check: &'a str,
    max_rel_error: f64,
    passed: bool,
}

pub fn cmd_gradcheck(config: &RunConfig, stdout: &mut dyn Write) -> Result<()> {
    let seed = config.train.seed;
    let ops = crate::tensor::op_gradchecks(seed, DEFAULT_EPSILON, GRADCHECK_TOLERANCE).map_err(crate::model::ModelError::from)?;
    let loss = loss_gradcheck(LOSS_CHECK_SEED, config.train.alpha, DEFAULT_EPSILON, GRADCHECK_TOLERANCE)?;
    let mut worst = 0.0f64;
    let mut all_passed = true;
    let lines = ops.iter().map(|c| (c.op.as_str(), &c.report)).chain([("loss", &loss)]);
    for (name, r) in lines {
        let r: &GradReport = r;
        worst = worst.max(r.max_rel_error);
        all_passed &= r.passed;
        let line = CheckLine {
            check: name,
            max_rel_error: r.max_rel_error,
            passed: r.passed,
        };
        report(stdout, serde_json::to_string(&line).expect("line serializes"))?;
    }
    report(stdout, format_args!("max relative error {worst:e} (tolerance {GRADCHECK_TOLERANCE:e})"))?;
    if !all_passed {
        return Err(CliError::GradCheckFailed(worst));
    }
    Ok(())
}
