use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use switchtab::cli::Checkpoint;
use switchtab::model::SwitchTabModel;
use tempfile::TempDir;

fn switchtab(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_switchtab"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

/// A run directory with `config.json` and a synthesized dataset under `out/`.
fn run_dir(config: &str) -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("config.json"), config).unwrap();
    let o = switchtab(&["synth", "--config", "config.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    dir
}

const SMALL: &str = r#"{
  "data": "out/data.csv",
  "schema": "out/schema.json",
  "synth": {"n": 100},
  "model": {"d_model": 8, "n_layers": 1, "d_ff": 8},
  "train": {"pretrain_epochs": 2, "finetune_epochs": 3, "batch_size": 32}
}"#;

fn read(path: PathBuf) -> String {
    std::fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn synth_writes_nine_columns_and_is_repeatable() {
    let dir = run_dir("{}");
    let csv = read(dir.path().join("out/data.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap().split(',').count(), 9);
    assert_eq!(lines.count(), 500);
    let first = std::fs::read(dir.path().join("out/data.csv")).unwrap();
    let o = switchtab(&["synth", "--config", "config.json"], dir.path());
    assert!(o.status.success());
    assert_eq!(first, std::fs::read(dir.path().join("out/data.csv")).unwrap());
    assert!(read(dir.path().join("out/schema.json")).contains("\"label\""));
}

#[test]
fn pretrain_checkpoint_round_trips() {
    let dir = run_dir(SMALL);
    let o = switchtab(&["pretrain", "--config", "config.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let text = read(dir.path().join("out/checkpoint.json"));
    let ck = Checkpoint::from_json_str(&text).unwrap();
    assert_eq!(ck.format_version, 1);
    let model = SwitchTabModel::from_entries(ck.model_config.clone(), ck.params.clone()).unwrap();
    assert_eq!(model.params().to_entries(), ck.params);
    assert_eq!(Checkpoint::new(&model, &ck.preprocessor, &ck.train_config).to_json(), text);
    let log = read(dir.path().join("out/pretrain_log.csv"));
    assert!(log.starts_with("epoch,recon_recovered,recon_switched,cls,total,val_metric\n"));
    assert_eq!(log.lines().count(), 3);
}

#[test]
fn no_switch_drops_the_switched_column() {
    let dir = run_dir(SMALL);
    let o = switchtab(&["pretrain", "--config", "config.json", "--no-switch"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let log = read(dir.path().join("out/pretrain_log.csv"));
    assert!(!log.lines().next().unwrap().contains("recon_switched"));
}

#[test]
fn label_assisted_without_a_label_column_fails() {
    let dir = run_dir(r#"{"data": "out/data.csv", "schema": "nolabel.json", "train": {"label_assisted": true, "pretrain_epochs": 1}}"#);
    let schema = read(dir.path().join("out/schema.json"));
    let mut value: serde_json::Value = serde_json::from_str(&schema).unwrap();
    value["columns"].as_array_mut().unwrap().retain(|c| c["kind"] != "label");
    std::fs::write(dir.path().join("nolabel.json"), value.to_string()).unwrap();
    let o = switchtab(&["pretrain", "--config", "config.json"], dir.path());
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("label column"), "{}", stderr(&o));
    assert!(!dir.path().join("out/checkpoint.json").exists());
}

#[test]
fn full_pipeline_after_pretraining() {
    let dir = run_dir(&SMALL.replace("\"n\": 100", "\"n\": 100, \"class_dims\": 4, \"shared_dims\": 4"));
    let p = dir.path();
    let data_before = std::fs::read(p.join("out/data.csv")).unwrap();
    for cmd in ["pretrain", "finetune", "embed", "project", "eval"] {
        let o = switchtab(&[cmd, "--config", "config.json"], p);
        assert!(o.status.success(), "{cmd}: {}", stderr(&o));
    }
    assert_eq!(data_before, std::fs::read(p.join("out/data.csv")).unwrap());

    let emb = read(p.join("out/embeddings.csv"));
    let header: Vec<&str> = emb.lines().next().unwrap().split(',').collect();
    assert_eq!(header.len(), 1 + 24 + 1);
    assert_eq!(emb.lines().count(), 101);

    let preds = read(p.join("out/predictions.csv"));
    assert!(preds.starts_with("label,score,prediction\n"));
    assert_eq!(preds.lines().count(), 21);
    assert!(read(p.join("out/finetune_log.csv")).starts_with("epoch,recon_recovered,cls,total,val_metric\n"));
    Checkpoint::from_json_str(&read(p.join("out/finetuned.json"))).unwrap();
    for f in ["projection_salient.csv", "projection_salient.svg", "projection_mutual.csv", "projection_mutual.svg"] {
        assert!(p.join("out").join(f).exists(), "{f}");
    }
    assert!(read(p.join("out/projection_mutual.csv")).starts_with("row_id,pc1,pc2,group\n"));
}

#[test]
fn eval_prints_metric_json() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("preds.csv"), "label,score\n1,0.9\n0,0.1\n").unwrap();
    std::fs::write(dir.path().join("config.json"), r#"{"eval": {"predictions": "preds.csv", "kind": "auc"}}"#).unwrap();
    let o = switchtab(&["eval", "--config", "config.json"], dir.path());
    assert!(o.status.success(), "{}", stderr(&o));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v, serde_json::json!({"metric": "auc", "value": 1.0, "n": 2}));
}

#[test]
fn gradcheck_passes_with_defaults() {
    let dir = tempfile::tempdir().unwrap();
    let o = switchtab(&["gradcheck"], dir.path());
    assert!(o.status.success(), "{}\n{}", stdout(&o), stderr(&o));
    let last = stdout(&o).lines().last().unwrap().to_string();
    let err: f64 = last.split_whitespace().nth(3).unwrap().parse().unwrap();
    assert!(err < 1e-4, "{last}");
}

#[test]
fn schema_mismatch_exits_2() {
    let dir = run_dir(SMALL);
    let p = dir.path();
    assert!(switchtab(&["pretrain", "--config", "config.json"], p).status.success());
    let schema = read(p.join("out/schema.json")).replace("\"c0\"", "\"renamed\"");
    std::fs::write(p.join("out/schema.json"), schema).unwrap();
    let o = switchtab(&["embed", "--config", "config.json"], p);
    assert_eq!(o.status.code(), Some(2), "{}", stderr(&o));
}

#[test]
fn bad_checkpoints_exit_3() {
    let dir = run_dir(SMALL);
    let p = dir.path();
    assert!(switchtab(&["pretrain", "--config", "config.json"], p).status.success());
    let ck = p.join("out/checkpoint.json");
    let text = read(ck.clone());

    std::fs::write(&ck, &text[..text.len() / 2]).unwrap();
    assert_eq!(switchtab(&["embed", "--config", "config.json"], p).status.code(), Some(3));

    std::fs::write(&ck, text.replacen("\"format_version\": 1", "\"format_version\": 2", 1)).unwrap();
    let o = switchtab(&["embed", "--config", "config.json"], p);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("format_version 2"), "{}", stderr(&o));

    std::fs::remove_file(&ck).unwrap();
    assert_eq!(switchtab(&["embed", "--config", "config.json"], p).status.code(), Some(3));
}

#[test]
fn usage_errors_exit_1() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    std::fs::write(p.join("config.json"), r#"{"trian": {}}"#).unwrap();
    assert_eq!(switchtab(&["pretrain", "--config", "config.json"], p).status.code(), Some(1));
    assert_eq!(switchtab(&["bogus"], p).status.code(), Some(1));
    std::fs::write(p.join("config.json"), r#"{"data": "missing.csv", "schema": "missing.json"}"#).unwrap();
    assert_eq!(switchtab(&["pretrain", "--config", "config.json"], p).status.code(), Some(1));
}
