//! End-to-end acceptance checks. Each criterion prints one PASS/FAIL line;
//! the test fails if any criterion fails.

use std::collections::BTreeSet;
use std::io::Write as _;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use switchtab::data::{
    corrupt, fit_preprocessor, synthesize, train_test_split, transform, ColumnSchema, DataError, FeatureMatrix, Labels,
    Schema, SynthSpec, TabularDataset,
};
use switchtab::eval::{auc, concat_rows, embed, held_out_reconstruction, pca2, train_probe, ProbeConfig};
use switchtab::model::{ForwardValues, ModelConfig, SwitchTabModel};
use switchtab::tensor::{op_gradchecks, Tensor, DEFAULT_EPSILON};
use switchtab::train::{
    cls_loss_value, loss_gradcheck, pretrain, recon_loss_value, total_loss_value, TrainConfig, TrainLog, LOSS_CHECK_SEED,
};
use switchtab::util::seeded_rng;

#[global_allocator]
static GLOBAL: mimalloc::MiMalloc = mimalloc::MiMalloc;

const SEEDS: [u64; 3] = [0, 1, 2];
const EPOCHS: usize = 300;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

/// Written straight to the process stdout so the lines show even when the
/// harness captures test output.
fn emit(line: &str) {
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{line}");
    let _ = out.flush();
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    v[v.len() / 2]
}

fn class_labels(x: &FeatureMatrix) -> Vec<usize> {
    match x.labels() {
        Some(Labels::Classes { values, .. }) => values.clone(),
        _ => panic!("synthetic data has class labels"),
    }
}

fn rows(x: &FeatureMatrix) -> Vec<Vec<f64>> {
    (0..x.n()).map(|i| x.row(i).to_vec()).collect()
}

// ---------------------------------------------------------------- 1

fn gradients() -> Outcome {
    let started = Instant::now();
    let mut worst: f64 = 0.0;
    let mut failures = Vec::new();
    for seed in 0..10 {
        for c in op_gradchecks(seed, DEFAULT_EPSILON, 1e-4).unwrap() {
            worst = worst.max(c.report.max_rel_error);
            if !c.report.passed {
                failures.push(format!("{}@{seed}", c.op));
            }
        }
    }
    let loss = loss_gradcheck(LOSS_CHECK_SEED, 1.0, DEFAULT_EPSILON, 1e-4).unwrap();
    let secs = started.elapsed().as_secs_f64();
    outcome(
        failures.is_empty() && loss.passed && secs < 30.0,
        format!(
            "ops max rel err {worst:.2e} over 10 seeds, full loss {:.2e}, {secs:.1}s{}",
            loss.max_rel_error,
            if failures.is_empty() { String::new() } else { format!(", failed: {failures:?}") }
        ),
    )
}

// ---------------------------------------------------------------- 2

fn mse(a: &Tensor, b: &Tensor) -> f64 {
    a.values().iter().zip(b.values()).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.numel() as f64
}

fn forward_values(targets: [&Tensor; 4]) -> ForwardValues {
    let z = Tensor::zeros(&[1, 1]);
    ForwardValues {
        z1: z.clone(),
        z2: z.clone(),
        s1: z.clone(),
        s2: z.clone(),
        m1: z.clone(),
        m2: z,
        recovered1: targets[0].clone(),
        recovered2: targets[1].clone(),
        switched1: targets[2].clone(),
        switched2: targets[3].clone(),
    }
}

fn loss_arithmetic() -> Outcome {
    let mut errs: Vec<(&str, f64)> = Vec::new();
    let t = |shape: &[usize], v: &[f64]| Tensor::new(shape.to_vec(), v.to_vec()).unwrap();

    let x1 = t(&[1, 2], &[0.25, 0.75]);
    let x2 = t(&[1, 2], &[0.5, 0.0]);
    let exact = recon_loss_value(&x1, &x2, &forward_values([&x1, &x2, &x1, &x2]), true).unwrap();
    errs.push(("zero residual", exact.total.abs()));
    let off = t(&[1, 2], &[1.25, 0.75]);
    let one = recon_loss_value(&x1, &x2, &forward_values([&x1, &x2, &off, &x2]), true).unwrap();
    errs.push(("single residual (1,0)", (one.total - 0.5).abs()));

    let mut rng = seeded_rng(11);
    let mut random = |shape: &[usize]| {
        let n = shape.iter().product();
        Tensor::new(shape.to_vec(), (0..n).map(|_| rng.random::<f64>()).collect()).unwrap()
    };
    let (a, b) = (random(&[4, 5]), random(&[4, 5]));
    let outs = [random(&[4, 5]), random(&[4, 5]), random(&[4, 5]), random(&[4, 5])];
    let got = recon_loss_value(&a, &b, &forward_values([&outs[0], &outs[1], &outs[2], &outs[3]]), true).unwrap();
    let want = mse(&a, &outs[0]) + mse(&b, &outs[1]) + mse(&a, &outs[2]) + mse(&b, &outs[3]);
    errs.push(("four random terms", (got.total - want).abs()));
    let got = recon_loss_value(&a, &b, &forward_values([&outs[0], &outs[1], &outs[2], &outs[3]]), false).unwrap();
    errs.push(("recovered only", (got.total - mse(&a, &outs[0]) - mse(&b, &outs[1])).abs()));

    let two = |v: Vec<usize>| Labels::Classes { values: v, n_classes: 2 };
    let sure = t(&[2, 2], &[40.0, -40.0, -40.0, 40.0]);
    errs.push(("certain logits", cls_loss_value(&[(&sure, &two(vec![0, 1]))]).unwrap().abs()));
    let flat = t(&[1, 2], &[0.0, 0.0]);
    errs.push(("uniform logits", (cls_loss_value(&[(&flat, &two(vec![1]))]).unwrap() - 2f64.ln()).abs()));
    let pred = t(&[2, 1], &[1.5, -2.0]);
    let exact = Labels::Regression { values: vec![1.5, -2.0] };
    errs.push(("regression exact", cls_loss_value(&[(&pred, &exact)]).unwrap().abs()));
    let shifted = Labels::Regression { values: vec![2.5, -2.0] };
    let other = t(&[1, 1], &[0.0]);
    let far = Labels::Regression { values: vec![3.0] };
    // squared errors 1, 0, 9 pooled over both streams: sqrt(10 / 3)
    let pooled = cls_loss_value(&[(&pred, &shifted), (&other, &far)]).unwrap();
    errs.push(("regression pooled", (pooled - (10.0f64 / 3.0).sqrt()).abs()));

    errs.push(("total a=1", (total_loss_value(0.5, Some(0.7), 1.0) - 1.2).abs()));
    errs.push(("total a=0", (total_loss_value(0.5, Some(0.7), 0.0) - 0.5).abs()));
    errs.push(("total a=2", (total_loss_value(0.5, Some(0.7), 2.0) - 1.9).abs()));
    errs.push(("total no cls", (total_loss_value(0.5, None, 1.0) - 0.5).abs()));

    let (name, worst) = errs.iter().copied().fold(("", 0.0), |b, e| if e.1 > b.1 { e } else { b });
    let worst_case = if worst > 0.0 { format!(" ({name})") } else { String::new() };
    outcome(worst < 1e-12, format!("{} cases, max abs err {worst:.1e}{worst_case}", errs.len()))
}

// ---------------------------------------------------------------- 3

/// Random table as CSV text: numeric and categorical columns with missing cells.
fn random_table<R: Rng>(rng: &mut R) -> (Schema, String, Vec<Option<usize>>) {
    let n_cols = rng.random_range(1..=10);
    let n_rows = rng.random_range(2..=200);
    let mut cols = Vec::new();
    let mut levels = Vec::new();
    for j in 0..n_cols {
        if rng.random_bool(0.5) {
            cols.push(ColumnSchema::numerical(&format!("x{j}")));
            levels.push(None);
        } else {
            cols.push(ColumnSchema::categorical(&format!("k{j}")));
            levels.push(Some(rng.random_range(1..=6)));
        }
    }
    let schema = Schema::new(cols).unwrap();
    let missing: Vec<f64> = (0..n_cols).map(|_| rng.random_range(0.0..0.5)).collect();
    let mut csv = schema.columns.iter().map(|c| c.name.as_str()).collect::<Vec<_>>().join(",");
    csv.push('\n');
    for _ in 0..n_rows {
        let cells: Vec<String> = (0..n_cols)
            .map(|j| {
                if rng.random_bool(missing[j]) {
                    return ["", "NA", "NaN", "null"][rng.random_range(0..4)].to_string();
                }
                match levels[j] {
                    None => format!("{:.3}", rng.random_range(-50.0..50.0)),
                    Some(k) => format!("lvl{}", rng.random_range(0..k)),
                }
            })
            .collect();
        csv.push_str(&cells.join(","));
        csv.push('\n');
    }
    (schema, csv, levels)
}

fn preprocessing() -> Outcome {
    let mut rng = seeded_rng(3);
    let tokens: Vec<String> = ["", "NA", "NaN", "null"].iter().map(|s| s.to_string()).collect();
    let (mut cases, mut skipped, mut problems) = (0, 0, Vec::new());
    for case in 0..300 {
        let (schema, csv, _) = random_table(&mut rng);
        let data = TabularDataset::from_csv_reader(csv.as_bytes(), &schema, &tokens).unwrap();
        let prep = match fit_preprocessor(&data) {
            Ok(p) => p,
            Err(DataError::AllColumnsDropped) => {
                skipped += 1;
                continue;
            }
            Err(e) => panic!("case {case}: {e}"),
        };
        let x = transform(&prep, &data).unwrap();
        cases += 1;
        if x.values().iter().any(|v| !v.is_finite() || !(0.0..=1.0).contains(v)) {
            problems.push(format!("case {case}: value outside [0,1] or missing"));
        }
        // Expected width from the raw text: k observed levels give k - 1 columns.
        let mut expected = 0;
        let lines: Vec<Vec<&str>> = csv.lines().skip(1).map(|l| l.split(',').collect()).collect();
        for (j, col) in schema.columns.iter().enumerate() {
            let present: BTreeSet<&str> =
                lines.iter().map(|r| r[j]).filter(|c| !tokens.iter().any(|t| t == c)).collect();
            let is_cat = col.name.starts_with('k');
            expected += match (is_cat, present.len()) {
                (_, 0) => 0,
                (false, _) => 1,
                (true, k) => k - 1,
            };
        }
        if x.m() != expected {
            problems.push(format!("case {case}: width {} != {expected}", x.m()));
        }
    }
    outcome(
        problems.is_empty(),
        format!("{cases} random tables ({skipped} with no usable column){}", problems.first().map_or(String::new(), |p| format!(", {p}"))),
    )
}

// ---------------------------------------------------------------- 4

fn corruption() -> Outcome {
    let mut rng = seeded_rng(4);
    let mut checked = 0;
    for ratio in [0.0, 0.3, 1.0] {
        for m in [5usize, 10, 20] {
            let pools: Vec<Vec<f64>> = (0..m).map(|_| (0..50).map(|_| rng.random::<f64>()).collect()).collect();
            let batch = Tensor::new(vec![100, m], (0..100 * m).map(|_| rng.random::<f64>()).collect()).unwrap();
            let out = corrupt(&batch, &pools, ratio, &mut rng).unwrap();
            let t = (ratio * m as f64).floor() as usize;
            for r in 0..100 {
                let changed: Vec<usize> =
                    (0..m).filter(|&j| batch.values()[r * m + j] != out.values.values()[r * m + j]).collect();
                if changed.len() != t || changed != out.mask[r] {
                    return outcome(false, format!("ratio {ratio} M {m} row {r}: {} changed, want {t}", changed.len()));
                }
                if let Some(&j) = changed.iter().find(|&&j| !pools[j].contains(&out.values.values()[r * m + j])) {
                    return outcome(false, format!("ratio {ratio} M {m} row {r}: column {j} value not in its pool"));
                }
                checked += 1;
            }
        }
    }
    outcome(true, format!("{checked} rows over 9 settings"))
}

// ---------------------------------------------------------------- 5-8

struct Split {
    train: FeatureMatrix,
    test: FeatureMatrix,
}

fn synthetic_split(seed: u64) -> Split {
    let data = synthesize(&SynthSpec::default()).unwrap();
    let (tr, te) = train_test_split(data.n(), 0.2, &mut seeded_rng(seed));
    let train = data.select_rows(&tr).unwrap();
    let test = data.select_rows(&te).unwrap();
    let prep = fit_preprocessor(&train).unwrap();
    Split {
        train: transform(&prep, &train).unwrap(),
        test: transform(&prep, &test).unwrap(),
    }
}

fn train_model(split: &Split, seed: u64, switching: bool) -> (SwitchTabModel, TrainLog) {
    let config = TrainConfig {
        pretrain_epochs: EPOCHS,
        seed,
        switching,
        label_assisted: true,
        ..TrainConfig::default()
    };
    pretrain(&split.train, &config, ModelConfig::new(split.train.m()).with_seed(seed)).unwrap()
}

struct Trained {
    split: Split,
    model: SwitchTabModel,
    log: TrainLog,
}

fn probe_accuracy(train: &[Vec<f64>], ytr: &[usize], test: &[Vec<f64>], yte: &[usize]) -> f64 {
    let probe = train_probe(train, ytr, 2, &ProbeConfig::default()).unwrap();
    let hits = probe.predict_all(test).unwrap().iter().zip(yte).filter(|(p, y)| p == y).count();
    hits as f64 / yte.len() as f64
}

fn probe_auc(train: &[Vec<f64>], ytr: &[usize], test: &[Vec<f64>], yte: &[usize]) -> f64 {
    let probe = train_probe(train, ytr, 2, &ProbeConfig::default()).unwrap();
    auc(&probe.positive_scores(test).unwrap(), yte).unwrap()
}

fn separation(runs: &[Trained], train_secs: f64) -> Outcome {
    let started = Instant::now();
    let (mut s_acc, mut m_acc) = (Vec::new(), Vec::new());
    for r in runs {
        let (ytr, yte) = (class_labels(&r.split.train), class_labels(&r.split.test));
        let etr = embed(&r.model, &r.split.train).unwrap();
        let ete = embed(&r.model, &r.split.test).unwrap();
        s_acc.push(probe_accuracy(&etr.s, &ytr, &ete.s, &yte));
        m_acc.push(probe_accuracy(&etr.m, &ytr, &ete.m, &yte));
    }
    let secs = train_secs + started.elapsed().as_secs_f64();
    let (s, m) = (median(s_acc.clone()), median(m_acc.clone()));
    outcome(
        s >= 0.90 && m <= 0.75 && secs < 180.0,
        format!("median probe accuracy s {s:.3} (need >= 0.90), m {m:.3} (need <= 0.75); per seed s {s_acc:.3?} m {m_acc:.3?}; {secs:.0}s"),
    )
}

fn plug_and_play(runs: &[Trained]) -> Outcome {
    let (mut raw, mut cat) = (Vec::new(), Vec::new());
    for r in runs {
        let (tr, te) = (&r.split.train, &r.split.test);
        let (ytr, yte) = (class_labels(tr), class_labels(te));
        raw.push(probe_auc(&rows(tr), &ytr, &rows(te), &yte));
        let etr = embed(&r.model, tr).unwrap();
        let ete = embed(&r.model, te).unwrap();
        let xtr = concat_rows(tr, &etr, r.model.config()).unwrap();
        let xte = concat_rows(te, &ete, r.model.config()).unwrap();
        cat.push(probe_auc(&xtr, &ytr, &xte, &yte));
    }
    let (a, b) = (median(cat.clone()), median(raw.clone()));
    outcome(a >= b - 0.01, format!("median AUC x+s {a:.4} vs raw x {b:.4}; per seed {cat:.4?} vs {raw:.4?}"))
}

fn switching(runs: &[Trained]) -> Outcome {
    let mut ratios = Vec::new();
    let mut pairs = Vec::new();
    for (r, &seed) in runs.iter().zip(&SEEDS) {
        let (ablation, _) = train_model(&r.split, seed, false);
        let full = held_out_reconstruction(&r.model, &r.split.test, seed).unwrap().switched.unwrap();
        let none = held_out_reconstruction(&ablation, &r.split.test, seed).unwrap().switched.unwrap();
        ratios.push(full / none);
        pairs.push((full, none));
    }
    let ratio = median(ratios.clone());
    outcome(
        ratio <= 0.8,
        format!("median switched-error ratio full/no-switch {ratio:.3} (need <= 0.8); per seed {pairs:.4?}"),
    )
}

fn progress(runs: &[Trained]) -> Outcome {
    let mut detail = Vec::new();
    let mut ok = true;
    for r in runs {
        let first = r.log.records.first().unwrap();
        let last = r.log.records.last().unwrap();
        let recon = |e: &switchtab::train::EpochRecord| e.recon_recovered.unwrap() + e.recon_switched.unwrap_or(0.0);
        let (a, b) = (recon(first), recon(last));
        ok &= last.epoch == EPOCHS && b < 0.5 * a;
        detail.push(format!("{a:.4} -> {b:.4}"));
    }
    outcome(ok, format!("L_recon epoch 1 -> {EPOCHS}: {}", detail.join(", ")))
}

// ---------------------------------------------------------------- 9

fn determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path();
    let config = r#"{"data": "out/data.csv", "schema": "out/schema.json", "synth": {"n": 120},
        "train": {"pretrain_epochs": 3, "label_assisted": true}}"#;
    std::fs::write(p.join("config.json"), config).unwrap();
    let run = |args: &[&str], cwd: &Path| {
        let o = Command::new(env!("CARGO_BIN_EXE_switchtab")).args(args).current_dir(cwd).output().unwrap();
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    };
    run(&["synth", "--config", "config.json"], p);
    run(&["pretrain", "--config", "config.json", "--seed", "5"], p);
    let first = std::fs::read(p.join("out/checkpoint.json")).unwrap();
    run(&["pretrain", "--config", "config.json", "--seed", "5"], p);
    let second = std::fs::read(p.join("out/checkpoint.json")).unwrap();
    outcome(first == second, format!("two checkpoints of {} bytes, identical: {}", first.len(), first == second))
}

// ---------------------------------------------------------------- 10

/// Cyclic Jacobi eigendecomposition of a symmetric matrix: (values, vectors as columns).
fn jacobi(mut a: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let d = a.len();
    let mut v: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..d).flat_map(|i| (0..d).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| a[i][j] * a[i][j]).sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..d {
            for q in p + 1..d {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..d {
                    let (akp, akq) = (a[k][p], a[k][q]);
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..d {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    ((0..d).map(|i| a[i][i]).collect(), v)
}

fn sign_normalized(mut v: Vec<f64>) -> Vec<f64> {
    let top = v.iter().copied().fold(0.0f64, |b, x| if x.abs() > b.abs() { x } else { b });
    if top < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
    v
}

fn pca_oracle() -> Outcome {
    let mut rng = seeded_rng(10);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let n = rng.random_range(30..=120);
        let scales: Vec<f64> = (0..10).map(|_| rng.random_range(0.1..4.0)).collect();
        let mix: Vec<Vec<f64>> = (0..10).map(|_| (0..10).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
        let data: Vec<Vec<f64>> = (0..n)
            .map(|_| {
                let latent: Vec<f64> = scales.iter().map(|s| s * rng.sample::<f64, _>(StandardNormal)).collect();
                (0..10).map(|i| (0..10).map(|k| mix[i][k] * latent[k]).sum::<f64>() + i as f64).collect()
            })
            .collect();
        let mean: Vec<f64> = (0..10).map(|j| data.iter().map(|r| r[j]).sum::<f64>() / n as f64).collect();
        let cov: Vec<Vec<f64>> = (0..10)
            .map(|i| {
                (0..10)
                    .map(|j| data.iter().map(|r| (r[i] - mean[i]) * (r[j] - mean[j])).sum::<f64>() / (n - 1) as f64)
                    .collect()
            })
            .collect();
        let (values, vectors) = jacobi(cov);
        let mut order: Vec<usize> = (0..10).collect();
        order.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
        let proj = pca2(&data).unwrap();
        for k in 0..2 {
            let want = sign_normalized((0..10).map(|i| vectors[i][order[k]]).collect());
            let got = sign_normalized(proj.components[k].clone());
            for (a, b) in want.iter().zip(&got) {
                worst = worst.max((a - b).abs());
            }
            worst = worst.max((proj.explained[k] - values[order[k]]).abs() / values[order[k]]);
        }
    }
    outcome(worst < 1e-6, format!("20 datasets, max component deviation {worst:.2e}"))
}

// ---------------------------------------------------------------- 11

fn auc_brute_force() -> Outcome {
    let mut rng = seeded_rng(11);
    let mut sets = 0;
    while sets < 50 {
        let n = rng.random_range(2..=30);
        let labels: Vec<usize> = (0..n).map(|_| rng.random_range(0..2)).collect();
        if labels.iter().all(|&l| l == labels[0]) {
            continue;
        }
        // A small score alphabet forces ties.
        let scores: Vec<f64> = (0..n).map(|_| f64::from(rng.random_range(0..6u8)) / 4.0).collect();
        let (mut twice_wins, mut pairs) = (0u64, 0u64);
        for i in (0..n).filter(|&i| labels[i] == 1) {
            for j in (0..n).filter(|&j| labels[j] == 0) {
                pairs += 1;
                twice_wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 2,
                    std::cmp::Ordering::Equal => 1,
                    std::cmp::Ordering::Less => 0,
                };
            }
        }
        let want = twice_wins as f64 / (2 * pairs) as f64;
        let got = auc(&scores, &labels).unwrap();
        if got != want {
            return outcome(false, format!("set {sets}: auc {got} vs brute force {want}"));
        }
        sets += 1;
    }
    outcome(true, "50 random sets with ties, exact equality")
}

// ----------------------------------------------------------------

fn run(id: usize, name: &str, check: impl FnOnce() -> Outcome, failed: &mut Vec<usize>) {
    let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
        let msg = e
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_default();
        outcome(false, format!("panicked: {msg}"))
    });
    if !result.passed {
        failed.push(id);
    }
    emit(&format!(
        "criterion {id:>2} {:<26} {}  {}",
        name,
        if result.passed { "PASS" } else { "FAIL" },
        result.detail
    ));
}

#[test]
fn acceptance() {
    let mut failed = Vec::new();
    emit("");
    run(1, "gradient correctness", gradients, &mut failed);
    run(2, "loss arithmetic", loss_arithmetic, &mut failed);
    run(3, "preprocessing invariants", preprocessing, &mut failed);
    run(4, "corruption contract", corruption, &mut failed);

    let started = Instant::now();
    let runs: Vec<Trained> = SEEDS
        .iter()
        .map(|&seed| {
            let split = synthetic_split(seed);
            let (model, log) = train_model(&split, seed, true);
            Trained { split, model, log }
        })
        .collect();
    let train_secs = started.elapsed().as_secs_f64();
    run(5, "decoupling separation", || separation(&runs, train_secs), &mut failed);
    run(6, "plug-and-play direction", || plug_and_play(&runs), &mut failed);
    run(7, "switching contribution", || switching(&runs), &mut failed);
    run(8, "training progress", || progress(&runs), &mut failed);

    run(9, "determinism", determinism, &mut failed);
    run(10, "pca oracle", pca_oracle, &mut failed);
    run(11, "auc exactness", auc_brute_force, &mut failed);
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
