use rand::Rng;

use super::loss::{cls_loss, recon_loss, total_loss};
use super::Result;
use crate::data::{corrupt, Labels};
use crate::model::{Head, HeadTask, ModelConfig, SwitchTabModel};
use crate::tensor::{grad_check, GradReport, Graph, Tensor, Var};
use crate::util::seeded_rng;

/// Model seed of the reference whole-objective check. With seed 0 one
/// gradient component is about 2e-8, where central-difference roundoff alone
/// gives a relative error near 1.3e-4.
pub const LOSS_CHECK_SEED: u64 = 1;

/// Tiny configuration used for whole-model gradient checks.
pub fn tiny_model_config(seed: u64) -> ModelConfig {
    ModelConfig {
        m: 3,
        d_model: 4,
        n_layers: 3,
        n_heads: 2,
        d_ff: 8,
        d_e: 3,
        head: Some(HeadTask::Classification { n_classes: 2 }),
        head_hidden: None,
        seed,
    }
}

/// Checks the gradient of the full pre-training objective (recovered and
/// switched reconstruction plus `alpha` times the prediction loss) with
/// respect to every parameter of a tiny model, on a corrupted batch of two
/// random pairs.
pub fn loss_gradcheck(seed: u64, alpha: f64, epsilon: f64, tolerance: f64) -> Result<GradReport> {
    let model = SwitchTabModel::init(tiny_model_config(seed))?;
    let mut rng = seeded_rng(seed ^ 0x5eed);
    let mut batch = || Tensor::new(vec![2, 3], (0..6).map(|_| rng.random::<f64>()).collect()).expect("2×3");
    let (x1, x2) = (batch(), batch());
    let pools: Vec<Vec<f64>> = (0..3).map(|j| vec![x1.row(0)[j], x2.row(1)[j], 0.5]).collect();
    let c1 = corrupt(&x1, &pools, 0.3, &mut rng)?.values;
    let c2 = corrupt(&x2, &pools, 0.3, &mut rng)?.values;
    let l1 = Labels::Classes { values: vec![0, 1], n_classes: 2 };
    let l2 = Labels::Classes { values: vec![1, 1], n_classes: 2 };

    let build = |g: &mut Graph, p: &[Var]| -> crate::tensor::Result<Var> {
        let bound = model.bind_vars(g, p.to_vec());
        let t1 = g.constant(x1.clone());
        let t2 = g.constant(x2.clone());
        let a = g.constant(c1.clone());
        let b = g.constant(c2.clone());
        let mut inner = || -> Result<Var> {
            let out = bound.forward_pair(g, a, b, true)?;
            let recon = recon_loss(g, t1, t2, &out)?;
            let p1 = bound.predict(g, out.z1, Head::Pretrain)?;
            let p2 = bound.predict(g, out.z2, Head::Pretrain)?;
            let cls = cls_loss(g, &[(p1, &l1), (p2, &l2)])?;
            total_loss(g, recon.total, Some(cls), alpha)
        };
        inner().map_err(|e| crate::tensor::TensorError::InvalidArgument(e.to_string()))
    };
    // The fine-tuning head comes last in the layout and takes no part here.
    let n_used = model.params().index_of("finetune_head.weight").expect("head configured");
    let params = model.params().tensors().to_vec();
    let report = grad_check(
        |g: &mut Graph, p: &[Var]| {
            let mut all = p.to_vec();
            for t in &params[n_used..] {
                all.push(g.constant(t.clone()));
            }
            build(g, &all)
        },
        &params[..n_used],
        epsilon,
        tolerance,
    )?;
    Ok(report)
}
