//! The asymmetric encoder–decoder: a feature-tokenizer transformer encoder,
//! sigmoid salient/mutual projectors, a one-layer sigmoid decoder, and affine
//! prediction heads.
//!
//! Each input feature `x_j` becomes a token `x_j · w_j + b_j`. The tokens go
//! through pre-norm transformer blocks (self-attention over the `M` feature
//! tokens of one row, then a ReLU feed-forward, each with a residual), and a
//! per-token scalar read-out maps them back to `z ∈ ℝ^M`. Rows never interact.

mod config;
mod params;

use rand::Rng;
use thiserror::Error;

pub use config::{HeadTask, ModelConfig};
pub use params::{ParamEntry, ParamSet};

use crate::tensor::{Graph, Tensor, TensorError, Var};
use crate::util::seeded_rng;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ModelError {
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("expected input width {expected}, got {got}")]
    WidthMismatch { expected: usize, got: usize },
    #[error("paired batches differ in size ({0} vs {1})")]
    BatchMismatch(usize, usize),
    #[error("input contains non-finite values")]
    NonFiniteInput,
    #[error("{0}")]
    HeadMismatch(String),
    #[error("bad parameters: {0}")]
    BadParameters(String),
    #[error(transparent)]
    Tensor(#[from] TensorError),
}

type Result<T, E = ModelError> = std::result::Result<T, E>;

/// Which prediction head to apply to `z`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Head {
    Pretrain,
    Finetune,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SwitchTabModel {
    config: ModelConfig,
    params: ParamSet,
}

#[derive(Clone, Copy)]
struct Affine {
    weight: Var,
    bias: Option<Var>,
}

impl Affine {
    fn apply(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let xw = g.matmul(x, self.weight)?;
        Ok(match self.bias {
            Some(b) => g.add(xw, b)?,
            None => xw,
        })
    }
}

#[derive(Clone, Copy)]
struct Block {
    ln1: (Var, Var),
    q: Affine,
    k: Affine,
    v: Affine,
    out: Affine,
    ln2: (Var, Var),
    ff1: Affine,
    ff2: Affine,
}

enum PredictionHead {
    Linear(Affine),
    Mlp(Affine, Affine),
}

/// Graph-side outputs of the paired forward pass.
#[derive(Clone, Copy, Debug)]
pub struct ForwardOutputs {
    pub z1: Var,
    pub z2: Var,
    pub s1: Var,
    pub s2: Var,
    pub m1: Var,
    pub m2: Var,
    /// `d(m₁ ⊕ s₁)`
    pub recovered1: Var,
    /// `d(m₂ ⊕ s₂)`
    pub recovered2: Var,
    /// `d(m₂ ⊕ s₁)`; absent when switched reconstructions were not requested.
    pub switched1: Option<Var>,
    /// `d(m₁ ⊕ s₂)`
    pub switched2: Option<Var>,
}

/// Concrete values of [`ForwardOutputs`].
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardValues {
    pub z1: Tensor,
    pub z2: Tensor,
    pub s1: Tensor,
    pub s2: Tensor,
    pub m1: Tensor,
    pub m2: Tensor,
    pub recovered1: Tensor,
    pub recovered2: Tensor,
    pub switched1: Tensor,
    pub switched2: Tensor,
}

/// Model parameters recorded as leaves of one [`Graph`].
pub struct BoundModel {
    config: ModelConfig,
    /// One var per parameter, in [`ParamSet`] order.
    pub params: Vec<Var>,
    ones: Var,
    tok_w: Var,
    tok_b: Var,
    blocks: Vec<Block>,
    readout_w: Var,
    readout_b: Var,
    salient: Affine,
    mutual: Affine,
    decoder: Affine,
    pretrain_head: Option<PredictionHead>,
    finetune_head: Option<Affine>,
}

impl SwitchTabModel {
    /// Fresh parameters drawn from a generator seeded with `config.seed`.
    pub fn init(config: ModelConfig) -> Result<Self> {
        let mut rng = seeded_rng(config.seed);
        Self::init_with_rng(config, &mut rng)
    }

    pub fn init_with_rng<R: Rng + ?Sized>(config: ModelConfig, rng: &mut R) -> Result<Self> {
        config.validate()?;
        let params = ParamSet::init(&params::layout(&config), rng);
        Ok(Self { config, params })
    }

    pub fn from_entries(config: ModelConfig, entries: Vec<ParamEntry>) -> Result<Self> {
        config.validate()?;
        let params = ParamSet::from_entries(&params::layout(&config), entries)?;
        Ok(Self { config, params })
    }

    /// A copy carrying heads for `head`. Parameters shared with the new
    /// layout are kept; new ones are freshly initialised from `rng`.
    pub fn with_head<R: Rng + ?Sized>(&self, head: HeadTask, rng: &mut R) -> Result<Self> {
        if self.config.head == Some(head) {
            return Ok(self.clone());
        }
        let config = ModelConfig {
            head: Some(head),
            ..self.config.clone()
        };
        config.validate()?;
        let mut params = ParamSet::init(&params::layout(&config), rng);
        for (name, t) in self.params.iter() {
            if let Some(slot) = params.get_mut(name) {
                if slot.shape() == t.shape() {
                    *slot = t.clone();
                }
            }
        }
        Ok(Self { config, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn params(&self) -> &ParamSet {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut ParamSet {
        &mut self.params
    }

    /// Indices (into [`ParamSet`]) of the encoder parameters.
    pub fn encoder_param_indices(&self) -> Vec<usize> {
        self.params
            .names()
            .iter()
            .enumerate()
            .filter(|(_, n)| n.starts_with("tokenizer.") || n.starts_with("blocks.") || n.starts_with("readout."))
            .map(|(i, _)| i)
            .collect()
    }

    /// Records every parameter on `g`. Trainable parameters receive gradients.
    pub fn bind(&self, g: &mut Graph, trainable: bool) -> BoundModel {
        let vars: Vec<Var> = self
            .params
            .tensors()
            .iter()
            .map(|t| if trainable { g.param(t.clone()) } else { g.constant(t.clone()) })
            .collect();
        self.resolve(g, vars)
    }

    /// Binds `tensors` (same order and shapes as this model's parameters)
    /// through caller-created vars.
    pub fn bind_vars(&self, g: &mut Graph, vars: Vec<Var>) -> BoundModel {
        assert_eq!(vars.len(), self.params.len(), "one var per parameter");
        self.resolve(g, vars)
    }

    fn resolve(&self, g: &mut Graph, vars: Vec<Var>) -> BoundModel {
        let get = |name: &str| -> Var {
            vars[self.params.index_of(name).unwrap_or_else(|| panic!("missing parameter {name}"))]
        };
        let aff = |prefix: &str, bias: bool| Affine {
            weight: get(&format!("{prefix}.weight")),
            bias: bias.then(|| get(&format!("{prefix}.bias"))),
        };
        let blocks = (0..self.config.n_layers)
            .map(|l| {
                let p = format!("blocks.{l}");
                Block {
                    ln1: (get(&format!("{p}.ln1.gain")), get(&format!("{p}.ln1.offset"))),
                    q: aff(&format!("{p}.attn.q"), true),
                    k: aff(&format!("{p}.attn.k"), false),
                    v: aff(&format!("{p}.attn.v"), true),
                    out: aff(&format!("{p}.attn.out"), true),
                    ln2: (get(&format!("{p}.ln2.gain")), get(&format!("{p}.ln2.offset"))),
                    ff1: aff(&format!("{p}.ff1"), true),
                    ff2: aff(&format!("{p}.ff2"), true),
                }
            })
            .collect();
        let (pretrain_head, finetune_head) = match self.config.head {
            None => (None, None),
            Some(_) => {
                let pre = match self.config.head_hidden {
                    Some(_) => PredictionHead::Mlp(aff("pretrain_head.hidden", true), aff("pretrain_head.out", true)),
                    None => PredictionHead::Linear(aff("pretrain_head", true)),
                };
                (Some(pre), Some(aff("finetune_head", true)))
            }
        };
        let ones = g.constant(Tensor::full(&[1, self.config.d_model], 1.0));
        BoundModel {
            config: self.config.clone(),
            ones,
            tok_w: get("tokenizer.weight"),
            tok_b: get("tokenizer.bias"),
            blocks,
            readout_w: get("readout.weight"),
            readout_b: get("readout.bias"),
            salient: aff("salient", true),
            mutual: aff("mutual", true),
            decoder: aff("decoder", true),
            pretrain_head,
            finetune_head,
            params: vars,
        }
    }

    /// `z = f(x)` for a `[B, M]` batch.
    pub fn encode(&self, x: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let xv = g.constant(x.clone());
        let z = bound.encode(&mut g, xv)?;
        Ok(g.value(z).clone())
    }

    /// `(s, m)` from `z`.
    pub fn decouple(&self, z: &Tensor) -> Result<(Tensor, Tensor)> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let zv = g.constant(z.clone());
        let (s, m) = bound.decouple(&mut g, zv)?;
        Ok((g.value(s).clone(), g.value(m).clone()))
    }

    /// `d(mutual ⊕ salient)`.
    pub fn decode(&self, mutual: &Tensor, salient: &Tensor) -> Result<Tensor> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let mv = g.constant(mutual.clone());
        let sv = g.constant(salient.clone());
        let out = bound.decode(&mut g, mv, sv)?;
        Ok(g.value(out).clone())
    }

    pub fn forward_pair(&self, x1: &Tensor, x2: &Tensor) -> Result<ForwardValues> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let a = g.constant(x1.clone());
        let b = g.constant(x2.clone());
        let o = bound.forward_pair(&mut g, a, b, true)?;
        let v = |var: Var| g.value(var).clone();
        Ok(ForwardValues {
            z1: v(o.z1),
            z2: v(o.z2),
            s1: v(o.s1),
            s2: v(o.s2),
            m1: v(o.m1),
            m2: v(o.m2),
            recovered1: v(o.recovered1),
            recovered2: v(o.recovered2),
            switched1: v(o.switched1.expect("requested")),
            switched2: v(o.switched2.expect("requested")),
        })
    }

    /// Logits (`[B, n_classes]`) or regression values (`[B, 1]`) from `z`.
    pub fn predict(&self, z: &Tensor, head: Head) -> Result<Tensor> {
        let mut g = Graph::new();
        let bound = self.bind(&mut g, false);
        let zv = g.constant(z.clone());
        let out = bound.predict(&mut g, zv, head)?;
        Ok(g.value(out).clone())
    }
}

impl BoundModel {
    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    fn check_width(&self, g: &Graph, x: Var, expected: usize) -> Result<usize> {
        match g.shape(x) {
            &[b, w] if w == expected => Ok(b),
            &[_, w] => Err(ModelError::WidthMismatch { expected, got: w }),
            other => Err(TensorError::InvalidShape {
                shape: other.to_vec(),
                reason: "expected a [batch, width] matrix".into(),
            }
            .into()),
        }
    }

    pub fn encode(&self, g: &mut Graph, x: Var) -> Result<Var> {
        let (m, d) = (self.config.m, self.config.d_model);
        let b = self.check_width(g, x, m)?;
        if !g.value(x).is_finite() {
            return Err(ModelError::NonFiniteInput);
        }
        let col = g.reshape(x, &[b, m, 1])?;
        let spread = g.matmul(col, self.ones)?;
        let scaled = g.mul(spread, self.tok_w)?;
        let mut h = g.add(scaled, self.tok_b)?;

        let heads = self.config.n_heads;
        let dh = d / heads;
        let inv_sqrt = 1.0 / (dh as f64).sqrt();
        for block in &self.blocks {
            let a = g.layer_norm(h, block.ln1.0, block.ln1.1)?;
            let q = block.q.apply(g, a)?;
            let k = block.k.apply(g, a)?;
            let v = block.v.apply(g, a)?;
            let mut outs = Vec::with_capacity(heads);
            for hd in 0..heads {
                let qh = g.slice(q, hd * dh, dh)?;
                let kh = g.slice(k, hd * dh, dh)?;
                let vh = g.slice(v, hd * dh, dh)?;
                let kt = g.transpose(kh)?;
                let scores = g.matmul(qh, kt)?;
                let scores = g.scale(scores, inv_sqrt)?;
                let attn = g.softmax(scores)?;
                outs.push(g.matmul(attn, vh)?);
            }
            let merged = if outs.len() == 1 { outs[0] } else { g.concat(&outs)? };
            let attended = block.out.apply(g, merged)?;
            h = g.add(h, attended)?;

            let f = g.layer_norm(h, block.ln2.0, block.ln2.1)?;
            let f = block.ff1.apply(g, f)?;
            let f = g.relu(f)?;
            let f = block.ff2.apply(g, f)?;
            h = g.add(h, f)?;
        }
        // z_j = <h_j, r_j> + c_j, computed as d · mean(h ⊙ r).
        let weighted = g.mul(h, self.readout_w)?;
        let avg = g.mean(weighted, Some(2))?;
        let summed = g.scale(avg, d as f64)?;
        Ok(g.add(summed, self.readout_b)?)
    }

    /// Salient and mutual embeddings, in that order.
    pub fn decouple(&self, g: &mut Graph, z: Var) -> Result<(Var, Var)> {
        self.check_width(g, z, self.config.m)?;
        let s = self.salient.apply(g, z)?;
        let s = g.sigmoid(s)?;
        let m = self.mutual.apply(g, z)?;
        let m = g.sigmoid(m)?;
        Ok((s, m))
    }

    /// Decodes `mutual ⊕ salient`; the mutual part always comes first.
    pub fn decode(&self, g: &mut Graph, mutual: Var, salient: Var) -> Result<Var> {
        let bm = self.check_width(g, mutual, self.config.d_e)?;
        let bs = self.check_width(g, salient, self.config.d_e)?;
        if bm != bs {
            return Err(ModelError::BatchMismatch(bm, bs));
        }
        let joined = g.concat(&[mutual, salient])?;
        let out = self.decoder.apply(g, joined)?;
        Ok(g.sigmoid(out)?)
    }

    /// Encodes both (corrupted) batches, decouples them, and decodes the
    /// recovered pairs and, when `switched` is set, the switched pairs.
    pub fn forward_pair(&self, g: &mut Graph, x1: Var, x2: Var, switched: bool) -> Result<ForwardOutputs> {
        let (b1, b2) = (g.shape(x1)[0], g.shape(x2)[0]);
        if b1 != b2 {
            return Err(ModelError::BatchMismatch(b1, b2));
        }
        let z1 = self.encode(g, x1)?;
        let z2 = self.encode(g, x2)?;
        let (s1, m1) = self.decouple(g, z1)?;
        let (s2, m2) = self.decouple(g, z2)?;
        let recovered1 = self.decode(g, m1, s1)?;
        let recovered2 = self.decode(g, m2, s2)?;
        let (switched1, switched2) = if switched {
            (Some(self.decode(g, m2, s1)?), Some(self.decode(g, m1, s2)?))
        } else {
            (None, None)
        };
        Ok(ForwardOutputs {
            z1,
            z2,
            s1,
            s2,
            m1,
            m2,
            recovered1,
            recovered2,
            switched1,
            switched2,
        })
    }

    pub fn predict(&self, g: &mut Graph, z: Var, head: Head) -> Result<Var> {
        self.check_width(g, z, self.config.m)?;
        match head {
            Head::Pretrain => match &self.pretrain_head {
                Some(PredictionHead::Linear(a)) => a.apply(g, z),
                Some(PredictionHead::Mlp(hidden, out)) => {
                    let h = hidden.apply(g, z)?;
                    let h = g.relu(h)?;
                    out.apply(g, h)
                }
                None => Err(ModelError::HeadMismatch("model has no pre-training head".into())),
            },
            Head::Finetune => match &self.finetune_head {
                Some(a) => a.apply(g, z),
                None => Err(ModelError::HeadMismatch("model has no fine-tuning head".into())),
            },
        }
    }
}
