use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ModelConfig;
use super::ModelError;
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Init {
    /// `uniform(−√(1/fan_in), √(1/fan_in))`
    Uniform { fan_in: usize },
    Zeros,
    Ones,
}

#[derive(Clone, Debug, PartialEq)]
pub(crate) struct ParamSpec {
    pub name: String,
    pub shape: Vec<usize>,
    pub init: Init,
}

fn spec(name: String, shape: &[usize], init: Init) -> ParamSpec {
    ParamSpec {
        name,
        shape: shape.to_vec(),
        init,
    }
}

fn affine(out: &mut Vec<ParamSpec>, prefix: &str, fan_in: usize, fan_out: usize, bias: bool) {
    out.push(spec(format!("{prefix}.weight"), &[fan_in, fan_out], Init::Uniform { fan_in }));
    if bias {
        out.push(spec(format!("{prefix}.bias"), &[fan_out], Init::Zeros));
    }
}

/// Every parameter of the architecture, in canonical order.
///
/// Attention keys carry no bias: a key bias shifts each query's scores by a
/// constant, which softmax cancels, so it would never receive gradient.
pub(crate) fn layout(config: &ModelConfig) -> Vec<ParamSpec> {
    let (m, d, d_e) = (config.m, config.d_model, config.d_e);
    let mut out = vec![
        spec("tokenizer.weight".into(), &[m, d], Init::Uniform { fan_in: 1 }),
        spec("tokenizer.bias".into(), &[m, d], Init::Zeros),
    ];
    for l in 0..config.n_layers {
        let p = format!("blocks.{l}");
        out.push(spec(format!("{p}.ln1.gain"), &[d], Init::Ones));
        out.push(spec(format!("{p}.ln1.offset"), &[d], Init::Zeros));
        affine(&mut out, &format!("{p}.attn.q"), d, d, true);
        affine(&mut out, &format!("{p}.attn.k"), d, d, false);
        affine(&mut out, &format!("{p}.attn.v"), d, d, true);
        affine(&mut out, &format!("{p}.attn.out"), d, d, true);
        out.push(spec(format!("{p}.ln2.gain"), &[d], Init::Ones));
        out.push(spec(format!("{p}.ln2.offset"), &[d], Init::Zeros));
        affine(&mut out, &format!("{p}.ff1"), d, config.d_ff, true);
        affine(&mut out, &format!("{p}.ff2"), config.d_ff, d, true);
    }
    out.push(spec("readout.weight".into(), &[m, d], Init::Uniform { fan_in: d }));
    out.push(spec("readout.bias".into(), &[m], Init::Zeros));
    affine(&mut out, "salient", m, d_e, true);
    affine(&mut out, "mutual", m, d_e, true);
    affine(&mut out, "decoder", 2 * d_e, m, true);
    if let Some(head) = config.head {
        let width = head.output_width();
        match config.head_hidden {
            Some(h) => {
                affine(&mut out, "pretrain_head.hidden", m, h, true);
                affine(&mut out, "pretrain_head.out", h, width, true);
            }
            None => affine(&mut out, "pretrain_head", m, width, true),
        }
        affine(&mut out, "finetune_head", m, width, true);
    }
    out
}

/// Named parameter as stored in checkpoints.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamEntry {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

/// Ordered, named parameter tensors.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet {
    names: Vec<String>,
    tensors: Vec<Tensor>,
}

impl ParamSet {
    pub(crate) fn init<R: Rng + ?Sized>(specs: &[ParamSpec], rng: &mut R) -> Self {
        let mut names = Vec::with_capacity(specs.len());
        let mut tensors = Vec::with_capacity(specs.len());
        for s in specs {
            let mut t = Tensor::zeros(&s.shape);
            match s.init {
                Init::Zeros => {}
                Init::Ones => t.values_mut().iter_mut().for_each(|v| *v = 1.0),
                Init::Uniform { fan_in } => {
                    let bound = (1.0 / fan_in as f64).sqrt();
                    for v in t.values_mut() {
                        *v = rng.random_range(-bound..=bound);
                    }
                }
            }
            names.push(s.name.clone());
            tensors.push(t);
        }
        Self { names, tensors }
    }

    pub(crate) fn from_entries(specs: &[ParamSpec], entries: Vec<ParamEntry>) -> Result<Self, ModelError> {
        if entries.len() != specs.len() {
            return Err(ModelError::BadParameters(format!(
                "expected {} parameters, found {}",
                specs.len(),
                entries.len()
            )));
        }
        let mut names = Vec::with_capacity(specs.len());
        let mut tensors = Vec::with_capacity(specs.len());
        for (s, e) in specs.iter().zip(entries) {
            if s.name != e.name || s.shape != e.shape {
                return Err(ModelError::BadParameters(format!(
                    "expected {} {:?}, found {} {:?}",
                    s.name, s.shape, e.name, e.shape
                )));
            }
            let t = Tensor::new(e.shape, e.values).map_err(|err| ModelError::BadParameters(err.to_string()))?;
            if !t.is_finite() {
                return Err(ModelError::BadParameters(format!("{} has non-finite values", e.name)));
            }
            names.push(e.name);
            tensors.push(t);
        }
        Ok(Self { names, tensors })
    }

    pub fn to_entries(&self) -> Vec<ParamEntry> {
        self.names
            .iter()
            .zip(&self.tensors)
            .map(|(n, t)| ParamEntry {
                name: n.clone(),
                shape: t.shape().to_vec(),
                values: t.values().to_vec(),
            })
            .collect()
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor> {
        self.index_of(name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor> {
        self.index_of(name).map(move |i| &mut self.tensors[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor)> {
        self.names.iter().map(String::as_str).zip(&self.tensors)
    }
}
