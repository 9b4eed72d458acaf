//! Checkpoint weights and the archive name-mapping table.

use std::collections::BTreeMap;
use std::path::Path;

use crate::error::{Error, Result};
use crate::linalg::Tensor;

use super::archive::read_archive;
use super::config::ModelConfig;

/// Per-layer parameters. Dense kernels are stored `[out, in]` and applied
/// as `x * W^T + b`, the layout the archives use.
#[derive(Debug, Clone)]
pub struct LayerWeights {
    pub w_query: Tensor,
    pub b_query: Vec<f32>,
    pub w_key: Tensor,
    pub b_key: Vec<f32>,
    pub w_value: Tensor,
    pub b_value: Vec<f32>,
    pub w_output: Tensor,
    pub b_output: Vec<f32>,
    pub attn_ln_gamma: Vec<f32>,
    pub attn_ln_beta: Vec<f32>,
    pub ffn_in: Tensor,
    pub ffn_in_bias: Vec<f32>,
    pub ffn_out: Tensor,
    pub ffn_out_bias: Vec<f32>,
    pub ffn_ln_gamma: Vec<f32>,
    pub ffn_ln_beta: Vec<f32>,
}

/// Full model parameters, immutable after load and shareable across
/// worker threads.
#[derive(Debug, Clone)]
pub struct Weights {
    pub config: ModelConfig,
    pub word_embeddings: Tensor,
    pub position_embeddings: Tensor,
    pub type_embeddings: Tensor,
    pub emb_ln_gamma: Vec<f32>,
    pub emb_ln_beta: Vec<f32>,
    pub layers: Vec<LayerWeights>,
    /// Tanh pooler dense layer, present iff `config.use_pooler`.
    pub pooler: Option<(Tensor, Vec<f32>)>,
    /// Two-way relevance classifier; row 1 is the "relevant" logit.
    pub classifier_w: Tensor,
    pub classifier_b: Vec<f32>,
    /// Archive tensors that matched nothing in the mapping table.
    /// Reported, not fatal: stock checkpoints carry extra heads.
    pub extra_tensor_names: Vec<String>,
}

/// The canonical archive names for every required tensor, in mapping
/// order. Names are also accepted without the leading `bert.` prefix.
pub fn expected_tensor_names(config: &ModelConfig) -> Vec<String> {
    let mut names = vec![
        "bert.embeddings.word_embeddings.weight".to_string(),
        "bert.embeddings.position_embeddings.weight".to_string(),
        "bert.embeddings.token_type_embeddings.weight".to_string(),
        "bert.embeddings.LayerNorm.weight".to_string(),
        "bert.embeddings.LayerNorm.bias".to_string(),
    ];
    for i in 0..config.num_layers {
        let p = format!("bert.encoder.layer.{i}.");
        for leaf in [
            "attention.self.query.weight",
            "attention.self.query.bias",
            "attention.self.key.weight",
            "attention.self.key.bias",
            "attention.self.value.weight",
            "attention.self.value.bias",
            "attention.output.dense.weight",
            "attention.output.dense.bias",
            "attention.output.LayerNorm.weight",
            "attention.output.LayerNorm.bias",
            "intermediate.dense.weight",
            "intermediate.dense.bias",
            "output.dense.weight",
            "output.dense.bias",
            "output.LayerNorm.weight",
            "output.LayerNorm.bias",
        ] {
            names.push(format!("{p}{leaf}"));
        }
    }
    if config.use_pooler {
        names.push("bert.pooler.dense.weight".to_string());
        names.push("bert.pooler.dense.bias".to_string());
    }
    names.push("classifier.weight".to_string());
    names.push("classifier.bias".to_string());
    names
}

struct Resolver {
    tensors: BTreeMap<String, Tensor>,
}

impl Resolver {
    /// Take a tensor by canonical name, also accepting the name without
    /// its `bert.` prefix, and check its shape.
    fn take(&mut self, canonical: &str, shape: &[usize]) -> Result<Tensor> {
        let stripped = canonical.strip_prefix("bert.").unwrap_or(canonical);
        let found = if self.tensors.contains_key(canonical) {
            self.tensors.remove(canonical)
        } else {
            self.tensors.remove(stripped)
        };
        let tensor = found.ok_or_else(|| {
            Error::Load(format!(
                "missing tensor {canonical} (also tried {stripped})"
            ))
        })?;
        if tensor.shape() != shape {
            return Err(Error::Load(format!(
                "tensor {canonical} has shape {:?}, expected {shape:?}",
                tensor.shape()
            )));
        }
        Ok(tensor)
    }

    fn take_vec(&mut self, canonical: &str, len: usize) -> Result<Vec<f32>> {
        Ok(self.take(canonical, &[len])?.data().to_vec())
    }
}

/// Load and validate model weights from an archive.
///
/// Every required tensor (see [`expected_tensor_names`]) must be present
/// with the config-derived shape; missing tensors, shape mismatches and
/// corrupt headers are reported by name. Leftover archive tensors are
/// collected into `extra_tensor_names`.
pub fn load_weights(path: impl AsRef<Path>, config: &ModelConfig) -> Result<Weights> {
    config.validate()?;
    let d = config.hidden_size;
    let ff = config.intermediate_size;
    let mut r = Resolver {
        tensors: read_archive(path)?,
    };

    let word_embeddings = r.take("bert.embeddings.word_embeddings.weight", &[config.vocab_size, d])?;
    let position_embeddings = r.take(
        "bert.embeddings.position_embeddings.weight",
        &[config.max_position_embeddings, d],
    )?;
    let type_embeddings = r.take(
        "bert.embeddings.token_type_embeddings.weight",
        &[config.type_vocab_size, d],
    )?;
    let emb_ln_gamma = r.take_vec("bert.embeddings.LayerNorm.weight", d)?;
    let emb_ln_beta = r.take_vec("bert.embeddings.LayerNorm.bias", d)?;

    let mut layers = Vec::with_capacity(config.num_layers);
    for i in 0..config.num_layers {
        let p = format!("bert.encoder.layer.{i}.");
        layers.push(LayerWeights {
            w_query: r.take(&format!("{p}attention.self.query.weight"), &[d, d])?,
            b_query: r.take_vec(&format!("{p}attention.self.query.bias"), d)?,
            w_key: r.take(&format!("{p}attention.self.key.weight"), &[d, d])?,
            b_key: r.take_vec(&format!("{p}attention.self.key.bias"), d)?,
            w_value: r.take(&format!("{p}attention.self.value.weight"), &[d, d])?,
            b_value: r.take_vec(&format!("{p}attention.self.value.bias"), d)?,
            w_output: r.take(&format!("{p}attention.output.dense.weight"), &[d, d])?,
            b_output: r.take_vec(&format!("{p}attention.output.dense.bias"), d)?,
            attn_ln_gamma: r.take_vec(&format!("{p}attention.output.LayerNorm.weight"), d)?,
            attn_ln_beta: r.take_vec(&format!("{p}attention.output.LayerNorm.bias"), d)?,
            ffn_in: r.take(&format!("{p}intermediate.dense.weight"), &[ff, d])?,
            ffn_in_bias: r.take_vec(&format!("{p}intermediate.dense.bias"), ff)?,
            ffn_out: r.take(&format!("{p}output.dense.weight"), &[d, ff])?,
            ffn_out_bias: r.take_vec(&format!("{p}output.dense.bias"), d)?,
            ffn_ln_gamma: r.take_vec(&format!("{p}output.LayerNorm.weight"), d)?,
            ffn_ln_beta: r.take_vec(&format!("{p}output.LayerNorm.bias"), d)?,
        });
    }

    let pooler = if config.use_pooler {
        let w = r.take("bert.pooler.dense.weight", &[d, d])?;
        let b = r.take_vec("bert.pooler.dense.bias", d)?;
        Some((w, b))
    } else {
        None
    };

    let classifier_w = r.take("classifier.weight", &[2, d])?;
    let classifier_b = r.take_vec("classifier.bias", 2)?;

    let extra_tensor_names: Vec<String> = r.tensors.into_keys().collect();

    Ok(Weights {
        config: config.clone(),
        word_embeddings,
        position_embeddings,
        type_embeddings,
        emb_ln_gamma,
        emb_ln_beta,
        layers,
        pooler,
        classifier_w,
        classifier_b,
        extra_tensor_names,
    })
}
