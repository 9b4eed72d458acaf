//! Cross-encoder forward pass with attention tracing and ablation hooks.
//!
//! The architecture is a standard post-layer-norm encoder stack:
//! embeddings (token + position + type, then layer norm), then per layer
//! multi-head scaled dot-product attention with residual + layer norm
//! followed by a GELU feed-forward block with residual + layer norm. The
//! relevance score is `logit(relevant) - logit(non-relevant)` from a
//! two-way classifier over the final CLS state (optionally through a
//! tanh pooler).
//!
//! Ablations act pre-softmax: masked cells are excluded from the
//! attention softmax so the surviving positions renormalize; a fully
//! masked row yields an all-zero attention row and a zero context
//! contribution for that token.

mod archive;
mod config;
mod trace;
mod weights;

pub use archive::{read_archive, read_archive_bytes, write_archive};
pub use config::ModelConfig;
pub use trace::AttentionTrace;
pub use weights::{expected_tensor_names, load_weights, LayerWeights, Weights};

use crate::ablation::{compile_mask, AblationSpec};
use crate::error::{Error, Result};
use crate::linalg::{dot, gelu, layer_norm, linear, masked_softmax, Tensor};
use crate::segment::SegmentedInput;

/// Score a segmented pair and capture the full attention trace.
pub fn forward(
    input: &SegmentedInput,
    weights: &Weights,
    ablation: Option<&AblationSpec>,
) -> Result<(f32, AttentionTrace)> {
    let (score, trace) = forward_inner(input, weights, ablation, true)?;
    Ok((score, trace.expect("trace requested")))
}

/// Score a segmented pair without retaining the trace (lower memory).
pub fn forward_score(
    input: &SegmentedInput,
    weights: &Weights,
    ablation: Option<&AblationSpec>,
) -> Result<f32> {
    Ok(forward_inner(input, weights, ablation, false)?.0)
}

/// Element-wise forward over a batch, order preserved. Per-pair errors
/// are annotated with the pair index.
pub fn score_batch(
    pairs: &[SegmentedInput],
    weights: &Weights,
    ablation: Option<&AblationSpec>,
) -> Result<Vec<f32>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            forward_score(p, weights, ablation)
                .map_err(|e| Error::Input(format!("pair {i}: {e}")))
        })
        .collect()
}

/// Batched forward that also keeps every trace.
pub fn trace_batch(
    pairs: &[SegmentedInput],
    weights: &Weights,
    ablation: Option<&AblationSpec>,
) -> Result<Vec<(f32, AttentionTrace)>> {
    pairs
        .iter()
        .enumerate()
        .map(|(i, p)| {
            forward(p, weights, ablation).map_err(|e| Error::Input(format!("pair {i}: {e}")))
        })
        .collect()
}

fn forward_inner(
    input: &SegmentedInput,
    weights: &Weights,
    ablation: Option<&AblationSpec>,
    want_trace: bool,
) -> Result<(f32, Option<AttentionTrace>)> {
    let cfg = &weights.config;
    let len = input.len();
    let d = cfg.hidden_size;
    let heads = cfg.num_heads;
    let dh = cfg.head_dim();
    let eps = cfg.layer_norm_eps;

    if len == 0 {
        return Err(Error::Input("empty input".into()));
    }
    if len > cfg.max_position_embeddings {
        return Err(Error::Input(format!(
            "input length {len} exceeds max position {}",
            cfg.max_position_embeddings
        )));
    }

    // Embeddings: token + position + type, then layer norm.
    let mut x = Tensor::zeros(vec![len, d]);
    for i in 0..len {
        let tok = input.token_ids[i] as usize;
        let typ = input.type_ids[i] as usize;
        if tok >= cfg.vocab_size {
            return Err(Error::Input(format!(
                "token id {tok} at position {i} exceeds vocab size {}",
                cfg.vocab_size
            )));
        }
        if typ >= cfg.type_vocab_size {
            return Err(Error::Input(format!(
                "type id {typ} at position {i} exceeds type vocab size {}",
                cfg.type_vocab_size
            )));
        }
        let w = weights.word_embeddings.row(tok);
        let p = weights.position_embeddings.row(i);
        let t = weights.type_embeddings.row(typ);
        let row = x.row_mut(i);
        for k in 0..d {
            row[k] = w[k] + p[k] + t[k];
        }
    }
    layer_norm_rows(&mut x, &weights.emb_ln_gamma, &weights.emb_ln_beta, eps);

    let scale = 1.0 / (dh as f32).sqrt();
    let mut trace_attn: Vec<Tensor> = Vec::new();
    let mut trace_inputs: Vec<Tensor> = Vec::new();
    let no_mask = vec![false; len];

    for (layer_idx, layer) in weights.layers.iter().enumerate() {
        if want_trace {
            trace_inputs.push(x.clone());
        }

        let q = linear(&x, &layer.w_query, &layer.b_query)?;
        let k = linear(&x, &layer.w_key, &layer.b_key)?;
        let v = linear(&x, &layer.w_value, &layer.b_value)?;

        let ablation_active = ablation.is_some_and(|s| s.active_at(layer_idx));
        let mut ctx = Tensor::zeros(vec![len, d]);
        let mut layer_attn = if want_trace {
            Some(Tensor::zeros(vec![heads, len, len]))
        } else {
            None
        };

        for h in 0..heads {
            let off = h * dh;
            let mask = ablation
                .filter(|_| ablation_active)
                .map(|s| compile_mask(s, &input.parts, layer_idx, h));
            let mut logits = vec![0.0f32; len];
            for i in 0..len {
                let q_row = &q.row(i)[off..off + dh];
                for (j, logit) in logits.iter_mut().enumerate() {
                    *logit = dot(q_row, &k.row(j)[off..off + dh]) * scale;
                }
                let mask_row = mask.as_ref().map_or(no_mask.as_slice(), |m| m.row(i));
                let probs = masked_softmax(&logits, mask_row);
                let ctx_row = &mut ctx.row_mut(i)[off..off + dh];
                for (j, &p) in probs.iter().enumerate() {
                    if p != 0.0 {
                        let v_row = &v.row(j)[off..off + dh];
                        for (c, &vv) in ctx_row.iter_mut().zip(v_row.iter()) {
                            *c += p * vv;
                        }
                    }
                }
                if let Some(t) = layer_attn.as_mut() {
                    let base = h * len * len + i * len;
                    t.data_mut()[base..base + len].copy_from_slice(&probs);
                }
            }
        }

        let attn_out = linear(&ctx, &layer.w_output, &layer.b_output)?;
        add_assign(&mut x, &attn_out);
        layer_norm_rows(&mut x, &layer.attn_ln_gamma, &layer.attn_ln_beta, eps);

        let mut hidden = linear(&x, &layer.ffn_in, &layer.ffn_in_bias)?;
        for vv in hidden.data_mut() {
            *vv = gelu(*vv);
        }
        let ffn_out = linear(&hidden, &layer.ffn_out, &layer.ffn_out_bias)?;
        add_assign(&mut x, &ffn_out);
        layer_norm_rows(&mut x, &layer.ffn_ln_gamma, &layer.ffn_ln_beta, eps);

        if let Some(t) = layer_attn {
            trace_attn.push(t);
        }
    }

    // Relevance head over the final CLS state.
    let cls = x.row(0);
    let pooled: Vec<f32> = match &weights.pooler {
        Some((w, b)) => (0..d).map(|o| (dot(cls, w.row(o)) + b[o]).tanh()).collect(),
        None => cls.to_vec(),
    };
    let logit_neg = dot(&pooled, weights.classifier_w.row(0)) + weights.classifier_b[0];
    let logit_pos = dot(&pooled, weights.classifier_w.row(1)) + weights.classifier_b[1];
    let score = logit_pos - logit_neg;

    let trace = if want_trace {
        Some(AttentionTrace {
            len,
            num_heads: heads,
            attention: trace_attn,
            layer_inputs: trace_inputs,
        })
    } else {
        None
    };
    Ok((score, trace))
}

/// Unscaled, bias-free attention logit of head (layer, head) for "token
/// with embedding `x_i` attends to token with embedding `x_j`", computed
/// through the projection path: `(Q_h x_i) . (K_h x_j)`. The forward pass
/// additionally applies the query/key biases and the `1/sqrt(head_dim)`
/// scale; this helper exposes the raw bilinear form the head implements.
pub fn attention_logit_unscaled(
    weights: &Weights,
    layer: usize,
    head: usize,
    x_i: &[f32],
    x_j: &[f32],
) -> Result<f32> {
    let cfg = &weights.config;
    if layer >= cfg.num_layers || head >= cfg.num_heads {
        return Err(Error::Input(format!(
            "layer {layer} / head {head} out of range"
        )));
    }
    if x_i.len() != cfg.hidden_size || x_j.len() != cfg.hidden_size {
        return Err(Error::Input(format!(
            "embedding length {} / {} does not match hidden size {}",
            x_i.len(),
            x_j.len(),
            cfg.hidden_size
        )));
    }
    let lw = &weights.layers[layer];
    let dh = cfg.head_dim();
    let off = head * dh;
    let mut acc = 0.0f32;
    for r in 0..dh {
        let q = dot(x_i, lw.w_query.row(off + r));
        let k = dot(x_j, lw.w_key.row(off + r));
        acc += q * k;
    }
    Ok(acc)
}

fn layer_norm_rows(x: &mut Tensor, gamma: &[f32], beta: &[f32], eps: f32) {
    for i in 0..x.rows() {
        let out = layer_norm(x.row(i), gamma, beta, eps);
        x.row_mut(i).copy_from_slice(&out);
    }
}

fn add_assign(x: &mut Tensor, y: &Tensor) {
    for (a, b) in x.data_mut().iter_mut().zip(y.data().iter()) {
        *a += b;
    }
}
