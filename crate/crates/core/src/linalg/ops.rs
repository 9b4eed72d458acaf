//! Elementary kernels: matrix product, masked softmax, layer norm, GELU.
//!
//! Summation orders are fixed so that repeated runs are bit-identical:
//! `matmul` accumulates each output element left-to-right over the inner
//! dimension; `dot` uses a fixed 8-lane blocked reduction (lane partials
//! combined in index order, then the remainder appended left-to-right).

// Index loops here mirror the kernel math and sometimes touch several
// arrays per index.
#![allow(clippy::needless_range_loop)]

use crate::error::{Error, Result};

use super::tensor::Tensor;

/// Matrix product of `a` (m x k) and `b` (k x n).
///
/// Each output element is accumulated left-to-right over the inner
/// dimension, so results are reproducible across runs and thread counts.
pub fn matmul(a: &Tensor, b: &Tensor) -> Result<Tensor> {
    if a.shape().len() != 2 || b.shape().len() != 2 || a.cols() != b.rows() {
        return Err(Error::shape("matmul", a.shape(), b.shape()));
    }
    let (m, k, n) = (a.rows(), a.cols(), b.cols());
    let mut out = Tensor::zeros(vec![m, n]);
    for i in 0..m {
        let a_row = a.row(i);
        let out_row = out.row_mut(i);
        for (p, &a_ip) in a_row.iter().enumerate().take(k) {
            let b_row = b.row(p);
            for j in 0..n {
                out_row[j] += a_ip * b_row[j];
            }
        }
    }
    Ok(out)
}

/// Dot product with a fixed 8-lane blocked reduction.
pub fn dot(x: &[f32], y: &[f32]) -> f32 {
    debug_assert_eq!(x.len(), y.len());
    let mut lanes = [0.0f32; 8];
    let x_chunks = x.chunks_exact(8);
    let y_chunks = y.chunks_exact(8);
    let x_rest = x_chunks.remainder();
    let y_rest = y_chunks.remainder();
    for (xs, ys) in x_chunks.zip(y_chunks) {
        for l in 0..8 {
            lanes[l] += xs[l] * ys[l];
        }
    }
    let mut acc = lanes.iter().sum::<f32>();
    for (a, b) in x_rest.iter().zip(y_rest) {
        acc += a * b;
    }
    acc
}

/// Affine map `y = x * w^T + bias` where `w` is stored `[out, in]`
/// (one output unit per row, the layout used by the weight archives).
pub fn linear(x: &Tensor, w: &Tensor, bias: &[f32]) -> Result<Tensor> {
    if x.cols() != w.cols() || w.rows() != bias.len() {
        return Err(Error::shape("linear", x.shape(), w.shape()));
    }
    let (m, out_dim) = (x.rows(), w.rows());
    let mut out = Tensor::zeros(vec![m, out_dim]);
    for i in 0..m {
        let x_row = x.row(i);
        let out_row = out.row_mut(i);
        for o in 0..out_dim {
            out_row[o] = dot(x_row, w.row(o)) + bias[o];
        }
    }
    Ok(out)
}

/// Softmax over `logits` with suppressed positions.
///
/// `mask[i] == true` suppresses position `i`: it gets exactly 0 and the
/// remaining positions are exp-normalized (max-subtracted over the
/// survivors for stability). When every position is masked the result is
/// the all-zero vector rather than an error: a fully suppressed row
/// contributes no context, and zero encodes that directly.
pub fn masked_softmax(logits: &[f32], mask: &[bool]) -> Vec<f32> {
    debug_assert_eq!(logits.len(), mask.len());
    let mut max = f32::NEG_INFINITY;
    for (i, &v) in logits.iter().enumerate() {
        if !mask[i] && v > max {
            max = v;
        }
    }
    if max == f32::NEG_INFINITY {
        return vec![0.0; logits.len()];
    }
    let mut out = vec![0.0f32; logits.len()];
    let mut sum = 0.0f32;
    for (i, &v) in logits.iter().enumerate() {
        if !mask[i] {
            let e = (v - max).exp();
            out[i] = e;
            sum += e;
        }
    }
    for v in &mut out {
        *v /= sum;
    }
    out
}

/// Plain softmax (no suppressed positions).
pub fn softmax(logits: &[f32]) -> Vec<f32> {
    masked_softmax(logits, &vec![false; logits.len()])
}

/// Layer normalization with the population (1/n) variance convention:
/// `(x - mean) / sqrt(var + eps) * gamma + beta`.
pub fn layer_norm(x: &[f32], gamma: &[f32], beta: &[f32], eps: f32) -> Vec<f32> {
    debug_assert!(eps > 0.0);
    let n = x.len() as f32;
    let mean = x.iter().sum::<f32>() / n;
    let var = x.iter().map(|&v| (v - mean) * (v - mean)).sum::<f32>() / n;
    let inv = 1.0 / (var + eps).sqrt();
    x.iter()
        .zip(gamma.iter().zip(beta.iter()))
        .map(|(&v, (&g, &b))| (v - mean) * inv * g + b)
        .collect()
}

/// Exact Gaussian-error GELU: `x * Phi(x)` with `Phi(x) = (1 + erf(x/sqrt(2)))/2`.
///
/// `erf` is libm's double-precision implementation (musl-derived,
/// accurate to < 1 ulp), so the activation error is far below 1e-6.
pub fn gelu(x: f32) -> f32 {
    let xf = x as f64;
    (xf * 0.5 * (1.0 + libm::erf(xf / std::f64::consts::SQRT_2))) as f32
}
