//! Attention trace captured during a forward pass.

use crate::linalg::Tensor;

/// Per-layer, per-head post-softmax attention matrices plus the hidden
/// states entering each layer's attention.
///
/// `attention[layer]` has shape `[num_heads, len, len]`;
/// `attention[layer][h][i][j]` is the probability that token `i` attends
/// to token `j` (after any ablation masking, so ablated cells are exactly
/// zero and fully ablated rows are all-zero).
/// `layer_inputs[layer]` has shape `[len, hidden]`.
#[derive(Debug, Clone)]
pub struct AttentionTrace {
    pub len: usize,
    pub num_heads: usize,
    pub attention: Vec<Tensor>,
    pub layer_inputs: Vec<Tensor>,
}

impl AttentionTrace {
    pub fn num_layers(&self) -> usize {
        self.attention.len()
    }

    /// The `len x len` attention matrix of one head, as a flat row-major
    /// slice.
    pub fn head_matrix(&self, layer: usize, head: usize) -> &[f32] {
        let n = self.len * self.len;
        &self.attention[layer].data()[head * n..(head + 1) * n]
    }

    /// Probability that token `i` attends to token `j` at (layer, head).
    pub fn at(&self, layer: usize, head: usize, i: usize, j: usize) -> f32 {
        self.head_matrix(layer, head)[i * self.len + j]
    }
}
