//! Deterministic tiny-model fixtures shared by tests, benchmarks and the
//! acceptance suite. Everything here is seeded: the same seed always
//! produces the same weights and inputs.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::encoder::{LayerWeights, ModelConfig, Weights};
use crate::linalg::Tensor;
use crate::segment::{PartSpans, SegmentedInput, Vocab};

/// Two layers, two heads, hidden 16: small enough that hundreds of
/// forwards run in well under a second.
pub fn tiny_config() -> ModelConfig {
    ModelConfig {
        num_layers: 2,
        num_heads: 2,
        hidden_size: 16,
        intermediate_size: 32,
        vocab_size: 32,
        max_position_embeddings: 64,
        type_vocab_size: 2,
        layer_norm_eps: 1e-12,
        use_pooler: true,
    }
}

/// The 32-token vocabulary matching [`tiny_config`].
pub fn tiny_vocab() -> Vocab {
    let tokens = [
        "[PAD]", "[UNK]", "[CLS]", "[SEP]", "the", "quick", "brown", "fox", "jumps", "over",
        "lazy", "dog", "what", "does", "say", "cat", "sat", "mat", "run", "hello", "world",
        "test", "deep", "rank", "doc", "query", "a", "b", "##ing", "##s", "##ed", "##ning",
    ];
    Vocab::new(tokens.iter().map(|s| s.to_string()).collect()).expect("fixture vocab")
}

fn tensor(rng: &mut ChaCha8Rng, shape: Vec<usize>, lo: f32, hi: f32) -> Tensor {
    let n = shape.iter().product();
    Tensor::new(shape, (0..n).map(|_| rng.gen_range(lo..hi)).collect()).unwrap()
}

fn vec_range(rng: &mut ChaCha8Rng, n: usize, lo: f32, hi: f32) -> Vec<f32> {
    (0..n).map(|_| rng.gen_range(lo..hi)).collect()
}

/// Seeded random weights for an arbitrary config. Kernels are uniform in
/// (-0.1, 0.1), biases in (-0.01, 0.01), layer-norm gains around 1.
pub fn random_weights(config: &ModelConfig, seed: u64) -> Weights {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = config.hidden_size;
    let ff = config.intermediate_size;
    let kernel = |rng: &mut ChaCha8Rng, shape: Vec<usize>| tensor(rng, shape, -0.1, 0.1);
    let bias = |rng: &mut ChaCha8Rng, n: usize| vec_range(rng, n, -0.01, 0.01);
    let gamma = |rng: &mut ChaCha8Rng, n: usize| vec_range(rng, n, 0.9, 1.1);

    let word_embeddings = kernel(&mut rng, vec![config.vocab_size, d]);
    let position_embeddings = kernel(&mut rng, vec![config.max_position_embeddings, d]);
    let type_embeddings = kernel(&mut rng, vec![config.type_vocab_size, d]);
    let emb_ln_gamma = gamma(&mut rng, d);
    let emb_ln_beta = bias(&mut rng, d);

    let layers = (0..config.num_layers)
        .map(|_| LayerWeights {
            w_query: kernel(&mut rng, vec![d, d]),
            b_query: bias(&mut rng, d),
            w_key: kernel(&mut rng, vec![d, d]),
            b_key: bias(&mut rng, d),
            w_value: kernel(&mut rng, vec![d, d]),
            b_value: bias(&mut rng, d),
            w_output: kernel(&mut rng, vec![d, d]),
            b_output: bias(&mut rng, d),
            attn_ln_gamma: gamma(&mut rng, d),
            attn_ln_beta: bias(&mut rng, d),
            ffn_in: kernel(&mut rng, vec![ff, d]),
            ffn_in_bias: bias(&mut rng, ff),
            ffn_out: kernel(&mut rng, vec![d, ff]),
            ffn_out_bias: bias(&mut rng, d),
            ffn_ln_gamma: gamma(&mut rng, d),
            ffn_ln_beta: bias(&mut rng, d),
        })
        .collect();

    let pooler = config.use_pooler.then(|| {
        let w = kernel(&mut rng, vec![d, d]);
        let b = bias(&mut rng, d);
        (w, b)
    });
    let classifier_w = kernel(&mut rng, vec![2, d]);
    let classifier_b = bias(&mut rng, 2);

    Weights {
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
        extra_tensor_names: Vec::new(),
    }
}

/// Assemble a [`SegmentedInput`] directly from query/document token ids
/// (already excluding the special tokens).
pub fn input_from_ids(q_ids: &[u32], d_ids: &[u32], cls_id: u32, sep_id: u32) -> SegmentedInput {
    let q = q_ids.len();
    let d = d_ids.len();
    let mut token_ids = Vec::with_capacity(q + d + 3);
    token_ids.push(cls_id);
    token_ids.extend_from_slice(q_ids);
    token_ids.push(sep_id);
    token_ids.extend_from_slice(d_ids);
    token_ids.push(sep_id);
    let mut type_ids = vec![0u8; q + 2];
    type_ids.extend(vec![1u8; d + 1]);
    SegmentedInput {
        token_ids,
        type_ids,
        parts: PartSpans {
            cls: 0..1,
            query: 1..1 + q,
            sep1: 1 + q..2 + q,
            doc: 2 + q..2 + q + d,
            sep2: 2 + q + d..3 + q + d,
        },
    }
}

/// A random segmented input for the given config: query of 1..=5 tokens,
/// document of 1..=8, ids drawn from the non-special vocabulary range.
pub fn random_input(config: &ModelConfig, rng: &mut ChaCha8Rng) -> SegmentedInput {
    let q_len = rng.gen_range(1..=5usize);
    let d_len = rng.gen_range(1..=8usize);
    let lo = 4u32;
    let hi = config.vocab_size as u32;
    let q: Vec<u32> = (0..q_len).map(|_| rng.gen_range(lo..hi)).collect();
    let d: Vec<u32> = (0..d_len).map(|_| rng.gen_range(lo..hi)).collect();
    input_from_ids(&q, &d, 2, 3)
}
