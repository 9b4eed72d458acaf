//! Checks for the measurement instruments: direction masses, class
//! contrasts, histograms, bilinear forms, alignment and
//! cross-contextualization scores, and the diagnostics join.

#![allow(clippy::needless_range_loop)]

mod common;

use matchprobe::ablation::{parse_spec, Direction, SourcePart};
use matchprobe::analysis::{
    attention_histogram, class_contrast, cross_ctx_score, diagnostics_table, direction_mass,
    head_bilinear, svd_alignment, EmbeddingAccumulator, MeanPartEmbeddings, StatsAccumulator,
};
use matchprobe::encoder::{attention_logit_unscaled, forward, AttentionTrace};
use matchprobe::fixtures;
use matchprobe::linalg::Tensor;
use matchprobe::segment::{Part, PartSpans};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn dir(target: Part, source: Part) -> Direction {
    Direction {
        target,
        source: SourcePart::Part(source),
    }
}

fn dir_all(target: Part) -> Direction {
    Direction {
        target,
        source: SourcePart::All,
    }
}

fn spans_11() -> PartSpans {
    PartSpans {
        cls: 0..1,
        query: 1..4,
        sep1: 4..5,
        doc: 5..10,
        sep2: 10..11,
    }
}

/// A synthetic one-layer, one-head trace with uniform attention.
fn uniform_trace(len: usize, d: usize) -> AttentionTrace {
    let v = 1.0 / len as f32;
    AttentionTrace {
        len,
        num_heads: 1,
        attention: vec![Tensor::new(vec![1, len, len], vec![v; len * len]).unwrap()],
        layer_inputs: vec![Tensor::zeros(vec![len, d])],
    }
}

#[test]
fn direction_mass_from_all_is_one_on_unablated_traces() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 21);
    let mut rng = ChaCha8Rng::seed_from_u64(210);
    let input = fixtures::random_input(&config, &mut rng);
    let (_, trace) = forward(&input, &weights, None).unwrap();
    for target in Part::ALL {
        let masses = direction_mass(&trace, &input.parts, dir_all(target)).unwrap();
        for m in masses {
            assert!((m - 1.0).abs() < 1e-5, "mass {m}");
        }
    }
}

#[test]
fn direction_mass_zero_when_fully_ablated() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 22);
    let spec = parse_spec("D<-Q", &config).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(220);
    let input = fixtures::random_input(&config, &mut rng);
    let (_, trace) = forward(&input, &weights, Some(&spec)).unwrap();
    let masses = direction_mass(&trace, &input.parts, dir(Part::Doc, Part::Query)).unwrap();
    for m in masses {
        assert_eq!(m, 0.0);
    }
}

#[test]
fn direction_mass_uniform_attention() {
    let trace = uniform_trace(11, 4);
    let parts = spans_11();
    let masses = direction_mass(&trace, &parts, dir(Part::Query, Part::Doc)).unwrap();
    assert_eq!(masses.len(), 1);
    assert!((masses[0] - 5.0 / 11.0).abs() < 1e-6);
}

#[test]
fn direction_masses_partition_each_target_row() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 23);
    let mut rng = ChaCha8Rng::seed_from_u64(230);
    for _ in 0..5 {
        let input = fixtures::random_input(&config, &mut rng);
        let (_, trace) = forward(&input, &weights, None).unwrap();
        for target in Part::ALL {
            let mut totals = vec![0.0f64; config.num_layers * config.num_heads];
            for source in Part::ALL {
                let masses = direction_mass(&trace, &input.parts, dir(target, source)).unwrap();
                for (t, m) in totals.iter_mut().zip(masses) {
                    *t += m;
                }
            }
            for t in totals {
                assert!((t - 1.0).abs() < 1e-5, "partition sum {t}");
            }
        }
    }
}

#[test]
fn class_contrast_equal_classes_is_zero() {
    let mut acc = StatsAccumulator::new();
    let trace = uniform_trace(11, 4);
    let parts = spans_11();
    let directions = [dir(Part::Query, Part::Doc)];
    acc.add_trace(&trace, &parts, 2, &directions);
    acc.add_trace(&trace, &parts, -1, &directions);
    let stats = acc.stats();
    let rows = class_contrast(&stats, &[2, -1], &[2, -1]).unwrap();
    for r in rows {
        assert_eq!(r.diff, 0.0);
    }
}

#[test]
fn class_contrast_simple_arithmetic() {
    // Two synthetic traces with masses 0.8 and 0.3 along Q<-D.
    let parts = PartSpans {
        cls: 0..1,
        query: 1..2,
        sep1: 2..3,
        doc: 3..4,
        sep2: 4..5,
    };
    let make = |mass: f32| {
        // Row 1 (the query token) puts `mass` on the doc token (col 3).
        let mut data = vec![0.0f32; 25];
        data[5 + 3] = mass; // row 1 (query token), col 3 (doc token)
        data[5] = 1.0 - mass; // remainder parked on CLS
        AttentionTrace {
            len: 5,
            num_heads: 1,
            attention: vec![Tensor::new(vec![1, 5, 5], data).unwrap()],
            layer_inputs: vec![Tensor::zeros(vec![5, 4])],
        }
    };
    let mut acc = StatsAccumulator::new();
    let directions = [dir(Part::Query, Part::Doc)];
    acc.add_trace(&make(0.8), &parts, 3, &directions);
    acc.add_trace(&make(0.3), &parts, -1, &directions);
    let rows = class_contrast(&acc.stats(), &[2, 3], &[-1]).unwrap();
    assert_eq!(rows.len(), 1);
    assert!((rows[0].diff - 0.5).abs() < 1e-6);
}

#[test]
fn class_contrast_names_empty_class() {
    let mut acc = StatsAccumulator::new();
    let trace = uniform_trace(11, 4);
    acc.add_trace(&trace, &spans_11(), 2, &[dir(Part::Query, Part::Doc)]);
    let err = class_contrast(&acc.stats(), &[2], &[-1]).unwrap_err();
    assert!(err.to_string().contains("-1"), "{err}");
}

#[test]
fn class_contrast_matches_flat_recomputation() {
    // Seeded tiny-model corpus: accumulate through the streaming path
    // and compare against a from-scratch recomputation over raw traces.
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 24);
    let mut rng = ChaCha8Rng::seed_from_u64(240);
    let directions = [dir(Part::Query, Part::Doc), dir(Part::Doc, Part::Query)];

    let mut acc = StatsAccumulator::new();
    let mut raw: Vec<(i8, Vec<f64>, Vec<f64>)> = Vec::new();
    for i in 0..12 {
        let grade = if i % 2 == 0 { 2 } else { -1 };
        let input = fixtures::random_input(&config, &mut rng);
        let (_, trace) = forward(&input, &weights, None).unwrap();
        acc.add_trace(&trace, &input.parts, grade, &directions);
        let qd = direction_mass(&trace, &input.parts, directions[0]).unwrap();
        let dq = direction_mass(&trace, &input.parts, directions[1]).unwrap();
        raw.push((grade, qd, dq));
    }
    let rows = class_contrast(&acc.stats(), &[2, 3], &[-1]).unwrap();
    for row in rows {
        let select = |grade_filter: &dyn Fn(i8) -> bool| -> f64 {
            let idx = row.layer * config.num_heads + row.head;
            let vals: Vec<f64> = raw
                .iter()
                .filter(|(g, _, _)| grade_filter(*g))
                .map(|(_, qd, dq)| {
                    if row.direction == directions[0] {
                        qd[idx]
                    } else {
                        dq[idx]
                    }
                })
                .collect();
            vals.iter().sum::<f64>() / vals.len() as f64
        };
        let want = select(&|g| g >= 2) - select(&|g| g == -1);
        assert!((row.diff - want).abs() < 1e-6, "{} vs {want}", row.diff);
    }
}

#[test]
fn histogram_single_pair() {
    let parts = PartSpans {
        cls: 0..1,
        query: 1..2,
        sep1: 2..3,
        doc: 3..4,
        sep2: 4..5,
    };
    let mut data = vec![0.0f32; 25];
    data[5 + 3] = 0.5; // query token row: half on the doc token
    data[5 + 4] = 0.5; // and half on SEP2
    let trace = AttentionTrace {
        len: 5,
        num_heads: 1,
        attention: vec![Tensor::new(vec![1, 5, 5], data).unwrap()],
        layer_inputs: vec![Tensor::zeros(vec![5, 4])],
    };
    let hist = attention_histogram(
        &[(trace, parts, 2)],
        dir(Part::Query, Part::Doc),
        0,
        0,
        10,
    )
    .unwrap();
    let bins = &hist.counts[&2];
    assert_eq!(bins[5], 1);
    assert_eq!(bins.iter().sum::<u64>(), 1);
}

#[test]
fn histogram_identical_pairs_single_bin() {
    let trace = uniform_trace(11, 4);
    let parts = spans_11();
    let triples: Vec<_> = (0..7)
        .map(|_| (trace.clone(), parts.clone(), 1i8))
        .collect();
    let hist = attention_histogram(&triples, dir(Part::Query, Part::Doc), 0, 0, 8).unwrap();
    let bins = &hist.counts[&1];
    assert_eq!(bins.iter().filter(|&&c| c > 0).count(), 1);
    assert_eq!(bins.iter().sum::<u64>(), 7);
}

#[test]
fn histogram_matches_sort_based_oracle() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 25);
    let mut rng = ChaCha8Rng::seed_from_u64(250);
    let d = dir(Part::Doc, Part::Query);
    let mut triples = Vec::new();
    let mut values: Vec<f64> = Vec::new();
    for _ in 0..20 {
        let input = fixtures::random_input(&config, &mut rng);
        let (_, trace) = forward(&input, &weights, None).unwrap();
        values.push(direction_mass(&trace, &input.parts, d).unwrap()[3]);
        triples.push((trace, input.parts.clone(), 0i8));
    }
    let bins = 10;
    let hist = attention_histogram(&triples, d, 1, 1, bins).unwrap();
    // Sort-based oracle: count how many sorted values land per bin.
    values.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut oracle = vec![0u64; bins];
    for v in &values {
        let idx = ((v * bins as f64) as usize).min(bins - 1);
        oracle[idx] += 1;
    }
    assert_eq!(hist.counts[&0], oracle);
    assert_eq!(hist.counts[&0].iter().sum::<u64>(), 20);
}

#[test]
fn bilinear_form_matches_projection_logits() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 26);
    let mut rng = ChaCha8Rng::seed_from_u64(260);
    let d = config.hidden_size;
    for _ in 0..50 {
        let layer = rng.gen_range(0..config.num_layers);
        let head = rng.gen_range(0..config.num_heads);
        let x_i: Vec<f32> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let x_j: Vec<f32> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let (b, c) = head_bilinear(&weights, layer, head).unwrap();
        // x_j^T (B C) x_i through the factors.
        let mut ci = vec![0.0f64; c.rows()];
        for (r, v) in ci.iter_mut().enumerate() {
            *v = c.row(r).iter().zip(&x_i).map(|(&w, &x)| w as f64 * x as f64).sum();
        }
        let mut bj = vec![0.0f64; b.cols()];
        for (idx, &xv) in x_j.iter().enumerate() {
            for r in 0..b.cols() {
                bj[r] += xv as f64 * b.at(idx, r) as f64;
            }
        }
        let via_factors: f64 = bj.iter().zip(&ci).map(|(a, b)| a * b).sum();
        let via_encoder = attention_logit_unscaled(&weights, layer, head, &x_i, &x_j).unwrap();
        assert!(
            (via_factors - via_encoder as f64).abs() < 1e-5,
            "{via_factors} vs {via_encoder}"
        );
    }
}

#[test]
fn bilinear_form_zero_query_weights() {
    let config = fixtures::tiny_config();
    let mut weights = fixtures::random_weights(&config, 27);
    for v in weights.layers[0].w_query.data_mut() {
        *v = 0.0;
    }
    let (b, c) = head_bilinear(&weights, 0, 0).unwrap();
    assert!(c.data().iter().all(|&v| v == 0.0));
    let (norm, raw) = svd_alignment(&b, &c).unwrap();
    assert_eq!(norm, 0.0);
    assert_eq!(raw, 0.0);
    let x = vec![1.0f32; config.hidden_size];
    let logit = attention_logit_unscaled(&weights, 0, 0, &x, &x).unwrap();
    assert_eq!(logit, 0.0);
}

#[test]
fn alignment_identity() {
    let b = Tensor::new(vec![2, 2], vec![1., 0., 0., 1.]).unwrap();
    let c = b.clone();
    let (norm, raw) = svd_alignment(&b, &c).unwrap();
    assert!((raw - 2.0).abs() < 1e-10);
    assert!((norm - 1.0).abs() < 1e-10);
}

#[test]
fn alignment_rotation_is_zero() {
    let b = Tensor::new(vec![2, 2], vec![1., 0., 0., 1.]).unwrap();
    let c = Tensor::new(vec![2, 2], vec![0., -1., 1., 0.]).unwrap();
    let (norm, raw) = svd_alignment(&b, &c).unwrap();
    assert!(raw.abs() < 1e-6, "raw {raw}");
    assert!(norm.abs() < 1e-6, "norm {norm}");
}

#[test]
fn alignment_sign_structure() {
    // A = diag(2, -3): raw = 2*1 + 3*(-1) = -1, normalized = -0.2.
    let b = Tensor::new(vec![2, 2], vec![1., 0., 0., 1.]).unwrap();
    let c = Tensor::new(vec![2, 2], vec![2., 0., 0., -3.]).unwrap();
    let (norm, raw) = svd_alignment(&b, &c).unwrap();
    assert!((raw + 1.0).abs() < 1e-6, "raw {raw}");
    assert!((norm + 0.2).abs() < 1e-6, "norm {norm}");
}

#[test]
fn alignment_one_for_symmetric_psd() {
    let mut rng = ChaCha8Rng::seed_from_u64(270);
    for _ in 0..20 {
        // A = G G^T is symmetric PSD; factored as B = G, C = G^T.
        let d = rng.gen_range(2..8usize);
        let g: Vec<f32> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = Tensor::new(vec![d, d], g.clone()).unwrap();
        let c = b.transposed();
        let (norm, _) = svd_alignment(&b, &c).unwrap();
        assert!((norm - 1.0).abs() < 1e-4, "norm {norm}");
    }
}

#[test]
fn alignment_invariant_under_transposition() {
    let mut rng = ChaCha8Rng::seed_from_u64(280);
    for _ in 0..20 {
        let d = rng.gen_range(2..8usize);
        let r = rng.gen_range(1..=d);
        let b = Tensor::new(
            vec![d, r],
            (0..d * r).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        let c = Tensor::new(
            vec![r, d],
            (0..d * r).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>(),
        )
        .unwrap();
        let (n1, r1) = svd_alignment(&b, &c).unwrap();
        // A^T = C^T B^T, factored as (C^T, B^T).
        let (n2, r2) = svd_alignment(&c.transposed(), &b.transposed()).unwrap();
        assert!((n1 - n2).abs() < 1e-6, "{n1} vs {n2}");
        assert!((r1 - r2).abs() < 1e-6, "{r1} vs {r2}");
    }
}

fn mean_emb(layer: usize, q: Vec<f64>, d: Vec<f64>) -> MeanPartEmbeddings {
    MeanPartEmbeddings {
        layer,
        query_mean: q,
        doc_mean: d,
        sample_size: 100,
    }
}

#[test]
fn cross_ctx_zero_cases() {
    let d = 6;
    let b = Tensor::zeros(vec![d, 3]);
    let c = Tensor::zeros(vec![3, d]);
    let emb = mean_emb(0, vec![1.0; d], vec![2.0; d]);
    assert_eq!(cross_ctx_score(&b, &c, &emb).unwrap(), 0.0);

    // q = d forces a zero difference regardless of the form.
    let mut rng = ChaCha8Rng::seed_from_u64(290);
    let b = Tensor::new(vec![d, 3], (0..18).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>()).unwrap();
    let c = Tensor::new(vec![3, d], (0..18).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>()).unwrap();
    let v: Vec<f64> = (0..d).map(|i| i as f64 / 3.0).collect();
    let emb = mean_emb(0, v.clone(), v);
    assert!(cross_ctx_score(&b, &c, &emb).unwrap().abs() < 1e-7);
}

#[test]
fn cross_ctx_matches_materialized_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(300);
    for _ in 0..30 {
        let d = rng.gen_range(2..10usize);
        let r = rng.gen_range(1..=d);
        let b = Tensor::new(vec![d, r], (0..d * r).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>()).unwrap();
        let c = Tensor::new(vec![r, d], (0..d * r).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>()).unwrap();
        let q: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let dv: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();

        // Materialized d x d oracle.
        let b64: Vec<f64> = b.data().iter().map(|&v| v as f64).collect();
        let c64: Vec<f64> = c.data().iter().map(|&v| v as f64).collect();
        let a = common::matmul_oracle(&b64, &c64, d, r, d);
        let bilinear = |x: &[f64], y: &[f64]| -> f64 {
            let mut acc = 0.0;
            for i in 0..d {
                for j in 0..d {
                    acc += x[i] * a[i * d + j] * y[j];
                }
            }
            acc
        };
        let want = bilinear(&q, &dv) - bilinear(&dv, &dv);
        let got = cross_ctx_score(&b, &c, &mean_emb(0, q, dv)).unwrap();
        assert!((got - want).abs() < 1e-5, "{got} vs {want}");
    }
}

#[test]
fn cross_ctx_linear_in_query() {
    let mut rng = ChaCha8Rng::seed_from_u64(310);
    let d = 8;
    let b = Tensor::new(vec![d, 4], (0..32).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>()).unwrap();
    let c = Tensor::new(vec![4, d], (0..32).map(|_| rng.gen_range(-1.0f32..1.0)).collect::<Vec<_>>()).unwrap();
    let q1: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let q2: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let dv: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (alpha, beta) = (0.7f64, -1.3f64);
    let combo: Vec<f64> = q1.iter().zip(&q2).map(|(a, b)| alpha * a + beta * b).collect();

    let s_combo = cross_ctx_score(&b, &c, &mean_emb(0, combo, dv.clone())).unwrap();
    let s1 = cross_ctx_score(&b, &c, &mean_emb(0, q1, dv.clone())).unwrap();
    let s2 = cross_ctx_score(&b, &c, &mean_emb(0, q2, dv.clone())).unwrap();
    // score is affine in q with offset -d^T A d; subtract it from both sides.
    let offset = cross_ctx_score(&b, &c, &mean_emb(0, dv.clone(), dv.clone())).unwrap();
    assert!(offset.abs() < 1e-9);
    let zero_q = cross_ctx_score(&b, &c, &mean_emb(0, vec![0.0; d], dv)).unwrap();
    let want = alpha * (s1 - zero_q) + beta * (s2 - zero_q) + zero_q;
    assert!((s_combo - want).abs() < 1e-5, "{s_combo} vs {want}");
}

#[test]
fn embedding_accumulator_matches_manual_means() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 31);
    let mut rng = ChaCha8Rng::seed_from_u64(320);
    let mut acc = EmbeddingAccumulator::new();
    let mut manual_q = vec![0.0f64; config.hidden_size];
    let mut q_tokens = 0u64;
    for _ in 0..5 {
        let input = fixtures::random_input(&config, &mut rng);
        let (_, trace) = forward(&input, &weights, None).unwrap();
        for i in input.parts.span(Part::Query) {
            for (m, &v) in manual_q.iter_mut().zip(trace.layer_inputs[1].row(i)) {
                *m += v as f64;
            }
        }
        q_tokens += input.parts.span(Part::Query).len() as u64;
        acc.add_trace(&trace, &input.parts);
    }
    let embs = acc.finalize(1).unwrap();
    assert_eq!(embs.len(), config.num_layers);
    assert_eq!(embs[1].sample_size, 5);
    for (got, want) in embs[1].query_mean.iter().zip(&manual_q) {
        assert!((got - want / q_tokens as f64).abs() < 1e-9);
    }
    assert!(acc.finalize(100).is_err());
}

#[test]
fn stats_merge_is_order_insensitive_within_tolerance() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 33);
    let mut rng = ChaCha8Rng::seed_from_u64(333);
    let directions = [dir(Part::Query, Part::Doc)];
    let partials: Vec<StatsAccumulator> = (0..16)
        .map(|_| {
            let input = fixtures::random_input(&config, &mut rng);
            let (_, trace) = forward(&input, &weights, None).unwrap();
            let mut acc = StatsAccumulator::new();
            acc.add_trace(&trace, &input.parts, 1, &directions);
            acc
        })
        .collect();

    let mut forward_order = StatsAccumulator::new();
    for p in &partials {
        forward_order.merge(p.clone());
    }
    let mut reverse_order = StatsAccumulator::new();
    for p in partials.iter().rev() {
        reverse_order.merge(p.clone());
    }
    // Pairwise tree merge.
    let mut level = partials;
    while level.len() > 1 {
        let mut next = Vec::new();
        for pair in level.chunks(2) {
            let mut merged = pair[0].clone();
            if let Some(rhs) = pair.get(1) {
                merged.merge(rhs.clone());
            }
            next.push(merged);
        }
        level = next;
    }
    let tree_order = level.pop().unwrap();

    let a = forward_order.stats();
    let b = reverse_order.stats();
    let c = tree_order.stats();
    assert_eq!(a.len(), b.len());
    assert_eq!(a.len(), c.len());
    for ((x, y), z) in a.iter().zip(&b).zip(&c) {
        assert!((x.mean - y.mean).abs() < 1e-9);
        assert!((x.mean - z.mean).abs() < 1e-9);
        assert_eq!(x.count, y.count);
        assert_eq!(x.count, z.count);
    }
}

#[test]
fn diagnostics_table_shape_and_join() {
    let config = fixtures::tiny_config();
    let weights = fixtures::random_weights(&config, 32);
    let mut rng = ChaCha8Rng::seed_from_u64(330);

    let mut emb_acc = EmbeddingAccumulator::new();
    let mut stats = StatsAccumulator::new();
    let directions = [dir(Part::Query, Part::Doc), dir(Part::Doc, Part::Query)];
    for i in 0..8 {
        let input = fixtures::random_input(&config, &mut rng);
        let (_, trace) = forward(&input, &weights, None).unwrap();
        emb_acc.add_trace(&trace, &input.parts);
        stats.add_trace(&trace, &input.parts, if i % 2 == 0 { 3 } else { -1 }, &directions);
    }
    let embs = emb_acc.finalize(1).unwrap();
    let contrast = class_contrast(&stats.stats(), &[2, 3], &[-1]).unwrap();

    let rows = diagnostics_table(&weights, &embs, &contrast).unwrap();
    assert_eq!(rows.len(), config.num_layers * config.num_heads);
    for (idx, row) in rows.iter().enumerate() {
        assert_eq!(row.layer, idx / config.num_heads);
        assert_eq!(row.head, idx % config.num_heads);
        assert!((-1.0..=1.0).contains(&row.align_norm));

        // Join agrees with independent per-operation calls.
        let (b, c) = head_bilinear(&weights, row.layer, row.head).unwrap();
        let (norm, raw) = svd_alignment(&b, &c).unwrap();
        let ctx = cross_ctx_score(&b, &c, &embs[row.layer]).unwrap();
        assert_eq!(row.align_norm, norm);
        assert_eq!(row.align_raw, raw);
        assert_eq!(row.cross_ctx, ctx);
        let want_diff: f64 = contrast
            .iter()
            .filter(|r| r.layer == row.layer && r.head == row.head)
            .map(|r| r.diff)
            .sum::<f64>()
            / 2.0;
        assert!((row.attn_diff.unwrap() - want_diff).abs() < 1e-12);
    }

    // Empty contrast: rows still emitted, attn_diff absent.
    let rows = diagnostics_table(&weights, &embs, &[]).unwrap();
    assert_eq!(rows.len(), config.num_layers * config.num_heads);
    assert!(rows.iter().all(|r| r.attn_diff.is_none()));

    // Missing layer embeddings are an error.
    assert!(diagnostics_table(&weights, &embs[..1], &[]).is_err());
}

#[test]
fn identity_projection_head_has_alignment_one() {
    // W_Q = W_K = the identity slice for head 0: the head's bilinear
    // form is symmetric PSD on its subspace, so normalized alignment
    // is exactly 1 and every unscaled logit is the plain dot product
    // of the head-dim prefix.
    let config = fixtures::tiny_config();
    let mut weights = fixtures::random_weights(&config, 40);
    let d = config.hidden_size;
    let dh = config.head_dim();
    for r in 0..dh {
        for i in 0..d {
            weights.layers[0].w_query.data_mut()[r * d + i] = f32::from(i == r);
            weights.layers[0].w_key.data_mut()[r * d + i] = f32::from(i == r);
        }
    }
    let (b, c) = head_bilinear(&weights, 0, 0).unwrap();
    let (norm, raw) = svd_alignment(&b, &c).unwrap();
    assert!((norm - 1.0).abs() < 1e-6, "norm {norm}");
    assert!((raw - dh as f64).abs() < 1e-6, "raw {raw}");

    let mut rng = ChaCha8Rng::seed_from_u64(400);
    let x_i: Vec<f32> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let x_j: Vec<f32> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let logit = attention_logit_unscaled(&weights, 0, 0, &x_i, &x_j).unwrap();
    let want: f32 = (0..dh).map(|r| x_i[r] * x_j[r]).sum();
    assert!((logit - want).abs() < 1e-6);
}
