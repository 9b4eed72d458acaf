//! Measurement instruments over traced forward passes: per-head
//! direction-attention statistics contrasted by relevance class,
//! attention-mass histograms, and per-head matching diagnostics
//! (singular-vector alignment and cross-contextualization).

use std::collections::BTreeMap;
use std::io::Write;

use crate::ablation::{Direction, SourcePart};
use crate::encoder::{AttentionTrace, Weights};
use crate::error::{Error, Result};
use crate::linalg::{svd_factored, Tensor};
use crate::segment::{Part, PartSpans};

/// Compensated (Kahan) accumulator so merge order cannot disturb sums.
#[derive(Debug, Default, Clone, Copy)]
struct Kahan {
    sum: f64,
    c: f64,
}

impl Kahan {
    fn add(&mut self, v: f64) {
        let y = v - self.c;
        let t = self.sum + y;
        self.c = (t - self.sum) - y;
        self.sum = t;
    }

    fn value(&self) -> f64 {
        self.sum
    }
}

// ---------------------------------------------------------------------------
// Direction mass
// ---------------------------------------------------------------------------

/// Per-(layer, head) attention mass sent along `direction`: the mean over
/// target-span tokens of their total attention onto the source span.
/// Values index as `layer * num_heads + head` and lie in [0, 1].
///
/// Returns `None` (an undefined-statistic marker, skipped in
/// aggregation) when the direction's spans are empty in this input.
pub fn direction_mass(
    trace: &AttentionTrace,
    parts: &PartSpans,
    direction: Direction,
) -> Option<Vec<f64>> {
    let rows = parts.span(direction.target);
    let cols = match direction.source {
        SourcePart::Part(p) => parts.span(p),
        SourcePart::All => 0..parts.len(),
    };
    if rows.is_empty() || cols.is_empty() {
        return None;
    }
    let len = trace.len;
    let mut out = Vec::with_capacity(trace.num_layers() * trace.num_heads);
    for layer in 0..trace.num_layers() {
        for head in 0..trace.num_heads {
            let m = trace.head_matrix(layer, head);
            let mut acc = 0.0f64;
            for i in rows.clone() {
                let row = &m[i * len..(i + 1) * len];
                for j in cols.clone() {
                    acc += row[j] as f64;
                }
            }
            out.push(acc / rows.len() as f64);
        }
    }
    Some(out)
}

// ---------------------------------------------------------------------------
// Per-head statistics by relevance class
// ---------------------------------------------------------------------------

/// One aggregated cell: mean attention mass of a direction at one head
/// for one relevance grade.
#[derive(Debug, Clone, PartialEq)]
pub struct HeadStat {
    pub layer: usize,
    pub head: usize,
    pub direction: Direction,
    /// Relevance grade: judged grades 0..=3, easy negatives -1.
    pub grade: i8,
    pub mean: f64,
    pub count: u64,
}

type StatKey = (usize, usize, Direction, i8);

/// Streaming accumulator for [`HeadStat`]s. Partial accumulators built on
/// worker threads merge associatively; the compensated sums keep any
/// merge order within 1e-9 of the sequential result.
#[derive(Debug, Default, Clone)]
pub struct StatsAccumulator {
    cells: BTreeMap<StatKey, (Kahan, u64)>,
}

impl StatsAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    /// Fold one pair's trace into the statistics for every direction in
    /// `directions`. Directions with empty spans are skipped.
    pub fn add_trace(
        &mut self,
        trace: &AttentionTrace,
        parts: &PartSpans,
        grade: i8,
        directions: &[Direction],
    ) {
        let heads = trace.num_heads;
        for &direction in directions {
            let Some(masses) = direction_mass(trace, parts, direction) else {
                continue;
            };
            for (idx, &mass) in masses.iter().enumerate() {
                let key = (idx / heads, idx % heads, direction, grade);
                let cell = self.cells.entry(key).or_default();
                cell.0.add(mass);
                cell.1 += 1;
            }
        }
    }

    pub fn merge(&mut self, other: StatsAccumulator) {
        for (key, (sum, count)) in other.cells {
            let cell = self.cells.entry(key).or_default();
            cell.0.add(sum.value());
            cell.1 += count;
        }
    }

    /// Finalized rows, sorted by (layer, head, direction, grade).
    pub fn stats(&self) -> Vec<HeadStat> {
        self.cells
            .iter()
            .map(|(&(layer, head, direction, grade), &(sum, count))| HeadStat {
                layer,
                head,
                direction,
                grade,
                mean: sum.value() / count as f64,
                count,
            })
            .collect()
    }
}

/// Mean difference in attention mass between two relevance classes.
#[derive(Debug, Clone, PartialEq)]
pub struct ContrastRow {
    pub layer: usize,
    pub head: usize,
    pub direction: Direction,
    pub mean_a: f64,
    pub mean_b: f64,
    pub diff: f64,
    pub count_a: u64,
    pub count_b: u64,
}

/// Per-(layer, head, direction) difference `mean(class_a) - mean(class_b)`.
///
/// Classes are grade sets (e.g. relevant = {2, 3} vs easy negatives =
/// {-1}). Every key present in `stats` must carry at least one pair in
/// each class, otherwise the empty class is reported by name.
pub fn class_contrast(
    stats: &[HeadStat],
    class_a: &[i8],
    class_b: &[i8],
) -> Result<Vec<ContrastRow>> {
    type ClassSums = (f64, u64, f64, u64);
    let mut grouped: BTreeMap<(usize, usize, Direction), ClassSums> = BTreeMap::new();
    for s in stats {
        let entry = grouped
            .entry((s.layer, s.head, s.direction))
            .or_insert((0.0, 0, 0.0, 0));
        if class_a.contains(&s.grade) {
            entry.0 += s.mean * s.count as f64;
            entry.1 += s.count;
        }
        if class_b.contains(&s.grade) {
            entry.2 += s.mean * s.count as f64;
            entry.3 += s.count;
        }
    }
    let mut rows = Vec::with_capacity(grouped.len());
    for ((layer, head, direction), (sum_a, n_a, sum_b, n_b)) in grouped {
        if n_a == 0 {
            return Err(Error::Eval(format!(
                "class {class_a:?} has no pairs for layer {layer} head {head} direction {direction}"
            )));
        }
        if n_b == 0 {
            return Err(Error::Eval(format!(
                "class {class_b:?} has no pairs for layer {layer} head {head} direction {direction}"
            )));
        }
        let mean_a = sum_a / n_a as f64;
        let mean_b = sum_b / n_b as f64;
        rows.push(ContrastRow {
            layer,
            head,
            direction,
            mean_a,
            mean_b,
            diff: mean_a - mean_b,
            count_a: n_a,
            count_b: n_b,
        });
    }
    Ok(rows)
}

// ---------------------------------------------------------------------------
// Histograms
// ---------------------------------------------------------------------------

/// Histogram over [0, 1] of per-pair direction masses, one row of bins
/// per relevance class. Bin edges are uniform; a value of exactly 1.0
/// lands in the last bin.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub bins: usize,
    pub counts: BTreeMap<i8, Vec<u64>>,
}

impl Histogram {
    pub fn new(bins: usize) -> Result<Histogram> {
        if bins < 2 {
            return Err(Error::Input(format!("histogram needs >= 2 bins, got {bins}")));
        }
        Ok(Histogram {
            bins,
            counts: BTreeMap::new(),
        })
    }

    pub fn add(&mut self, grade: i8, value: f64) {
        let idx = ((value * self.bins as f64) as usize).min(self.bins - 1);
        let row = self
            .counts
            .entry(grade)
            .or_insert_with(|| vec![0; self.bins]);
        row[idx] += 1;
    }

    pub fn merge(&mut self, other: &Histogram) {
        debug_assert_eq!(self.bins, other.bins);
        for (grade, bins) in &other.counts {
            let row = self
                .counts
                .entry(*grade)
                .or_insert_with(|| vec![0; self.bins]);
            for (a, b) in row.iter_mut().zip(bins) {
                *a += b;
            }
        }
    }
}

/// Build the histogram of one (direction, layer, head) over a set of
/// traced pairs labelled with relevance grades.
pub fn attention_histogram(
    traces: &[(AttentionTrace, PartSpans, i8)],
    direction: Direction,
    layer: usize,
    head: usize,
    bins: usize,
) -> Result<Histogram> {
    let mut hist = Histogram::new(bins)?;
    for (trace, parts, grade) in traces {
        if let Some(masses) = direction_mass(trace, parts, direction) {
            hist.add(*grade, masses[layer * trace.num_heads + head]);
        }
    }
    Ok(hist)
}

// ---------------------------------------------------------------------------
// Head bilinear form and diagnostics
// ---------------------------------------------------------------------------

/// The factored bilinear form of one head: `(B, C)` with `B = K_h^T`
/// (`hidden x head_dim`) and `C = Q_h` (`head_dim x hidden`), so that
/// `x_j^T (B C) x_i` is the head's unscaled, bias-free logit for "token i
/// attends to token j". Query/key biases and the `1/sqrt(head_dim)`
/// scale take part in the forward pass but not in this form.
pub fn head_bilinear(weights: &Weights, layer: usize, head: usize) -> Result<(Tensor, Tensor)> {
    let cfg = &weights.config;
    if layer >= cfg.num_layers || head >= cfg.num_heads {
        return Err(Error::Input(format!(
            "layer {layer} / head {head} out of range ({} layers, {} heads)",
            cfg.num_layers, cfg.num_heads
        )));
    }
    let d = cfg.hidden_size;
    let dh = cfg.head_dim();
    let off = head * dh;
    let lw = &weights.layers[layer];

    let mut b = Tensor::zeros(vec![d, dh]);
    for r in 0..dh {
        let k_row = lw.w_key.row(off + r);
        for (i, &kv) in k_row.iter().enumerate() {
            b.data_mut()[i * dh + r] = kv;
        }
    }
    let mut c = Tensor::zeros(vec![dh, d]);
    for r in 0..dh {
        c.row_mut(r).copy_from_slice(lw.w_query.row(off + r));
    }
    Ok((b, c))
}

/// Singular-vector alignment of a factored head form:
/// `raw = sum_k sigma_k (u_k . v_k)` over the nonzero triplets and
/// `normalized = raw / sum_k sigma_k` (0 when every sigma is below
/// 1e-12). Invariant under joint sign flips of any (u_k, v_k) pair.
pub fn svd_alignment(b: &Tensor, c: &Tensor) -> Result<(f64, f64)> {
    let svd = svd_factored(b, c)?;
    let mut raw = 0.0f64;
    for k in 0..svd.rank() {
        let uv: f64 = svd.left_vectors[k]
            .iter()
            .zip(&svd.right_vectors[k])
            .map(|(u, v)| u * v)
            .sum();
        raw += svd.singular_values[k] * uv;
    }
    let total = svd.nuclear_norm();
    let normalized = if total < 1e-12 { 0.0 } else { raw / total };
    Ok((normalized, raw))
}

/// Shared-component estimates for one layer: the mean query-token and
/// document-token hidden states entering that layer's attention,
/// averaged over a corpus sample.
#[derive(Debug, Clone)]
pub struct MeanPartEmbeddings {
    pub layer: usize,
    pub query_mean: Vec<f64>,
    pub doc_mean: Vec<f64>,
    /// Number of pairs that contributed.
    pub sample_size: u64,
}

/// Accumulates per-layer query/document hidden-state means over pairs.
#[derive(Debug, Default, Clone)]
pub struct EmbeddingAccumulator {
    layers: Vec<LayerEmbeddingSums>,
    pairs: u64,
}

#[derive(Debug, Clone)]
struct LayerEmbeddingSums {
    q_sum: Vec<Kahan>,
    q_tokens: u64,
    d_sum: Vec<Kahan>,
    d_tokens: u64,
}

impl EmbeddingAccumulator {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add_trace(&mut self, trace: &AttentionTrace, parts: &PartSpans) {
        if self.layers.is_empty() {
            let d = trace.layer_inputs[0].cols();
            self.layers = (0..trace.num_layers())
                .map(|_| LayerEmbeddingSums {
                    q_sum: vec![Kahan::default(); d],
                    q_tokens: 0,
                    d_sum: vec![Kahan::default(); d],
                    d_tokens: 0,
                })
                .collect();
        }
        for (layer, sums) in self.layers.iter_mut().enumerate() {
            let x = &trace.layer_inputs[layer];
            for i in parts.span(Part::Query) {
                for (acc, &v) in sums.q_sum.iter_mut().zip(x.row(i)) {
                    acc.add(v as f64);
                }
            }
            sums.q_tokens += parts.span(Part::Query).len() as u64;
            for i in parts.span(Part::Doc) {
                for (acc, &v) in sums.d_sum.iter_mut().zip(x.row(i)) {
                    acc.add(v as f64);
                }
            }
            sums.d_tokens += parts.span(Part::Doc).len() as u64;
        }
        self.pairs += 1;
    }

    pub fn merge(&mut self, other: EmbeddingAccumulator) {
        if self.layers.is_empty() {
            *self = other;
            return;
        }
        if other.layers.is_empty() {
            return;
        }
        for (mine, theirs) in self.layers.iter_mut().zip(other.layers) {
            for (a, b) in mine.q_sum.iter_mut().zip(&theirs.q_sum) {
                a.add(b.value());
            }
            for (a, b) in mine.d_sum.iter_mut().zip(&theirs.d_sum) {
                a.add(b.value());
            }
            mine.q_tokens += theirs.q_tokens;
            mine.d_tokens += theirs.d_tokens;
        }
        self.pairs += other.pairs;
    }

    pub fn pairs(&self) -> u64 {
        self.pairs
    }

    /// Finalize the per-layer means. `min_pairs` guards against
    /// estimating the shared component from too small a sample (100
    /// pairs is the recommended floor for meaningful estimates).
    pub fn finalize(&self, min_pairs: u64) -> Result<Vec<MeanPartEmbeddings>> {
        if self.pairs < min_pairs {
            return Err(Error::Eval(format!(
                "only {} pairs accumulated for the query/document embedding means (minimum {min_pairs})",
                self.pairs
            )));
        }
        Ok(self
            .layers
            .iter()
            .enumerate()
            .map(|(layer, sums)| MeanPartEmbeddings {
                layer,
                query_mean: sums.q_sum.iter().map(|k| k.value() / sums.q_tokens as f64).collect(),
                doc_mean: sums.d_sum.iter().map(|k| k.value() / sums.d_tokens as f64).collect(),
                sample_size: self.pairs,
            })
            .collect())
    }
}

/// Cross-contextualization score `q^T A_h d - d^T A_h d` evaluated
/// through the factors (two `head_dim`-sized intermediates; the full
/// `hidden x hidden` form is never materialized).
pub fn cross_ctx_score(b: &Tensor, c: &Tensor, emb: &MeanPartEmbeddings) -> Result<f64> {
    let d_model = b.rows();
    let dh = b.cols();
    if emb.query_mean.len() != d_model || emb.doc_mean.len() != d_model {
        return Err(Error::Shape {
            context: "cross_ctx_score".into(),
            lhs: vec![emb.query_mean.len(), emb.doc_mean.len()],
            rhs: vec![d_model, d_model],
        });
    }
    // y = C d, z_q = B^T q, z_d = B^T d; score = z_q.y - z_d.y
    let mut y = vec![0.0f64; dh];
    for (r, yv) in y.iter_mut().enumerate() {
        let row = c.row(r);
        *yv = emb
            .doc_mean
            .iter()
            .zip(row)
            .map(|(d, &w)| d * w as f64)
            .sum();
    }
    let mut zq = vec![0.0f64; dh];
    let mut zd = vec![0.0f64; dh];
    for i in 0..d_model {
        let row = b.row(i);
        let qv = emb.query_mean[i];
        let dv = emb.doc_mean[i];
        for r in 0..dh {
            zq[r] += qv * row[r] as f64;
            zd[r] += dv * row[r] as f64;
        }
    }
    let qad: f64 = zq.iter().zip(&y).map(|(a, b)| a * b).sum();
    let dad: f64 = zd.iter().zip(&y).map(|(a, b)| a * b).sum();
    Ok(qad - dad)
}

/// One row of the matching-head diagnostics table.
#[derive(Debug, Clone)]
pub struct HeadDiagnostics {
    pub layer: usize,
    pub head: usize,
    pub align_norm: f64,
    pub align_raw: f64,
    pub cross_ctx: f64,
    /// Mean of the Q<-D and D<-Q relevance contrasts; absent when the
    /// contrast table carries no entry for this head.
    pub attn_diff: Option<f64>,
}

/// Join alignment, cross-contextualization and attention contrast into
/// one row per (layer, head), sorted by (layer, head).
///
/// `embeddings` must cover every layer; `contrast` rows for directions
/// other than Q<-D / D<-Q are ignored. Heads without a contrast entry
/// get an absent `attn_diff`.
pub fn diagnostics_table(
    weights: &Weights,
    embeddings: &[MeanPartEmbeddings],
    contrast: &[ContrastRow],
) -> Result<Vec<HeadDiagnostics>> {
    let cfg = &weights.config;
    let mut emb_by_layer: BTreeMap<usize, &MeanPartEmbeddings> = BTreeMap::new();
    for e in embeddings {
        emb_by_layer.insert(e.layer, e);
    }

    let q_from_d = Direction {
        target: Part::Query,
        source: SourcePart::Part(Part::Doc),
    };
    let d_from_q = Direction {
        target: Part::Doc,
        source: SourcePart::Part(Part::Query),
    };
    let mut diffs: BTreeMap<(usize, usize), Vec<f64>> = BTreeMap::new();
    for row in contrast {
        if row.direction == q_from_d || row.direction == d_from_q {
            diffs.entry((row.layer, row.head)).or_default().push(row.diff);
        }
    }

    let mut out = Vec::with_capacity(cfg.num_layers * cfg.num_heads);
    for layer in 0..cfg.num_layers {
        let emb = emb_by_layer.get(&layer).ok_or_else(|| {
            Error::Eval(format!("no mean embeddings for layer {layer}"))
        })?;
        for head in 0..cfg.num_heads {
            let (b, c) = head_bilinear(weights, layer, head)?;
            let (align_norm, align_raw) = svd_alignment(&b, &c)?;
            let cross_ctx = cross_ctx_score(&b, &c, emb)?;
            let attn_diff = diffs.get(&(layer, head)).map(|v| {
                v.iter().sum::<f64>() / v.len() as f64
            });
            out.push(HeadDiagnostics {
                layer,
                head,
                align_norm,
                align_raw,
                cross_ctx,
                attn_diff,
            });
        }
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Exports
// ---------------------------------------------------------------------------

pub fn write_stats_csv(mut w: impl Write, stats: &[HeadStat]) -> Result<()> {
    writeln!(w, "layer,head,direction,class,mean,count")?;
    for s in stats {
        writeln!(
            w,
            "{},{},{},{},{},{}",
            s.layer, s.head, s.direction, s.grade, s.mean, s.count
        )?;
    }
    Ok(())
}

pub fn write_stats_jsonl(mut w: impl Write, stats: &[HeadStat]) -> Result<()> {
    for s in stats {
        writeln!(
            w,
            "{}",
            serde_json::json!({
                "layer": s.layer, "head": s.head,
                "direction": s.direction.to_string(),
                "class": s.grade, "mean": s.mean, "count": s.count,
            })
        )?;
    }
    Ok(())
}

pub fn write_contrast_csv(mut w: impl Write, rows: &[ContrastRow]) -> Result<()> {
    writeln!(w, "layer,head,direction,mean_a,mean_b,diff,count_a,count_b")?;
    for r in rows {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{}",
            r.layer, r.head, r.direction, r.mean_a, r.mean_b, r.diff, r.count_a, r.count_b
        )?;
    }
    Ok(())
}

pub fn write_histogram_csv(
    mut w: impl Write,
    entries: &[(Direction, usize, usize, Histogram)],
) -> Result<()> {
    writeln!(w, "direction,layer,head,class,bin_lo,bin_hi,count")?;
    for (direction, layer, head, hist) in entries {
        for (grade, bins) in &hist.counts {
            for (b, count) in bins.iter().enumerate() {
                writeln!(
                    w,
                    "{},{},{},{},{},{},{}",
                    direction,
                    layer,
                    head,
                    grade,
                    b as f64 / hist.bins as f64,
                    (b + 1) as f64 / hist.bins as f64,
                    count
                )?;
            }
        }
    }
    Ok(())
}

pub fn write_diagnostics_csv(mut w: impl Write, rows: &[HeadDiagnostics]) -> Result<()> {
    writeln!(w, "layer,head,align_norm,align_raw,cross_ctx,attn_diff")?;
    for r in rows {
        let attn = r.attn_diff.map(|v| v.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            r.layer, r.head, r.align_norm, r.align_raw, r.cross_ctx, attn
        )?;
    }
    Ok(())
}

pub fn write_diagnostics_jsonl(mut w: impl Write, rows: &[HeadDiagnostics]) -> Result<()> {
    for r in rows {
        writeln!(
            w,
            "{}",
            serde_json::json!({
                "layer": r.layer, "head": r.head,
                "align_norm": r.align_norm, "align_raw": r.align_raw,
                "cross_ctx": r.cross_ctx, "attn_diff": r.attn_diff,
            })
        )?;
    }
    Ok(())
}
