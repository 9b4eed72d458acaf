//! Batch experiment commands behind the `matchprobe` binary: baseline
//! scoring, ablation grids and layer sweeps, per-head statistics, and
//! standalone easy-negative sampling.
//!
//! Outputs are pure functions of (config, input files, seed): pairs are
//! scored in a worker pool but contributions are folded in a fixed pair
//! order, so the worker count changes wall time only, never bytes. All
//! files are written to a temp directory and atomically renamed into the
//! output directory on success.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Deserialize;

use crate::ablation::{parse_spec, parse_spec_auto, AblationSpec, Direction, SourcePart};
use crate::analysis::{
    class_contrast, diagnostics_table, direction_mass, write_contrast_csv, write_diagnostics_csv,
    write_diagnostics_jsonl, write_histogram_csv, write_stats_csv, write_stats_jsonl,
    ContrastRow, EmbeddingAccumulator, HeadDiagnostics, HeadStat, Histogram, StatsAccumulator,
};
use crate::encoder::{forward, forward_score, load_weights, ModelConfig, Weights};
use crate::error::{Error, Result};
use crate::ireval::{
    evaluate_run, format_qrels, format_run, load_tsv, paired_ttest, parse_negatives, parse_qrels,
    rank_scored, sample_easy_negatives, Qrels, RunEntry, EASY_NEGATIVE_GRADE,
};
use crate::segment::{build_pair, Part, SegmentedInput, Vocab};

/// Run tag written into TREC run files.
const RUN_TAG: &str = "matchprobe";

/// Significance threshold flagged in ablation tables.
const SIGNIFICANCE_LEVEL: f64 = 0.05;

/// Fully resolved experiment configuration.
///
/// Loadable from a single JSON file whose keys are the field names;
/// command-line flags override individual fields. `validate` checks that
/// every referenced path exists.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model_config: PathBuf,
    pub weights: PathBuf,
    pub vocab: PathBuf,
    pub queries: PathBuf,
    pub collection: PathBuf,
    pub qrels: PathBuf,
    /// Pre-sampled easy negatives file (4-column, grade -1).
    #[serde(default)]
    pub negatives: Option<PathBuf>,
    /// Easy negatives to synthesize per query when no file is given.
    #[serde(default)]
    pub easy_negatives: usize,
    /// Seed for every random choice in the run.
    #[serde(default)]
    pub seed: u64,
    pub output_dir: PathBuf,
    #[serde(default = "default_max_len")]
    pub max_len: usize,
    #[serde(default = "default_batch_size")]
    pub batch_size: usize,
    #[serde(default = "default_workers")]
    pub workers: usize,
    /// nDCG rank cutoff.
    #[serde(default = "default_k")]
    pub k: usize,
    /// Histogram bins over [0, 1].
    #[serde(default = "default_bins")]
    pub bins: usize,
    /// Minimum pairs required for the query/document mean-embedding
    /// estimate (100 is the recommended floor).
    #[serde(default = "default_min_qd_sample")]
    pub min_qd_sample: u64,
    /// Grades counted as "relevant" in class contrasts.
    #[serde(default = "default_relevant_grades")]
    pub relevant_grades: Vec<i8>,
}

fn default_max_len() -> usize {
    512
}
fn default_batch_size() -> usize {
    32
}
fn default_workers() -> usize {
    1
}
fn default_k() -> usize {
    10
}
fn default_bins() -> usize {
    20
}
fn default_min_qd_sample() -> u64 {
    100
}
fn default_relevant_grades() -> Vec<i8> {
    vec![2, 3]
}

impl ExperimentConfig {
    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let text = std::fs::read_to_string(path.as_ref())?;
        serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.as_ref().display())))
    }

    pub fn validate(&self) -> Result<()> {
        for (name, path) in [
            ("model_config", &self.model_config),
            ("weights", &self.weights),
            ("vocab", &self.vocab),
            ("queries", &self.queries),
            ("collection", &self.collection),
            ("qrels", &self.qrels),
        ] {
            if !path.exists() {
                return Err(Error::Config(format!(
                    "{name} path does not exist: {}",
                    path.display()
                )));
            }
        }
        if let Some(neg) = &self.negatives {
            if !neg.exists() {
                return Err(Error::Config(format!(
                    "negatives path does not exist: {}",
                    neg.display()
                )));
            }
        }
        if self.workers < 1 {
            return Err(Error::Config("workers must be >= 1".into()));
        }
        if self.batch_size < 1 {
            return Err(Error::Config("batch_size must be >= 1".into()));
        }
        if self.max_len < 4 {
            return Err(Error::Config("max_len must be >= 4".into()));
        }
        if self.k < 1 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Shared pipeline pieces
// ---------------------------------------------------------------------------

struct Corpus {
    queries: BTreeMap<String, String>,
    collection: BTreeMap<String, String>,
    qrels: Qrels,
}

struct Session {
    weights: Weights,
    vocab: Vocab,
    corpus: Corpus,
    pool: rayon::ThreadPool,
}

fn load_session(cfg: &ExperimentConfig, with_negatives: bool) -> Result<Session> {
    cfg.validate()?;
    let model_config = ModelConfig::load(&cfg.model_config)?;
    let weights = load_weights(&cfg.weights, &model_config)?;
    let vocab = Vocab::load(&cfg.vocab)?;

    let queries: BTreeMap<String, String> = load_tsv(&cfg.queries)?.into_iter().collect();
    let collection: BTreeMap<String, String> = load_tsv(&cfg.collection)?.into_iter().collect();
    let mut qrels = parse_qrels(&cfg.qrels)?;

    if with_negatives {
        if let Some(path) = &cfg.negatives {
            let negatives = parse_negatives(path)?;
            qrels.merge_negatives(&negatives)?;
        } else if cfg.easy_negatives > 0 {
            let universe: Vec<String> = collection.keys().cloned().collect();
            let negatives = sample_easy_negatives(&universe, &qrels, cfg.easy_negatives, cfg.seed)?;
            qrels.merge_negatives(&negatives)?;
        }
    }

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("worker pool: {e}")))?;

    Ok(Session {
        weights,
        vocab,
        corpus: Corpus {
            queries,
            collection,
            qrels,
        },
        pool,
    })
}

/// One (query, candidate) pair ready for the encoder, plus its grade.
struct Pair {
    qid: String,
    docid: String,
    grade: i8,
    input: SegmentedInput,
}

/// Build the scoring pairs: for every query in the queries file, every
/// document judged (or sampled) for it, in (qid, docid) order.
fn build_pairs(session: &Session, cfg: &ExperimentConfig) -> Result<Vec<Pair>> {
    let corpus = &session.corpus;
    // Inputs may never exceed the model's position table.
    let max_len = cfg
        .max_len
        .min(session.weights.config.max_position_embeddings);
    let mut pairs = Vec::new();
    for (qid, qtext) in &corpus.queries {
        let judged = corpus
            .qrels
            .docs(qid)
            .filter(|docs| !docs.is_empty())
            .ok_or_else(|| Error::Input(format!("empty candidate list for query {qid}")))?;
        for (docid, &grade) in judged {
            let dtext = corpus.collection.get(docid).ok_or_else(|| {
                Error::Input(format!("document {docid} (query {qid}) missing from collection"))
            })?;
            let input = build_pair(qtext, dtext, &session.vocab, max_len)
                .map_err(|e| Error::Input(format!("query {qid}, document {docid}: {e}")))?;
            pairs.push(Pair {
                qid: qid.clone(),
                docid: docid.clone(),
                grade,
                input,
            });
        }
    }
    Ok(pairs)
}

/// Score every pair in the worker pool, order preserved.
fn score_all(session: &Session, pairs: &[Pair], ablation: Option<&AblationSpec>) -> Result<Vec<f32>> {
    let weights = &session.weights;
    session.pool.install(|| {
        pairs
            .par_iter()
            .map(|p| {
                forward_score(&p.input, weights, ablation).map_err(|e| {
                    Error::Input(format!("query {}, document {}: {e}", p.qid, p.docid))
                })
            })
            .collect()
    })
}

/// Group scored pairs into a ranked run.
fn to_run(pairs: &[Pair], scores: &[f32]) -> Vec<RunEntry> {
    let mut per_query: BTreeMap<&str, Vec<(String, f32)>> = BTreeMap::new();
    for (p, &s) in pairs.iter().zip(scores) {
        per_query
            .entry(&p.qid)
            .or_default()
            .push((p.docid.clone(), s));
    }
    let mut run = Vec::new();
    for (qid, scored) in per_query {
        run.extend(rank_scored(qid, scored));
    }
    run
}

/// Write staged files into the output directory, atomically renaming
/// each file into place only after every write succeeded.
fn stage_outputs(out_dir: &Path, files: &[(&str, String)]) -> Result<Vec<PathBuf>> {
    std::fs::create_dir_all(out_dir)?;
    let staging = tempfile::Builder::new()
        .prefix(".staging-")
        .tempdir_in(out_dir)?;
    for (name, contents) in files {
        std::fs::write(staging.path().join(name), contents)?;
    }
    let mut finals = Vec::with_capacity(files.len());
    for (name, _) in files {
        let target = out_dir.join(name);
        std::fs::rename(staging.path().join(name), &target)?;
        finals.push(target);
    }
    Ok(finals)
}

fn metrics_csv(per_query: &[(String, f64)], mean: f64, k: usize) -> String {
    let mut out = format!("qid,ndcg@{k}\n");
    for (qid, v) in per_query {
        out.push_str(&format!("{qid},{v}\n"));
    }
    out.push_str(&format!("ALL,{mean}\n"));
    out
}

// ---------------------------------------------------------------------------
// score
// ---------------------------------------------------------------------------

/// Result summary of the baseline scoring command.
pub struct ScoreOutput {
    pub mean_ndcg: f64,
    pub per_query: Vec<(String, f64)>,
    pub files: Vec<PathBuf>,
}

/// Score all (query, judged candidate) pairs without ablation; write the
/// TREC run and the per-query nDCG report.
pub fn cmd_score(cfg: &ExperimentConfig) -> Result<ScoreOutput> {
    let session = load_session(cfg, false)?;
    let pairs = build_pairs(&session, cfg)?;
    let scores = score_all(&session, &pairs, None)?;
    let run = to_run(&pairs, &scores);
    let (per_query, mean) = evaluate_run(&run, &session.corpus.qrels, cfg.k)?;

    let files = stage_outputs(
        &cfg.output_dir,
        &[
            ("run.txt", format_run(&run, RUN_TAG)),
            ("metrics.csv", metrics_csv(&per_query, mean, cfg.k)),
        ],
    )?;
    Ok(ScoreOutput {
        mean_ndcg: mean,
        per_query,
        files,
    })
}

// ---------------------------------------------------------------------------
// ablate
// ---------------------------------------------------------------------------

/// One row of the ablation table.
pub struct AblateRow {
    pub spec: String,
    pub mean_ndcg: f64,
    pub t: Option<f64>,
    pub p: Option<f64>,
    pub significant: Option<bool>,
}

pub struct AblateOutput {
    pub baseline: f64,
    pub rows: Vec<AblateRow>,
    pub files: Vec<PathBuf>,
}

/// Which end of the layer stack a sweep grows from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepMode {
    /// Row for each l: layers `0..=l` ablated (cumulative from the input).
    FromBottom,
    /// Row for each l: layers `l..L` ablated.
    FromTop,
}

/// Score an ablation grid against the in-session baseline. Each row
/// reports mean nDCG@k plus a paired two-tailed t-test against the
/// baseline per-query values; the significance flag marks p <= 0.05.
/// A sweep direction expands to one spec per layer.
pub fn cmd_ablate(
    cfg: &ExperimentConfig,
    specs: &[String],
    sweep: Option<(&str, SweepMode)>,
) -> Result<AblateOutput> {
    let session = load_session(cfg, false)?;
    let model_config = &session.weights.config;

    let mut spec_texts: Vec<String> = specs.to_vec();
    if let Some((direction, mode)) = sweep {
        // The sweep owns the layer qualifier; only a bare direction is
        // accepted here.
        if direction.contains('@') {
            return Err(Error::Input(format!(
                "sweep direction \"{direction}\" must not carry qualifiers"
            )));
        }
        parse_spec(direction, model_config)?;
        for layer in 0..model_config.num_layers {
            let range = match mode {
                SweepMode::FromBottom => format!("0..{}", layer + 1),
                SweepMode::FromTop => format!("{layer}..{}", model_config.num_layers),
            };
            spec_texts.push(format!("{direction}@layers={range}"));
        }
    }

    let parsed: Vec<AblationSpec> = spec_texts
        .iter()
        .map(|s| parse_spec_auto(s, model_config))
        .collect::<Result<_>>()?;

    let pairs = build_pairs(&session, cfg)?;
    let baseline_scores = score_all(&session, &pairs, None)?;
    let baseline_run = to_run(&pairs, &baseline_scores);
    let (baseline_per_query, baseline_mean) =
        evaluate_run(&baseline_run, &session.corpus.qrels, cfg.k)?;
    let baseline_vec: Vec<f64> = baseline_per_query.iter().map(|(_, v)| *v).collect();

    let mut rows = Vec::with_capacity(parsed.len());
    for (text, spec) in spec_texts.iter().zip(&parsed) {
        let (per_query, mean) = if spec.is_empty() {
            (baseline_per_query.clone(), baseline_mean)
        } else {
            let scores = score_all(&session, &pairs, Some(spec))?;
            let run = to_run(&pairs, &scores);
            evaluate_run(&run, &session.corpus.qrels, cfg.k)?
        };
        let ablated_vec: Vec<f64> = per_query.iter().map(|(_, v)| *v).collect();
        let (t, p) = if spec.is_empty() {
            (None, None)
        } else {
            match paired_ttest(&baseline_vec, &ablated_vec) {
                Ok((t, p)) => (Some(t), Some(p)),
                // Identical metric vectors (or too few queries) leave
                // the test undefined; the row still reports the metric.
                Err(_) => (None, None),
            }
        };
        rows.push(AblateRow {
            spec: text.clone(),
            mean_ndcg: mean,
            t,
            p,
            significant: p.map(|p| p <= SIGNIFICANCE_LEVEL),
        });
    }

    let mut csv = String::from("spec,mean_ndcg,t,p,significant\n");
    csv.push_str(&format!("baseline,{baseline_mean},,,\n"));
    for row in &rows {
        let t = row.t.map(|v| v.to_string()).unwrap_or_default();
        let p = row.p.map(|v| v.to_string()).unwrap_or_default();
        let sig = row
            .significant
            .map(|s| s.to_string())
            .unwrap_or_default();
        csv.push_str(&format!(
            "{},{},{},{},{}\n",
            csv_quote(&row.spec),
            row.mean_ndcg,
            t,
            p,
            sig
        ));
    }
    let files = stage_outputs(&cfg.output_dir, &[("ablate.csv", csv)])?;

    Ok(AblateOutput {
        baseline: baseline_mean,
        rows,
        files,
    })
}

fn csv_quote(field: &str) -> String {
    if field.contains(',') || field.contains('"') {
        format!("\"{}\"", field.replace('"', "\"\""))
    } else {
        field.to_string()
    }
}

// ---------------------------------------------------------------------------
// heads
// ---------------------------------------------------------------------------

pub struct HeadsOutput {
    pub stats: Vec<HeadStat>,
    pub contrast: Option<Vec<ContrastRow>>,
    pub diagnostics: Vec<HeadDiagnostics>,
    pub pairs_scored: usize,
    pub files: Vec<PathBuf>,
}

/// The 25 part-to-part directions, in a fixed order.
pub fn all_directions() -> Vec<Direction> {
    let mut out = Vec::with_capacity(25);
    for target in Part::ALL {
        for source in Part::ALL {
            out.push(Direction {
                target,
                source: SourcePart::Part(source),
            });
        }
    }
    out
}

/// Per-pair analysis contribution computed on a worker.
struct PairAnalysis {
    stats: StatsAccumulator,
    embeddings: EmbeddingAccumulator,
    grade: i8,
    /// Q<-D and D<-Q masses per (layer * heads + head).
    qd_mass: Vec<f64>,
    dq_mass: Vec<f64>,
}

/// Trace every (query, candidate) pair including easy negatives and emit
/// the head statistics, class contrasts, attention histograms and the
/// matching-head diagnostics table.
pub fn cmd_heads(cfg: &ExperimentConfig) -> Result<HeadsOutput> {
    let session = load_session(cfg, true)?;
    let weights = &session.weights;
    let model_config = &weights.config;
    let pairs = build_pairs(&session, cfg)?;
    let directions = all_directions();

    let q_from_d = Direction {
        target: Part::Query,
        source: SourcePart::Part(Part::Doc),
    };
    let d_from_q = Direction {
        target: Part::Doc,
        source: SourcePart::Part(Part::Query),
    };

    // Chunked parallel map, sequential fold in pair order: memory stays
    // bounded by the chunk and the result does not depend on the worker
    // count.
    let mut stats = StatsAccumulator::new();
    let mut embeddings = EmbeddingAccumulator::new();
    let heads_total = model_config.num_layers * model_config.num_heads;
    let mut hist_qd: Vec<Histogram> = (0..heads_total)
        .map(|_| Histogram::new(cfg.bins))
        .collect::<Result<_>>()?;
    let mut hist_dq: Vec<Histogram> = (0..heads_total)
        .map(|_| Histogram::new(cfg.bins))
        .collect::<Result<_>>()?;

    for chunk in pairs.chunks(cfg.batch_size.max(1)) {
        let contributions: Vec<PairAnalysis> = session.pool.install(|| {
            chunk
                .par_iter()
                .map(|p| {
                    let (_, trace) = forward(&p.input, weights, None).map_err(|e| {
                        Error::Input(format!("query {}, document {}: {e}", p.qid, p.docid))
                    })?;
                    let mut pair_stats = StatsAccumulator::new();
                    pair_stats.add_trace(&trace, &p.input.parts, p.grade, &directions);
                    let mut pair_emb = EmbeddingAccumulator::new();
                    pair_emb.add_trace(&trace, &p.input.parts);
                    let qd = direction_mass(&trace, &p.input.parts, q_from_d)
                        .unwrap_or_else(|| vec![0.0; heads_total]);
                    let dq = direction_mass(&trace, &p.input.parts, d_from_q)
                        .unwrap_or_else(|| vec![0.0; heads_total]);
                    Ok(PairAnalysis {
                        stats: pair_stats,
                        embeddings: pair_emb,
                        grade: p.grade,
                        qd_mass: qd,
                        dq_mass: dq,
                    })
                })
                .collect::<Result<_>>()
        })?;
        for c in contributions {
            stats.merge(c.stats);
            embeddings.merge(c.embeddings);
            for (idx, (&qd, &dq)) in c.qd_mass.iter().zip(&c.dq_mass).enumerate() {
                hist_qd[idx].add(c.grade, qd);
                hist_dq[idx].add(c.grade, dq);
            }
        }
    }

    let stat_rows = stats.stats();

    // Contrast requires both classes to be populated; with no easy
    // negatives (or no relevant pairs) the columns are simply absent.
    let grades_present: std::collections::BTreeSet<i8> =
        stat_rows.iter().map(|s| s.grade).collect();
    let have_negatives = grades_present.contains(&EASY_NEGATIVE_GRADE);
    let have_relevant = cfg.relevant_grades.iter().any(|g| grades_present.contains(g));
    let contrast = if have_negatives && have_relevant {
        Some(class_contrast(
            &stat_rows,
            &cfg.relevant_grades,
            &[EASY_NEGATIVE_GRADE],
        )?)
    } else {
        None
    };

    let mean_embeddings = embeddings.finalize(cfg.min_qd_sample)?;
    let diagnostics = diagnostics_table(
        weights,
        &mean_embeddings,
        contrast.as_deref().unwrap_or(&[]),
    )?;

    // Serialize everything.
    let mut stats_csv = Vec::new();
    write_stats_csv(&mut stats_csv, &stat_rows)?;
    let mut stats_jsonl = Vec::new();
    write_stats_jsonl(&mut stats_jsonl, &stat_rows)?;
    let mut diag_csv = Vec::new();
    write_diagnostics_csv(&mut diag_csv, &diagnostics)?;
    let mut diag_jsonl = Vec::new();
    write_diagnostics_jsonl(&mut diag_jsonl, &diagnostics)?;

    let mut hist_entries = Vec::with_capacity(heads_total * 2);
    for layer in 0..model_config.num_layers {
        for head in 0..model_config.num_heads {
            let idx = layer * model_config.num_heads + head;
            hist_entries.push((q_from_d, layer, head, hist_qd[idx].clone()));
            hist_entries.push((d_from_q, layer, head, hist_dq[idx].clone()));
        }
    }
    let mut hist_csv = Vec::new();
    write_histogram_csv(&mut hist_csv, &hist_entries)?;

    let mut outputs: Vec<(&str, String)> = vec![
        ("stats.csv", String::from_utf8(stats_csv).unwrap()),
        ("stats.jsonl", String::from_utf8(stats_jsonl).unwrap()),
        ("histograms.csv", String::from_utf8(hist_csv).unwrap()),
        ("diagnostics.csv", String::from_utf8(diag_csv).unwrap()),
        ("diagnostics.jsonl", String::from_utf8(diag_jsonl).unwrap()),
    ];
    if let Some(rows) = &contrast {
        let mut contrast_csv = Vec::new();
        write_contrast_csv(&mut contrast_csv, rows)?;
        outputs.push(("contrast.csv", String::from_utf8(contrast_csv).unwrap()));
    }
    let files = stage_outputs(&cfg.output_dir, &outputs)?;

    Ok(HeadsOutput {
        stats: stat_rows,
        contrast,
        diagnostics,
        pairs_scored: pairs.len(),
        files,
    })
}

// ---------------------------------------------------------------------------
// negatives
// ---------------------------------------------------------------------------

/// Sample easy negatives for every judged query and write them as a
/// 4-column file with grade -1.
pub fn cmd_negatives(cfg: &ExperimentConfig) -> Result<(usize, Vec<PathBuf>)> {
    cfg.validate()?;
    let qrels = parse_qrels(&cfg.qrels)?;
    let collection: Vec<String> = load_tsv(&cfg.collection)?
        .into_iter()
        .map(|(id, _)| id)
        .collect();
    let negatives = sample_easy_negatives(&collection, &qrels, cfg.easy_negatives, cfg.seed)?;
    let count = negatives.num_entries();
    let files = stage_outputs(
        &cfg.output_dir,
        &[("negatives.txt", format_qrels(&negatives))],
    )?;
    Ok((count, files))
}
