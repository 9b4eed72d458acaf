//! TREC-format corpus handling, easy-negative sampling, nDCG@k
//! evaluation and paired significance testing.

mod stats;

pub use stats::paired_ttest;

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Relevance grade assigned to sampled easy negatives.
pub const EASY_NEGATIVE_GRADE: i8 = -1;

/// Relevance judgments: query id -> doc id -> grade.
///
/// Judged grades are 0..=3; grade -1 marks synthesized easy negatives
/// and never appears in parsed qrels files.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Qrels {
    by_query: BTreeMap<String, BTreeMap<String, i8>>,
}

impl Qrels {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, qid: impl Into<String>, docid: impl Into<String>, grade: i8) {
        self.by_query
            .entry(qid.into())
            .or_default()
            .insert(docid.into(), grade);
    }

    pub fn grade(&self, qid: &str, docid: &str) -> Option<i8> {
        self.by_query.get(qid).and_then(|m| m.get(docid)).copied()
    }

    /// Query ids in sorted order.
    pub fn queries(&self) -> impl Iterator<Item = &str> {
        self.by_query.keys().map(|s| s.as_str())
    }

    pub fn docs(&self, qid: &str) -> Option<&BTreeMap<String, i8>> {
        self.by_query.get(qid)
    }

    pub fn num_queries(&self) -> usize {
        self.by_query.len()
    }

    pub fn num_entries(&self) -> usize {
        self.by_query.values().map(|m| m.len()).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.by_query.is_empty()
    }

    /// Merge synthesized easy negatives into this judgment set. Every
    /// added entry must carry grade -1 and must not collide with a
    /// judged document.
    pub fn merge_negatives(&mut self, negatives: &Qrels) -> Result<()> {
        for (qid, docs) in &negatives.by_query {
            for (docid, &grade) in docs {
                if grade != EASY_NEGATIVE_GRADE {
                    return Err(Error::Eval(format!(
                        "negative entry ({qid}, {docid}) has grade {grade}, expected -1"
                    )));
                }
                if self.grade(qid, docid).is_some() {
                    return Err(Error::Eval(format!(
                        "negative entry ({qid}, {docid}) collides with a judged document"
                    )));
                }
            }
        }
        for (qid, docs) in &negatives.by_query {
            for (docid, &grade) in docs {
                self.insert(qid.clone(), docid.clone(), grade);
            }
        }
        Ok(())
    }
}

/// Parse TREC 4-column qrels: `qid iter docid grade`, whitespace
/// separated, the iteration field ignored. Grades must lie in 0..=3;
/// negative grades are rejected (-1 is reserved for synthesized
/// negatives). Duplicate (qid, docid) lines keep the last grade.
pub fn parse_qrels(path: impl AsRef<Path>) -> Result<Qrels> {
    let text = std::fs::read_to_string(path.as_ref())?;
    parse_qrels_str(&text)
}

pub fn parse_qrels_str(text: &str) -> Result<Qrels> {
    let mut qrels = Qrels::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                pos: lineno + 1,
                msg: format!("expected 4 qrels fields, got {}", fields.len()),
            });
        }
        let grade: i32 = fields[3].parse().map_err(|_| Error::Parse {
            pos: lineno + 1,
            msg: format!("bad grade \"{}\"", fields[3]),
        })?;
        if !(0..=3).contains(&grade) {
            return Err(Error::Parse {
                pos: lineno + 1,
                msg: format!("grade {grade} outside 0..=3 (negative grades are reserved)"),
            });
        }
        qrels.insert(fields[0], fields[2], grade as i8);
    }
    Ok(qrels)
}

/// Parse a negatives file: same 4-column layout but every grade must be
/// exactly -1 (the output of the `negatives` sampler).
pub fn parse_negatives(path: impl AsRef<Path>) -> Result<Qrels> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut qrels = Qrels::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 4 {
            return Err(Error::Parse {
                pos: lineno + 1,
                msg: format!("expected 4 fields, got {}", fields.len()),
            });
        }
        if fields[3] != "-1" {
            return Err(Error::Parse {
                pos: lineno + 1,
                msg: format!("negatives file must carry grade -1, got \"{}\"", fields[3]),
            });
        }
        qrels.insert(fields[0], fields[2], EASY_NEGATIVE_GRADE);
    }
    Ok(qrels)
}

/// Serialize qrels (or negatives) back to the 4-column format.
pub fn format_qrels(qrels: &Qrels) -> String {
    let mut out = String::new();
    for (qid, docs) in &qrels.by_query {
        for (docid, grade) in docs {
            let _ = writeln!(out, "{qid} 0 {docid} {grade}");
        }
    }
    out
}

/// Sample `per_query` easy negatives for every judged query: distinct
/// documents drawn uniformly without replacement from `collection`,
/// excluding that query's judged documents. Entries carry grade -1. The
/// sample is fully determined by `seed` (and the collection order).
pub fn sample_easy_negatives(
    collection: &[String],
    qrels: &Qrels,
    per_query: usize,
    seed: u64,
) -> Result<Qrels> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut additions = Qrels::new();
    for (qid, judged) in &qrels.by_query {
        let eligible: Vec<&String> = collection
            .iter()
            .filter(|d| !judged.contains_key(d.as_str()))
            .collect();
        if eligible.len() < per_query {
            return Err(Error::Eval(format!(
                "query {qid}: only {} unjudged documents available, need {per_query}",
                eligible.len()
            )));
        }
        // Partial Fisher-Yates over the eligible pool.
        let mut idx: Vec<usize> = (0..eligible.len()).collect();
        for i in 0..per_query {
            let j = rng.gen_range(i..idx.len());
            idx.swap(i, j);
            additions.insert(qid.clone(), eligible[idx[i]].clone(), EASY_NEGATIVE_GRADE);
        }
    }
    Ok(additions)
}

// ---------------------------------------------------------------------------
// Runs
// ---------------------------------------------------------------------------

/// One ranked retrieval result.
#[derive(Debug, Clone, PartialEq)]
pub struct RunEntry {
    pub qid: String,
    pub docid: String,
    pub score: f32,
    /// 1-based rank after sorting by descending score, ties broken by
    /// ascending doc id.
    pub rank: usize,
}

/// Rank scored candidates of one query: descending score, ties broken by
/// ascending doc id, ranks 1..=n.
pub fn rank_scored(qid: &str, mut scored: Vec<(String, f32)>) -> Vec<RunEntry> {
    scored.sort_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| a.0.cmp(&b.0))
    });
    scored
        .into_iter()
        .enumerate()
        .map(|(i, (docid, score))| RunEntry {
            qid: qid.to_string(),
            docid,
            score,
            rank: i + 1,
        })
        .collect()
}

/// Serialize a run in the TREC 6-column format:
/// `qid Q0 docid rank score tag`.
pub fn format_run(entries: &[RunEntry], tag: &str) -> String {
    let mut out = String::new();
    for e in entries {
        let _ = writeln!(out, "{} Q0 {} {} {} {}", e.qid, e.docid, e.rank, e.score, tag);
    }
    out
}

/// Parse a TREC 6-column run file. Entries are re-ranked per query from
/// their scores (descending, doc-id tie-break) so the rank invariant
/// holds regardless of what the file claimed.
pub fn parse_run(path: impl AsRef<Path>) -> Result<Vec<RunEntry>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut per_query: BTreeMap<String, Vec<(String, f32)>> = BTreeMap::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.len() != 6 {
            return Err(Error::Parse {
                pos: lineno + 1,
                msg: format!("expected 6 run fields, got {}", fields.len()),
            });
        }
        let score: f32 = fields[4].parse().map_err(|_| Error::Parse {
            pos: lineno + 1,
            msg: format!("bad score \"{}\"", fields[4]),
        })?;
        if !score.is_finite() {
            return Err(Error::Parse {
                pos: lineno + 1,
                msg: format!("non-finite score \"{}\"", fields[4]),
            });
        }
        per_query
            .entry(fields[0].to_string())
            .or_default()
            .push((fields[2].to_string(), score));
    }
    let mut entries = Vec::new();
    for (qid, scored) in per_query {
        entries.extend(rank_scored(&qid, scored));
    }
    Ok(entries)
}

// ---------------------------------------------------------------------------
// nDCG
// ---------------------------------------------------------------------------

fn gain(grade: i8) -> f64 {
    if grade <= 0 {
        // Grade 0 gives 2^0 - 1 = 0; negative grades (easy negatives)
        // clamp to 0 as well.
        0.0
    } else {
        (2f64).powi(grade as i32) - 1.0
    }
}

fn dcg(grades: &[i8], k: usize) -> f64 {
    grades
        .iter()
        .take(k)
        .enumerate()
        .map(|(i, &g)| gain(g) / ((i + 2) as f64).log2())
        .sum()
}

/// nDCG@k with gain `2^r - 1` (grades below 0 clamp to gain 0) and
/// discount `1 / log2(rank + 1)`. The ideal ordering sorts the grade
/// multiset descending. Returns 0 when the ideal DCG is 0.
///
/// ```
/// use matchprobe::ireval::ndcg_at_k;
///
/// assert_eq!(ndcg_at_k(&[3, 2, 0], &[3, 2, 0], 10), 1.0);
/// let v = ndcg_at_k(&[0, 3], &[3, 0], 2);
/// assert!((v - 0.6309).abs() < 1e-4);
/// ```
pub fn ndcg_at_k(ranked: &[i8], ideal: &[i8], k: usize) -> f64 {
    debug_assert!(k >= 1);
    let mut ideal_sorted = ideal.to_vec();
    ideal_sorted.sort_unstable_by(|a, b| b.cmp(a));
    let idcg = dcg(&ideal_sorted, k);
    if idcg == 0.0 {
        return 0.0;
    }
    dcg(ranked, k) / idcg
}

/// Per-query nDCG@k of a run plus the arithmetic mean.
///
/// Retrieved documents without a judgment count as grade 0; the ideal
/// ranking is built from every judged document of the query. Every run
/// query must be present in the qrels.
pub fn evaluate_run(
    run: &[RunEntry],
    qrels: &Qrels,
    k: usize,
) -> Result<(Vec<(String, f64)>, f64)> {
    let mut per_query: BTreeMap<&str, Vec<&RunEntry>> = BTreeMap::new();
    for e in run {
        per_query.entry(&e.qid).or_default().push(e);
    }
    let mut results = Vec::with_capacity(per_query.len());
    for (qid, mut entries) in per_query {
        let judged = qrels
            .docs(qid)
            .ok_or_else(|| Error::Eval(format!("query {qid} absent from qrels")))?;
        entries.sort_by_key(|e| e.rank);
        let ranked: Vec<i8> = entries
            .iter()
            .map(|e| judged.get(&e.docid).copied().unwrap_or(0))
            .collect();
        let ideal: Vec<i8> = judged.values().copied().collect();
        results.push((qid.to_string(), ndcg_at_k(&ranked, &ideal, k)));
    }
    let mean = if results.is_empty() {
        0.0
    } else {
        results.iter().map(|(_, v)| v).sum::<f64>() / results.len() as f64
    };
    Ok((results, mean))
}

// ---------------------------------------------------------------------------
// Corpus files
// ---------------------------------------------------------------------------

/// Load a tab-separated `id<TAB>text` file (queries or collection),
/// preserving file order. Duplicate ids are rejected.
pub fn load_tsv(path: impl AsRef<Path>) -> Result<Vec<(String, String)>> {
    let text = std::fs::read_to_string(path.as_ref())?;
    let mut out = Vec::new();
    let mut seen = std::collections::BTreeSet::new();
    for (lineno, line) in text.lines().enumerate() {
        if line.is_empty() {
            continue;
        }
        let (id, body) = line.split_once('\t').ok_or_else(|| Error::Parse {
            pos: lineno + 1,
            msg: "expected id<TAB>text".into(),
        })?;
        if !seen.insert(id.to_string()) {
            return Err(Error::Parse {
                pos: lineno + 1,
                msg: format!("duplicate id \"{id}\""),
            });
        }
        out.push((id.to_string(), body.to_string()));
    }
    Ok(out)
}
