//! Ablation specifications: which attention directions to suppress, at
//! which layers and heads, compiled into boolean masks over the token
//! grid of a segmented input.
//!
//! A direction is an ordered pair (target part, source part): "tokens in
//! the target part attending to tokens in the source part". Masked cells
//! are removed from the attention softmax, so the remaining mass
//! renormalizes over the surviving positions.

use std::collections::BTreeSet;
use std::fmt;
use std::ops::Range;

use serde::Deserialize;

use crate::encoder::ModelConfig;
use crate::error::{Error, Result};
use crate::segment::{Part, PartSpans};

/// The attended side of a direction: one part, or every column.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SourcePart {
    Part(Part),
    All,
}

impl fmt::Display for SourcePart {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourcePart::Part(p) => write!(f, "{p}"),
            SourcePart::All => write!(f, "ALL"),
        }
    }
}

/// One attention direction: `target <- source`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Direction {
    /// The attending side (rows of the attention matrix).
    pub target: Part,
    /// The attended side (columns), or ALL.
    pub source: SourcePart,
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}<-{}", self.target, self.source)
    }
}

/// Heads an entry applies to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum HeadSet {
    All,
    Subset(BTreeSet<usize>),
}

impl HeadSet {
    pub fn contains(&self, head: usize) -> bool {
        match self {
            HeadSet::All => true,
            HeadSet::Subset(s) => s.contains(&head),
        }
    }
}

/// One spec entry: a direction suppressed over a half-open layer range
/// and a head set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AblationEntry {
    pub direction: Direction,
    pub layers: Range<usize>,
    pub heads: HeadSet,
}

impl AblationEntry {
    fn matches(&self, layer: usize, head: usize) -> bool {
        self.layers.contains(&layer) && self.heads.contains(head)
    }
}

impl fmt::Display for AblationEntry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.direction)?;
        write!(f, "@layers={}..{}", self.layers.start, self.layers.end)?;
        match &self.heads {
            HeadSet::All => write!(f, "@heads=all"),
            HeadSet::Subset(s) => {
                let list: Vec<String> = s.iter().map(|h| h.to_string()).collect();
                write!(f, "@heads={}", list.join(","))
            }
        }
    }
}

/// A validated set of ablation entries. The empty spec is a no-op.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct AblationSpec {
    entries: Vec<AblationEntry>,
}

impl AblationSpec {
    pub fn empty() -> Self {
        AblationSpec::default()
    }

    /// Validate entries against the model bounds. Out-of-range layers or
    /// heads are rejected here, never at mask time.
    pub fn new(entries: Vec<AblationEntry>, config: &ModelConfig) -> Result<Self> {
        for e in &entries {
            if e.layers.start > e.layers.end || e.layers.end > config.num_layers {
                return Err(Error::Input(format!(
                    "layer range {}..{} out of bounds for a {}-layer model (entry {})",
                    e.layers.start, e.layers.end, config.num_layers, e.direction
                )));
            }
            if let HeadSet::Subset(heads) = &e.heads {
                for &h in heads {
                    if h >= config.num_heads {
                        return Err(Error::Input(format!(
                            "head {h} out of bounds for a {}-head model (entry {})",
                            config.num_heads, e.direction
                        )));
                    }
                }
            }
        }
        Ok(AblationSpec { entries })
    }

    pub fn entries(&self) -> &[AblationEntry] {
        &self.entries
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Quick check used by the forward pass to skip mask generation.
    pub fn active_at(&self, layer: usize) -> bool {
        self.entries.iter().any(|e| e.layers.contains(&layer))
    }
}

impl fmt::Display for AblationSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.entries.iter().map(|e| e.to_string()).collect();
        write!(f, "{}", parts.join(";"))
    }
}

/// Square boolean matrix; `true` marks a suppressed attention cell.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoolMat {
    len: usize,
    data: Vec<bool>,
}

impl BoolMat {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn at(&self, i: usize, j: usize) -> bool {
        self.data[i * self.len + j]
    }

    pub fn row(&self, i: usize) -> &[bool] {
        &self.data[i * self.len..(i + 1) * self.len]
    }

    pub fn any(&self) -> bool {
        self.data.iter().any(|&b| b)
    }
}

/// Compile the mask for one (layer, head): cell (i, j) is masked iff some
/// entry matches the layer and head, `i` lies in the entry's target span
/// and `j` in its source span (ALL source = every column).
pub fn compile_mask(spec: &AblationSpec, parts: &PartSpans, layer: usize, head: usize) -> BoolMat {
    let len = parts.len();
    let mut data = vec![false; len * len];
    for entry in &spec.entries {
        if !entry.matches(layer, head) {
            continue;
        }
        let rows = parts.span(entry.direction.target);
        let cols: Range<usize> = match entry.direction.source {
            SourcePart::Part(p) => parts.span(p),
            SourcePart::All => 0..len,
        };
        for i in rows {
            for j in cols.clone() {
                data[i * len + j] = true;
            }
        }
    }
    BoolMat { len, data }
}

// ---------------------------------------------------------------------------
// Text grammar
// ---------------------------------------------------------------------------

/// Parse the textual spec grammar:
///
/// ```text
/// TARGET<-SOURCE[@layers=a..b][@heads=h1,h2|@heads=all]
/// ```
///
/// Entries are `;`-separated; part names are CLS, Q, SEP1, D, SEP2 and
/// ALL (source only), case-insensitive. Omitted qualifiers mean all
/// layers / all heads. The empty string parses to the empty (no-op) spec.
///
/// ```
/// use matchprobe::ablation::parse_spec;
/// use matchprobe::fixtures::tiny_config;
///
/// let config = tiny_config();
/// let spec = parse_spec("D<-Q@layers=0..1;CLS<-ALL", &config).unwrap();
/// assert_eq!(spec.entries().len(), 2);
/// assert!(parse_spec("X<-Q", &config).is_err());
/// ```
pub fn parse_spec(text: &str, config: &ModelConfig) -> Result<AblationSpec> {
    let mut entries = Vec::new();
    let mut offset = 0usize;
    for chunk in text.split(';') {
        let trimmed = chunk.trim();
        if !trimmed.is_empty() {
            let local = chunk.len() - chunk.trim_start().len();
            entries.push(parse_entry(trimmed, offset + local, config)?);
        }
        offset += chunk.len() + 1;
    }
    AblationSpec::new(entries, config)
}

fn parse_entry(entry: &str, pos: usize, config: &ModelConfig) -> Result<AblationEntry> {
    let err = |pos: usize, msg: String| Error::Parse { pos, msg };

    let arrow = entry
        .find("<-")
        .ok_or_else(|| err(pos, format!("expected TARGET<-SOURCE in \"{entry}\"")))?;
    let target_str = entry[..arrow].trim();
    let rest = &entry[arrow + 2..];
    let mut qualifier_split = rest.split('@');
    let source_str = qualifier_split.next().unwrap_or("").trim();

    let target: Part = target_str
        .parse()
        .map_err(|_| err(pos, format!("unknown target part \"{target_str}\"")))?;
    let source = if source_str.eq_ignore_ascii_case("all") {
        SourcePart::All
    } else {
        SourcePart::Part(
            source_str
                .parse()
                .map_err(|_| err(pos + arrow + 2, format!("unknown source part \"{source_str}\"")))?,
        )
    };

    let mut layers = 0..config.num_layers;
    let mut heads = HeadSet::All;
    let mut qual_pos = pos + arrow + 2 + source_str.len();
    for qual in qualifier_split {
        let q = qual.trim();
        if let Some(range) = q.strip_prefix("layers=") {
            let (a, b) = range
                .split_once("..")
                .ok_or_else(|| err(qual_pos, format!("malformed layer range \"{range}\" (want a..b)")))?;
            let start: usize = a
                .trim()
                .parse()
                .map_err(|_| err(qual_pos, format!("bad layer bound \"{a}\"")))?;
            let end: usize = b
                .trim()
                .parse()
                .map_err(|_| err(qual_pos, format!("bad layer bound \"{b}\"")))?;
            layers = start..end;
        } else if let Some(list) = q.strip_prefix("heads=") {
            if list.trim().eq_ignore_ascii_case("all") {
                heads = HeadSet::All;
            } else {
                let mut set = BTreeSet::new();
                for item in list.split(',') {
                    let h: usize = item
                        .trim()
                        .parse()
                        .map_err(|_| err(qual_pos, format!("bad head index \"{item}\"")))?;
                    set.insert(h);
                }
                heads = HeadSet::Subset(set);
            }
        } else {
            return Err(err(qual_pos, format!("unknown qualifier \"@{q}\"")));
        }
        qual_pos += qual.len() + 1;
    }

    Ok(AblationEntry {
        direction: Direction { target, source },
        layers,
        heads,
    })
}

// ---------------------------------------------------------------------------
// JSON form
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct JsonEntry {
    target: String,
    source: String,
    #[serde(default)]
    layers: Option<[usize; 2]>,
    #[serde(default)]
    heads: Option<JsonHeads>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum JsonHeads {
    Keyword(String),
    List(Vec<usize>),
}

/// Parse the JSON spec form: an array of entry objects, e.g.
/// `[{"target":"Q","source":"D","layers":[0,6],"heads":[3]}]`.
/// `layers` and `heads` are optional (default: all); `heads` also
/// accepts the string `"all"`.
pub fn parse_spec_json(text: &str, config: &ModelConfig) -> Result<AblationSpec> {
    let raw: Vec<JsonEntry> = serde_json::from_str(text)
        .map_err(|e| Error::Parse {
            pos: e.column(),
            msg: format!("invalid ablation JSON: {e}"),
        })?;
    let mut entries = Vec::with_capacity(raw.len());
    for (i, je) in raw.into_iter().enumerate() {
        let target: Part = je.target.parse().map_err(|_| Error::Parse {
            pos: i,
            msg: format!("unknown target part \"{}\" in entry {i}", je.target),
        })?;
        let source = if je.source.eq_ignore_ascii_case("all") {
            SourcePart::All
        } else {
            SourcePart::Part(je.source.parse().map_err(|_| Error::Parse {
                pos: i,
                msg: format!("unknown source part \"{}\" in entry {i}", je.source),
            })?)
        };
        let layers = match je.layers {
            Some([a, b]) => a..b,
            None => 0..config.num_layers,
        };
        let heads = match je.heads {
            None => HeadSet::All,
            Some(JsonHeads::Keyword(kw)) if kw.eq_ignore_ascii_case("all") => HeadSet::All,
            Some(JsonHeads::Keyword(kw)) => {
                return Err(Error::Parse {
                    pos: i,
                    msg: format!("bad heads value \"{kw}\" in entry {i}"),
                })
            }
            Some(JsonHeads::List(list)) => HeadSet::Subset(list.into_iter().collect()),
        };
        entries.push(AblationEntry {
            direction: Direction { target, source },
            layers,
            heads,
        });
    }
    AblationSpec::new(entries, config)
}

/// Parse either form: a leading `[` selects the JSON array grammar.
pub fn parse_spec_auto(text: &str, config: &ModelConfig) -> Result<AblationSpec> {
    if text.trim_start().starts_with('[') {
        parse_spec_json(text, config)
    } else {
        parse_spec(text, config)
    }
}
