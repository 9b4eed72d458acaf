//! WordPiece tokenization and assembly of the cross-encoder input with
//! its five-part span map: `[CLS] query [SEP] document [SEP]`.

use std::collections::HashMap;
use std::fmt;
use std::ops::Range;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Longest word (in chars) the WordPiece pass will attempt to split;
/// anything longer maps straight to `[UNK]`.
const MAX_CHARS_PER_WORD: usize = 100;

/// The five parts of a query-document input.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Part {
    Cls,
    Query,
    Sep1,
    Doc,
    Sep2,
}

impl Part {
    pub const ALL: [Part; 5] = [Part::Cls, Part::Query, Part::Sep1, Part::Doc, Part::Sep2];

    pub fn name(self) -> &'static str {
        match self {
            Part::Cls => "CLS",
            Part::Query => "Q",
            Part::Sep1 => "SEP1",
            Part::Doc => "D",
            Part::Sep2 => "SEP2",
        }
    }
}

impl fmt::Display for Part {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Part {
    type Err = Error;

    fn from_str(s: &str) -> Result<Part> {
        match s.to_ascii_uppercase().as_str() {
            "CLS" => Ok(Part::Cls),
            "Q" | "QUERY" => Ok(Part::Query),
            "SEP1" => Ok(Part::Sep1),
            "D" | "DOC" => Ok(Part::Doc),
            "SEP2" => Ok(Part::Sep2),
            other => Err(Error::Input(format!("unknown part name \"{other}\""))),
        }
    }
}

/// Half-open index ranges of the five parts; they tile `[0, len)` in
/// order CLS < Q < SEP1 < D < SEP2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PartSpans {
    pub cls: Range<usize>,
    pub query: Range<usize>,
    pub sep1: Range<usize>,
    pub doc: Range<usize>,
    pub sep2: Range<usize>,
}

impl PartSpans {
    pub fn span(&self, part: Part) -> Range<usize> {
        match part {
            Part::Cls => self.cls.clone(),
            Part::Query => self.query.clone(),
            Part::Sep1 => self.sep1.clone(),
            Part::Doc => self.doc.clone(),
            Part::Sep2 => self.sep2.clone(),
        }
    }

    pub fn len(&self) -> usize {
        self.sep2.end
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// Tokenized query-document pair plus the span map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SegmentedInput {
    /// Vocabulary ids, layout `[CLS] q... [SEP] d... [SEP]`.
    pub token_ids: Vec<u32>,
    /// 0 for CLS + query + SEP1, 1 for document + SEP2.
    pub type_ids: Vec<u8>,
    pub parts: PartSpans,
}

impl SegmentedInput {
    pub fn len(&self) -> usize {
        self.token_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.token_ids.is_empty()
    }
}

/// WordPiece vocabulary: one token per line, line number = id.
#[derive(Debug, Clone)]
pub struct Vocab {
    token_to_id: HashMap<String, u32>,
    size: usize,
    cls_id: u32,
    sep_id: u32,
    unk_id: u32,
    pad_id: u32,
    /// Lowercase input before lookup (uncased vocabularies).
    pub lowercase: bool,
}

impl Vocab {
    /// Build from the token list; `[CLS]`, `[SEP]`, `[UNK]` and `[PAD]`
    /// must all be present.
    pub fn new(tokens: Vec<String>) -> Result<Vocab> {
        if tokens.is_empty() {
            return Err(Error::Config("empty vocabulary".into()));
        }
        let size = tokens.len();
        let mut token_to_id = HashMap::with_capacity(size);
        for (i, tok) in tokens.into_iter().enumerate() {
            if token_to_id.insert(tok.clone(), i as u32).is_some() {
                return Err(Error::Config(format!(
                    "duplicate vocabulary token \"{tok}\" at line {}",
                    i + 1
                )));
            }
        }
        let special = |name: &str| -> Result<u32> {
            token_to_id
                .get(name)
                .copied()
                .ok_or_else(|| Error::Config(format!("vocabulary is missing {name}")))
        };
        Ok(Vocab {
            cls_id: special("[CLS]")?,
            sep_id: special("[SEP]")?,
            unk_id: special("[UNK]")?,
            pad_id: special("[PAD]")?,
            token_to_id,
            size,
            lowercase: true,
        })
    }

    /// Load a standard vocab.txt (one token per line, line number = id).
    pub fn load(path: impl AsRef<Path>) -> Result<Vocab> {
        let text = std::fs::read_to_string(path.as_ref())?;
        Vocab::new(text.lines().map(|l| l.trim_end().to_string()).collect())
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        self.size == 0
    }

    pub fn id(&self, token: &str) -> Option<u32> {
        self.token_to_id.get(token).copied()
    }

    pub fn cls_id(&self) -> u32 {
        self.cls_id
    }

    pub fn sep_id(&self) -> u32 {
        self.sep_id
    }

    pub fn unk_id(&self) -> u32 {
        self.unk_id
    }

    pub fn pad_id(&self) -> u32 {
        self.pad_id
    }
}

fn is_word_punctuation(ch: char) -> bool {
    // ASCII punctuation ranges (the BERT convention, which also treats
    // $ + < = > ^ ` | ~ as punctuation), plus the common general
    // punctuation blocks for non-ASCII text.
    let cp = ch as u32;
    (0x21..=0x2F).contains(&cp)
        || (0x3A..=0x40).contains(&cp)
        || (0x5B..=0x60).contains(&cp)
        || (0x7B..=0x7E).contains(&cp)
        || (0x00A1..=0x00BF).contains(&cp)
        || (0x2000..=0x206F).contains(&cp)
        || (0x3000..=0x303F).contains(&cp)
}

/// Split on whitespace; punctuation characters become standalone words.
fn basic_tokenize(text: &str) -> Vec<String> {
    let mut words = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_whitespace() {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
        } else if is_word_punctuation(ch) {
            if !current.is_empty() {
                words.push(std::mem::take(&mut current));
            }
            words.push(ch.to_string());
        } else {
            current.push(ch);
        }
    }
    if !current.is_empty() {
        words.push(current);
    }
    words
}

/// Greedy longest-match-first WordPiece split of a single word.
///
/// Continuation pieces carry the `##` prefix. A word that cannot be
/// covered completely maps to a single `[UNK]` id.
fn wordpiece_word(word: &str, vocab: &Vocab, out: &mut Vec<u32>) {
    let chars: Vec<char> = word.chars().collect();
    if chars.len() > MAX_CHARS_PER_WORD {
        out.push(vocab.unk_id());
        return;
    }
    let mut pieces = Vec::new();
    let mut start = 0;
    while start < chars.len() {
        let mut end = chars.len();
        let mut matched = None;
        while start < end {
            let mut candidate: String = if start > 0 { "##".into() } else { String::new() };
            candidate.extend(&chars[start..end]);
            if let Some(id) = vocab.id(&candidate) {
                matched = Some(id);
                break;
            }
            end -= 1;
        }
        match matched {
            Some(id) => {
                pieces.push(id);
                start = end;
            }
            None => {
                out.push(vocab.unk_id());
                return;
            }
        }
    }
    out.extend(pieces);
}

/// Tokenize free text to vocabulary ids: lowercase (when the vocab is
/// uncased), split on whitespace/punctuation, then greedy WordPiece.
pub fn wordpiece_tokenize(text: &str, vocab: &Vocab) -> Result<Vec<u32>> {
    if vocab.is_empty() {
        return Err(Error::Config("empty vocabulary".into()));
    }
    let text = if vocab.lowercase {
        text.to_lowercase()
    } else {
        text.to_string()
    };
    let mut ids = Vec::new();
    for word in basic_tokenize(&text) {
        wordpiece_word(&word, vocab, &mut ids);
    }
    Ok(ids)
}

/// Assemble `[CLS] query [SEP] doc [SEP]` with the five-part span map.
///
/// The document is truncated first to fit `max_len`; the query is only
/// truncated when the document alone cannot absorb the overflow (it is
/// always left at least one token).
pub fn build_pair(query: &str, doc: &str, vocab: &Vocab, max_len: usize) -> Result<SegmentedInput> {
    if max_len < 4 {
        return Err(Error::Input(format!(
            "max_len {max_len} leaves no room for [CLS] q [SEP] d [SEP]"
        )));
    }
    let mut q_ids = wordpiece_tokenize(query, vocab)?;
    let mut d_ids = wordpiece_tokenize(doc, vocab)?;
    if q_ids.is_empty() {
        return Err(Error::Input(format!(
            "query tokenized to nothing: {query:?}"
        )));
    }
    if d_ids.is_empty() {
        return Err(Error::Input(format!(
            "document tokenized to nothing: {doc:?}"
        )));
    }

    let budget = max_len - 3; // CLS + two SEPs
    if q_ids.len() + d_ids.len() > budget {
        let q_keep = q_ids.len().min(budget.saturating_sub(1)).max(1);
        q_ids.truncate(q_keep);
        let d_keep = budget - q_ids.len();
        if d_keep == 0 {
            return Err(Error::Input(format!(
                "document truncated to nothing for query {query:?} at max_len {max_len}"
            )));
        }
        d_ids.truncate(d_keep);
    }

    let q_len = q_ids.len();
    let d_len = d_ids.len();
    let mut token_ids = Vec::with_capacity(q_len + d_len + 3);
    token_ids.push(vocab.cls_id());
    token_ids.extend_from_slice(&q_ids);
    token_ids.push(vocab.sep_id());
    token_ids.extend_from_slice(&d_ids);
    token_ids.push(vocab.sep_id());

    let mut type_ids = vec![0u8; q_len + 2];
    type_ids.extend(vec![1u8; d_len + 1]);

    let parts = PartSpans {
        cls: 0..1,
        query: 1..1 + q_len,
        sep1: 1 + q_len..2 + q_len,
        doc: 2 + q_len..2 + q_len + d_len,
        sep2: 2 + q_len + d_len..3 + q_len + d_len,
    };
    Ok(SegmentedInput {
        token_ids,
        type_ids,
        parts,
    })
}
