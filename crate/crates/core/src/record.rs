//! Domain types shared by every stage of the pipeline: attribute-value pairs,
//! product records, normalization and the canonical JSONL record format.

use std::collections::HashSet;
use std::fmt;
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Separator between attribute-value segments in a target string.
pub const PAIR_SEPARATOR: char = '|';
/// Separator between value and attribute in the word-sequence format.
pub const FIELD_SEPARATOR: char = ';';

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("record `{0}` has an empty title")]
    EmptyTitle(String),
    #[error("record `{0}` has no attribute-value pairs")]
    NoPairs(String),
    #[error("line {line}: {source}")]
    Json {
        line: usize,
        #[source]
        source: serde_json::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Text normalization applied before any exact-match comparison.
///
/// Trims, collapses internal whitespace runs to a single space and, unless
/// `case_sensitive` is set, lowercases.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Normalizer {
    pub case_sensitive: bool,
}

impl Normalizer {
    pub const fn new(case_sensitive: bool) -> Self {
        Self { case_sensitive }
    }

    pub fn apply(&self, text: &str) -> String {
        let mut out = String::with_capacity(text.len());
        for (i, word) in text.split_whitespace().enumerate() {
            if i > 0 {
                out.push(' ');
            }
            if self.case_sensitive {
                out.push_str(word);
            } else {
                out.extend(word.chars().map(lower_char));
            }
        }
        out
    }

    pub fn pair(&self, pair: &AvPair) -> AvPair {
        AvPair {
            attribute: self.apply(&pair.attribute),
            value: self.apply(&pair.value),
        }
    }
}

// Characters whose lowercase form expands to several code points are kept
// as-is so normalization never grows the character count.
fn lower_char(c: char) -> char {
    let mut lower = c.to_lowercase();
    match (lower.next(), lower.next()) {
        (Some(l), None) => l,
        _ => c,
    }
}

/// Normalizes with the default (case-insensitive) settings.
pub fn normalize(text: &str) -> String {
    Normalizer::default().apply(text)
}

/// Collapses whitespace without touching case. Used when rendering targets.
pub fn collapse_whitespace(text: &str) -> String {
    Normalizer::new(true).apply(text)
}

/// An (attribute, value) pair.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct AvPair {
    pub attribute: String,
    pub value: String,
}

impl AvPair {
    pub fn new(attribute: impl Into<String>, value: impl Into<String>) -> Self {
        Self {
            attribute: attribute.into(),
            value: value.into(),
        }
    }

    /// Reason this pair cannot be used as gold data, if any.
    pub fn ingestion_problem(&self) -> Option<&'static str> {
        let reserved = |s: &str| s.contains(PAIR_SEPARATOR) || s.contains(FIELD_SEPARATOR);
        if self.attribute.trim().is_empty() {
            Some("empty attribute")
        } else if self.value.trim().is_empty() {
            Some("empty value")
        } else if reserved(&self.attribute) || reserved(&self.value) {
            Some("contains a reserved separator (`|` or `;`)")
        } else {
            None
        }
    }
}

impl fmt::Display for AvPair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.attribute, self.value)
    }
}

/// Keeps the first occurrence of every normalized pair, in input order.
/// The returned pairs are normalized.
pub fn dedup_pairs(pairs: &[AvPair], norm: &Normalizer) -> Vec<AvPair> {
    let mut seen = HashSet::with_capacity(pairs.len());
    pairs
        .iter()
        .map(|p| norm.pair(p))
        .filter(|p| seen.insert(p.clone()))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Cardinality {
    Single,
    Multi,
}

impl fmt::Display for Cardinality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Cardinality::Single => "single",
            Cardinality::Multi => "multi",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
pub enum Paradigm {
    /// `value ; attribute | ...`
    #[value(name = "word")]
    #[serde(rename = "word")]
    WordSequence,
    /// `start end attribute | ...`
    #[value(name = "positional")]
    #[serde(rename = "positional")]
    PositionalSequence,
}

/// One product title with its gold attribute-value pairs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProductRecord {
    pub id: String,
    pub title: String,
    pub pairs: Vec<AvPair>,
}

impl ProductRecord {
    /// Builds a record, dropping later pairs that normalize to an earlier one.
    /// Pair text is kept as given.
    pub fn new(
        id: impl Into<String>,
        title: impl Into<String>,
        pairs: Vec<AvPair>,
        norm: &Normalizer,
    ) -> Result<Self, RecordError> {
        let id = id.into();
        let title = title.into();
        if title.trim().is_empty() {
            return Err(RecordError::EmptyTitle(id));
        }
        let mut seen = HashSet::with_capacity(pairs.len());
        let pairs = pairs
            .into_iter()
            .filter(|p| seen.insert(norm.pair(p)))
            .collect();
        Ok(Self { id, title, pairs })
    }

    pub fn cardinality(&self) -> Result<Cardinality, RecordError> {
        match self.pairs.len() {
            0 => Err(RecordError::NoPairs(self.id.clone())),
            1 => Ok(Cardinality::Single),
            _ => Ok(Cardinality::Multi),
        }
    }
}

/// Free-function form of [`ProductRecord::cardinality`].
pub fn cardinality(record: &ProductRecord) -> Result<Cardinality, RecordError> {
    record.cardinality()
}

/// Zero-padded sequence id used when an input line carries no `id`.
pub fn synthesize_id(index: usize) -> String {
    format!("{index:08}")
}

/// A record line as it appears on disk, before validation.
#[derive(Debug, Deserialize)]
struct RawRecordLine {
    #[serde(default)]
    id: Option<String>,
    title: String,
    #[serde(default)]
    pairs: Vec<AvPair>,
}

/// Streams validated [`ProductRecord`]s out of a JSONL reader.
///
/// Pairs with empty fields or reserved separators are dropped with a warning,
/// as are records left without any pair.
pub struct RecordReader<R> {
    lines: std::io::Lines<R>,
    line_no: usize,
    index: usize,
    norm: Normalizer,
}

impl<R: BufRead> RecordReader<R> {
    pub fn new(reader: R, norm: Normalizer) -> Self {
        Self {
            lines: reader.lines(),
            line_no: 0,
            index: 0,
            norm,
        }
    }

    fn next_record(&mut self) -> Option<Result<ProductRecord, RecordError>> {
        loop {
            let line = match self.lines.next()? {
                Ok(line) => line,
                Err(e) => return Some(Err(e.into())),
            };
            self.line_no += 1;
            if line.trim().is_empty() {
                continue;
            }
            let index = self.index;
            self.index += 1;
            let raw: RawRecordLine = match serde_json::from_str(&line) {
                Ok(raw) => raw,
                Err(source) => {
                    return Some(Err(RecordError::Json {
                        line: self.line_no,
                        source,
                    }))
                }
            };
            let id = raw.id.unwrap_or_else(|| synthesize_id(index));
            let mut pairs = Vec::with_capacity(raw.pairs.len());
            for pair in raw.pairs {
                match pair.ingestion_problem() {
                    Some(problem) => log::warn!("record {id}: dropping pair {pair}: {problem}"),
                    None => pairs.push(pair),
                }
            }
            if pairs.is_empty() {
                log::warn!("record {id}: no usable pairs, record dropped");
                continue;
            }
            return Some(ProductRecord::new(id, raw.title, pairs, &self.norm));
        }
    }
}

impl<R: BufRead> Iterator for RecordReader<R> {
    type Item = Result<ProductRecord, RecordError>;

    fn next(&mut self) -> Option<Self::Item> {
        self.next_record()
    }
}

pub fn read_records<R: BufRead>(reader: R, norm: Normalizer) -> Result<Vec<ProductRecord>, RecordError> {
    RecordReader::new(reader, norm).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn normalize_examples() {
        assert_eq!(normalize("  Brand  Name "), "brand name");
        assert_eq!(normalize(""), "");
        assert_eq!(normalize("WY006"), "wy006");
        assert_eq!(Normalizer::new(true).apply(" WY006\t x"), "WY006 x");
    }

    #[test]
    fn cardinality_classes() {
        let norm = Normalizer::default();
        let one = ProductRecord::new("a", "t", vec![AvPair::new("gender", "women")], &norm).unwrap();
        assert_eq!(cardinality(&one).unwrap(), Cardinality::Single);
        let four = ProductRecord::new(
            "b",
            "t",
            (0..4).map(|i| AvPair::new(format!("a{i}"), "v")).collect(),
            &norm,
        )
        .unwrap();
        assert_eq!(four.cardinality().unwrap(), Cardinality::Multi);
        let none = ProductRecord::new("c", "t", vec![], &norm).unwrap();
        assert!(matches!(none.cardinality(), Err(RecordError::NoPairs(_))));
    }

    #[test]
    fn dedup_examples() {
        let norm = Normalizer::default();
        let dup = vec![AvPair::new("brand", "adidas"), AvPair::new("brand", "adidas")];
        assert_eq!(dedup_pairs(&dup, &norm), vec![AvPair::new("brand", "adidas")]);
        assert!(dedup_pairs(&[], &norm).is_empty());
        let cased = vec![AvPair::new("brand", "Adidas"), AvPair::new("brand", "adidas")];
        assert_eq!(dedup_pairs(&cased, &norm), vec![AvPair::new("brand", "adidas")]);
        assert_eq!(dedup_pairs(&cased, &Normalizer::new(true)).len(), 2);
    }

    #[test]
    fn record_requires_title() {
        let err = ProductRecord::new("x", "   ", vec![AvPair::new("a", "b")], &Normalizer::default());
        assert!(matches!(err, Err(RecordError::EmptyTitle(_))));
    }

    #[test]
    fn reader_synthesizes_ids_and_drops_reserved_pairs() {
        let input = r#"{"title": "red shoe", "pairs": [{"attribute": "color", "value": "red"}, {"attribute": "a|b", "value": "x"}]}

{"id": "k", "title": "t", "pairs": [{"attribute": "x", "value": "a;b"}]}
{"title": "blue shoe", "pairs": [{"attribute": "color", "value": "blue"}, {"attribute": "Color", "value": "BLUE"}]}
"#;
        let records = read_records(input.as_bytes(), Normalizer::default()).unwrap();
        assert_eq!(records.len(), 2);
        assert_eq!(records[0].id, "00000000");
        assert_eq!(records[0].pairs, vec![AvPair::new("color", "red")]);
        // the second line consumed index 1 even though it was dropped
        assert_eq!(records[1].id, "00000002");
        assert_eq!(records[1].pairs.len(), 1);
    }

    #[test]
    fn reader_reports_bad_json_line() {
        let input = "{\"title\": \"a\", \"pairs\": []}\nnot json\n";
        let err = read_records(input.as_bytes(), Normalizer::default()).unwrap_err();
        assert!(matches!(err, RecordError::Json { line: 2, .. }));
    }

    proptest! {
        #[test]
        fn normalize_is_idempotent_and_never_longer(s in "\\PC{0,40}", cs in any::<bool>()) {
            let n = Normalizer::new(cs);
            let once = n.apply(&s);
            prop_assert_eq!(n.apply(&once), once.clone());
            prop_assert!(once.chars().count() <= s.chars().count());
        }

        #[test]
        fn dedup_is_idempotent(raw in proptest::collection::vec(("[a-cA-C ]{1,3}", "[x-zX-Z ]{1,3}"), 0..12)) {
            let norm = Normalizer::default();
            let pairs: Vec<AvPair> = raw.into_iter().map(|(a, v)| AvPair::new(a, v)).collect();
            let once = dedup_pairs(&pairs, &norm);
            prop_assert_eq!(dedup_pairs(&once, &norm), once);
        }
    }
}
