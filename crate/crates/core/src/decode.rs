//! Tolerant parsing of generated target strings back into attribute-value
//! pairs.
//!
//! Decoding never fails. Every `|`-separated segment ends up as exactly one
//! of: an extracted pair, a recorded discard, or a removed duplicate.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::record::{AvPair, Normalizer, Paradigm, FIELD_SEPARATOR, PAIR_SEPARATOR};
use crate::tokenize::{strip_outer_punctuation, Scheme, TokenSpan, Tokenization, Tokenizer};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DiscardReason {
    /// Word sequence segment without `;`.
    MissingSeparator,
    /// Positional segment with fewer than three fields.
    MissingField,
    /// Start or end index is not a non-negative integer.
    NonIntegerIndex,
    InvertedSpan,
    OutOfRange,
    /// Blank segment, or a blank value/attribute.
    EmptyField,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Discard {
    pub segment: String,
    pub reason: DiscardReason,
}

impl Discard {
    fn new(segment: &str, reason: DiscardReason) -> Self {
        Self {
            segment: segment.to_owned(),
            reason,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeReport {
    pub pairs: Vec<AvPair>,
    pub discards: Vec<Discard>,
    pub duplicates_removed: usize,
}

impl DecodeReport {
    /// Number of input segments this report accounts for.
    pub fn segments(&self) -> usize {
        self.pairs.len() + self.discards.len() + self.duplicates_removed
    }

    fn push_dedup(&mut self, pair: AvPair, seen: &mut HashSet<AvPair>) {
        if seen.insert(pair.clone()) {
            self.pairs.push(pair);
        } else {
            self.duplicates_removed += 1;
        }
    }
}

/// A parsed `start end attribute` segment. Indices are unchecked.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PositionalTriple {
    pub span: TokenSpan,
    pub attribute: String,
    /// Segment text as it appeared in the generation.
    pub segment: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct PositionalParse {
    pub triples: Vec<PositionalTriple>,
    pub discards: Vec<Discard>,
}

fn segments(text: &str) -> impl Iterator<Item = &str> {
    text.split(PAIR_SEPARATOR)
}

/// `value ; attribute | ...`. Each segment is split at its first `;`; any
/// later `;` stays in the attribute.
pub fn parse_word_sequence(text: &str, norm: &Normalizer) -> DecodeReport {
    let mut report = DecodeReport::default();
    let mut seen = HashSet::new();
    for segment in segments(text) {
        if segment.trim().is_empty() {
            report.discards.push(Discard::new(segment, DiscardReason::EmptyField));
            continue;
        }
        let Some((value, attribute)) = segment.split_once(FIELD_SEPARATOR) else {
            report.discards.push(Discard::new(segment, DiscardReason::MissingSeparator));
            continue;
        };
        let (value, attribute) = (norm.apply(value), norm.apply(attribute));
        if value.is_empty() || attribute.is_empty() {
            report.discards.push(Discard::new(segment, DiscardReason::EmptyField));
            continue;
        }
        report.push_dedup(AvPair { attribute, value }, &mut seen);
    }
    report
}

// Digits only; values too large for usize saturate and fail the range check.
fn parse_index(field: &str) -> Option<usize> {
    if field.is_empty() || !field.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    Some(field.parse().unwrap_or(usize::MAX))
}

/// `start end attribute | ...`. Needs at least three whitespace-separated
/// fields with the first two non-negative integers.
pub fn parse_positional_sequence(text: &str) -> PositionalParse {
    let mut parse = PositionalParse::default();
    for segment in segments(text) {
        let fields: Vec<&str> = segment.split_whitespace().collect();
        let reason = match fields.as_slice() {
            [] => DiscardReason::EmptyField,
            [_] | [_, _] => DiscardReason::MissingField,
            [start, end, attribute @ ..] => match (parse_index(start), parse_index(end)) {
                (Some(start), Some(end)) => {
                    parse.triples.push(PositionalTriple {
                        span: TokenSpan::new(start, end),
                        attribute: attribute.join(" "),
                        segment: segment.to_owned(),
                    });
                    continue;
                }
                _ => DiscardReason::NonIntegerIndex,
            },
        };
        parse.discards.push(Discard::new(segment, reason));
    }
    parse
}

/// Binds triples to `tok`. The value is the title text the span covers,
/// normalized and stripped of leading/trailing ASCII punctuation.
pub fn resolve_spans(triples: &[PositionalTriple], tok: &Tokenization, norm: &Normalizer) -> DecodeReport {
    let mut report = DecodeReport::default();
    let mut seen = HashSet::new();
    for triple in triples {
        let span = triple.span;
        if span.start > span.end {
            report.discards.push(Discard::new(&triple.segment, DiscardReason::InvertedSpan));
            continue;
        }
        let Some(text) = tok.span_text(span) else {
            report.discards.push(Discard::new(&triple.segment, DiscardReason::OutOfRange));
            continue;
        };
        let value = norm.apply(strip_outer_punctuation(&norm.apply(&text)));
        let attribute = norm.apply(&triple.attribute);
        if value.is_empty() || attribute.is_empty() {
            report.discards.push(Discard::new(&triple.segment, DiscardReason::EmptyField));
            continue;
        }
        report.push_dedup(AvPair { attribute, value }, &mut seen);
    }
    report
}

/// Decodes `text` in the given paradigm. `title` and `scheme` are only used
/// for positional sequences; an untokenizable title resolves no spans.
pub fn decode(text: &str, paradigm: Paradigm, title: &str, scheme: Scheme, norm: &Normalizer) -> DecodeReport {
    match paradigm {
        Paradigm::WordSequence => parse_word_sequence(text, norm),
        Paradigm::PositionalSequence => {
            let parsed = parse_positional_sequence(text);
            let tok = scheme
                .tokenize(title)
                .unwrap_or_else(|_| Tokenization::from_offsets(title, scheme.to_string(), Vec::new()).expect("empty tokenization"));
            let mut report = resolve_spans(&parsed.triples, &tok, norm);
            let mut discards = parsed.discards;
            discards.append(&mut report.discards);
            report.discards = discards;
            report
        }
    }
}
