//! Title tokenizations with character offsets, value-span lookup, and span
//! remapping between tokenizations of the same title.
//!
//! Offsets are half-open ranges of *character* (not byte) indices into the
//! source title. Spans are 0-based and end-inclusive.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::Normalizer;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TokenizeError {
    #[error("title contains no tokens")]
    EmptyTitle,
    #[error("unknown tokenizer scheme `{0}` (expected `whitespace` or `mock-subword:<n>`)")]
    UnknownScheme(String),
    #[error("mock-subword piece length must be at least 1")]
    ZeroPieceLength,
    #[error("tokenizations were built from different titles")]
    TitleMismatch,
    #[error("span {start}..={end} is not valid for {len} tokens")]
    InvalidSpan { start: usize, end: usize, len: usize },
    #[error("malformed tokenization: {0}")]
    Malformed(String),
}

/// Inclusive token span.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct TokenSpan {
    pub start: usize,
    pub end: usize,
}

impl TokenSpan {
    pub const fn new(start: usize, end: usize) -> Self {
        Self { start, end }
    }
}

impl fmt::Display for TokenSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} {}", self.start, self.end)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Tokenization {
    source: String,
    scheme: String,
    tokens: Vec<String>,
    offsets: Vec<(usize, usize)>,
}

impl Tokenization {
    /// Builds a tokenization from externally produced offsets, checking that
    /// offsets are increasing, non-overlapping and reproduce `tokens`.
    pub fn from_offsets(
        source: &str,
        scheme: impl Into<String>,
        offsets: Vec<(usize, usize)>,
    ) -> Result<Self, TokenizeError> {
        let chars: Vec<char> = source.chars().collect();
        let mut prev_end = 0;
        let mut tokens = Vec::with_capacity(offsets.len());
        for (i, &(start, end)) in offsets.iter().enumerate() {
            if start >= end || end > chars.len() || (i > 0 && start < prev_end) {
                return Err(TokenizeError::Malformed(format!(
                    "offset #{i} ({start}, {end}) is empty, out of bounds or overlapping"
                )));
            }
            tokens.push(chars[start..end].iter().collect());
            prev_end = end;
        }
        Ok(Self {
            source: source.to_owned(),
            scheme: scheme.into(),
            tokens,
            offsets,
        })
    }

    pub fn source(&self) -> &str {
        &self.source
    }

    pub fn scheme(&self) -> &str {
        &self.scheme
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn offsets(&self) -> &[(usize, usize)] {
        &self.offsets
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn contains_span(&self, span: TokenSpan) -> bool {
        span.start <= span.end && span.end < self.tokens.len()
    }

    /// Character range `[start, end)` covered by `span`.
    pub fn char_range(&self, span: TokenSpan) -> Option<(usize, usize)> {
        self.contains_span(span)
            .then(|| (self.offsets[span.start].0, self.offsets[span.end].1))
    }

    /// Source text covered by `span`, inter-token gaps included.
    pub fn span_text(&self, span: TokenSpan) -> Option<String> {
        let (start, end) = self.char_range(span)?;
        Some(self.source.chars().skip(start).take(end - start).collect())
    }
}

/// A tokenizer usable for positional targets. Implementations must return a
/// tokenization satisfying the [`Tokenization`] invariants.
pub trait Tokenizer {
    fn scheme(&self) -> String;
    fn tokenize(&self, title: &str) -> Result<Tokenization, TokenizeError>;
}

/// Maximal runs of non-whitespace characters, punctuation left attached.
pub fn whitespace_tokenize(title: &str) -> Result<Tokenization, TokenizeError> {
    let mut offsets = Vec::new();
    let mut tokens = Vec::new();
    let mut current: Option<(usize, String)> = None;
    for (i, c) in title.chars().enumerate() {
        if c.is_whitespace() {
            if let Some((start, tok)) = current.take() {
                offsets.push((start, i));
                tokens.push(tok);
            }
        } else {
            current.get_or_insert_with(|| (i, String::new())).1.push(c);
        }
    }
    if let Some((start, tok)) = current {
        offsets.push((start, start + tok.chars().count()));
        tokens.push(tok);
    }
    if tokens.is_empty() {
        return Err(TokenizeError::EmptyTitle);
    }
    Ok(Tokenization {
        source: title.to_owned(),
        scheme: Scheme::Whitespace.to_string(),
        tokens,
        offsets,
    })
}

/// Splits every whitespace token into consecutive pieces of at most
/// `max_piece_len` characters. A deterministic stand-in for a real subword
/// vocabulary.
pub fn mock_subword_tokenize(title: &str, max_piece_len: usize) -> Result<Tokenization, TokenizeError> {
    if max_piece_len == 0 {
        return Err(TokenizeError::ZeroPieceLength);
    }
    let words = whitespace_tokenize(title)?;
    let mut tokens = Vec::with_capacity(words.len());
    let mut offsets = Vec::with_capacity(words.len());
    for (word, &(start, _)) in words.tokens.iter().zip(&words.offsets) {
        let chars: Vec<char> = word.chars().collect();
        for (k, piece) in chars.chunks(max_piece_len).enumerate() {
            let piece_start = start + k * max_piece_len;
            offsets.push((piece_start, piece_start + piece.len()));
            tokens.push(piece.iter().collect());
        }
    }
    Ok(Tokenization {
        source: title.to_owned(),
        scheme: Scheme::MockSubword(max_piece_len).to_string(),
        tokens,
        offsets,
    })
}

/// Tokenizer selected by its string key: `whitespace` or `mock-subword:<n>`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Scheme {
    #[default]
    Whitespace,
    MockSubword(usize),
}

impl Scheme {
    pub fn is_whitespace(&self) -> bool {
        matches!(self, Scheme::Whitespace)
    }
}

impl FromStr for Scheme {
    type Err = TokenizeError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        if s == "whitespace" {
            return Ok(Scheme::Whitespace);
        }
        let len = s
            .strip_prefix("mock-subword:")
            .and_then(|n| n.parse::<usize>().ok())
            .ok_or_else(|| TokenizeError::UnknownScheme(s.to_owned()))?;
        if len == 0 {
            return Err(TokenizeError::ZeroPieceLength);
        }
        Ok(Scheme::MockSubword(len))
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Whitespace => f.write_str("whitespace"),
            Scheme::MockSubword(n) => write!(f, "mock-subword:{n}"),
        }
    }
}

impl Tokenizer for Scheme {
    fn scheme(&self) -> String {
        self.to_string()
    }

    fn tokenize(&self, title: &str) -> Result<Tokenization, TokenizeError> {
        match *self {
            Scheme::Whitespace => whitespace_tokenize(title),
            Scheme::MockSubword(n) => mock_subword_tokenize(title, n),
        }
    }
}

/// Strips leading and trailing ASCII punctuation.
pub fn strip_outer_punctuation(text: &str) -> &str {
    text.trim_matches(|c: char| c.is_ascii_punctuation())
}

/// Leftmost contiguous token run whose text matches `value` after
/// normalization. A run also matches when its text, stripped of leading and
/// trailing ASCII punctuation, does (so `white` matches the token `white,`).
pub fn find_value_span(tok: &Tokenization, value: &str, norm: &Normalizer) -> Option<TokenSpan> {
    let target = norm.apply(value);
    if target.is_empty() {
        return None;
    }
    let target_content = content_chars(&target);
    let chars: Vec<char> = tok.source.chars().collect();
    for start in 0..tok.len() {
        for end in start..tok.len() {
            let text: String = chars[tok.offsets[start].0..tok.offsets[end].1].iter().collect();
            // Stripping only removes whitespace and ASCII punctuation, so the
            // remaining content only grows with `end`.
            if content_chars(&text) > target_content {
                break;
            }
            let normalized = norm.apply(&text);
            if normalized == target || norm.apply(strip_outer_punctuation(&normalized)) == target {
                return Some(TokenSpan::new(start, end));
            }
        }
    }
    None
}

fn content_chars(text: &str) -> usize {
    text.chars()
        .filter(|c| !c.is_whitespace() && !c.is_ascii_punctuation())
        .count()
}

/// Smallest span of `to` whose tokens cover every character `span` covers in
/// `from`. `None` when no token of `to` overlaps that range.
pub fn remap_span(
    span: TokenSpan,
    from: &Tokenization,
    to: &Tokenization,
) -> Result<Option<TokenSpan>, TokenizeError> {
    if from.source != to.source {
        return Err(TokenizeError::TitleMismatch);
    }
    let (lo, hi) = from.char_range(span).ok_or(TokenizeError::InvalidSpan {
        start: span.start,
        end: span.end,
        len: from.len(),
    })?;
    let overlaps = |&(s, e): &(usize, usize)| s < hi && e > lo;
    let start = to.offsets.iter().position(overlaps);
    let end = to.offsets.iter().rposition(overlaps);
    Ok(start.zip(end).map(|(s, e)| TokenSpan::new(s, e)))
}
