//! Serialization of product records into generation targets.
//!
//! Word sequence: `value ; attribute | value ; attribute`.
//! Positional sequence: `start end attribute | start end attribute`, where
//! `start`/`end` are inclusive 0-based token indices of the value in the title.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{collapse_whitespace, AvPair, Normalizer, Paradigm, ProductRecord};
use crate::rng::SeededRng;
use crate::tokenize::{find_value_span, remap_span, whitespace_tokenize, Scheme, TokenSpan, TokenizeError, Tokenizer};

#[derive(Debug, Error)]
pub enum EncodeError {
    #[error("record `{0}` has no pairs to encode")]
    NoPairs(String),
    #[error("record `{id}`: value of {pair} not found in title")]
    Unfindable { id: String, pair: AvPair },
    #[error("record `{0}`: no value could be located in the title")]
    AllUnfindable(String),
    #[error("record `{id}`: {source}")]
    Tokenize {
        id: String,
        #[source]
        source: TokenizeError,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum OnMissing {
    #[default]
    Skip,
    Error,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum PairOrder {
    /// Ascending position of each value's leftmost occurrence; values absent
    /// from the title go last in input order.
    #[default]
    Title,
    /// As listed in the record.
    Input,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EncodeOptions {
    pub paradigm: Paradigm,
    pub scheme: Scheme,
    pub on_missing: OnMissing,
    pub pair_order: PairOrder,
    pub normalizer: Normalizer,
}

impl EncodeOptions {
    pub fn new(paradigm: Paradigm) -> Self {
        Self {
            paradigm,
            scheme: Scheme::Whitespace,
            on_missing: OnMissing::Skip,
            pair_order: PairOrder::Title,
            normalizer: Normalizer::default(),
        }
    }
}

/// One segment of a target string.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TargetItem {
    Word { value: String, attribute: String },
    Span { span: TokenSpan, attribute: String },
}

impl fmt::Display for TargetItem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TargetItem::Word { value, attribute } => write!(f, "{value} ; {attribute}"),
            TargetItem::Span { span, attribute } => write!(f, "{} {} {attribute}", span.start, span.end),
        }
    }
}

/// Joins segments with ` | `.
pub fn render(items: &[TargetItem]) -> String {
    items
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(" | ")
}

/// Locates every pair's value on the whitespace tokenization (remapped to
/// `opts.scheme` when that differs) and orders pairs per `opts.pair_order`.
fn located_pairs<'r>(
    record: &'r ProductRecord,
    opts: &EncodeOptions,
) -> Result<Vec<(&'r AvPair, Option<TokenSpan>)>, EncodeError> {
    let tokenize_err = |source| EncodeError::Tokenize {
        id: record.id.clone(),
        source,
    };
    let words = whitespace_tokenize(&record.title).map_err(tokenize_err)?;
    let target = if opts.scheme.is_whitespace() {
        None
    } else {
        Some(opts.scheme.tokenize(&record.title).map_err(tokenize_err)?)
    };
    let mut located = Vec::with_capacity(record.pairs.len());
    for pair in &record.pairs {
        let mut span = find_value_span(&words, &pair.value, &opts.normalizer);
        if let (Some(s), Some(target)) = (span, &target) {
            span = remap_span(s, &words, target).map_err(tokenize_err)?;
        }
        located.push((pair, span));
    }
    if opts.pair_order == PairOrder::Title {
        // stable: ties and missing values keep input order
        located.sort_by_key(|(_, span)| span.map_or((1, 0), |s| (0, s.start)));
    }
    Ok(located)
}

/// Builds the target segments for `record` without rendering them.
pub fn target_items(record: &ProductRecord, opts: &EncodeOptions) -> Result<Vec<TargetItem>, EncodeError> {
    if record.pairs.is_empty() {
        return Err(EncodeError::NoPairs(record.id.clone()));
    }
    let located = located_pairs(record, opts)?;
    match opts.paradigm {
        Paradigm::WordSequence => Ok(located
            .into_iter()
            .map(|(pair, _)| TargetItem::Word {
                value: collapse_whitespace(&pair.value),
                attribute: collapse_whitespace(&pair.attribute),
            })
            .collect()),
        Paradigm::PositionalSequence => {
            let mut items = Vec::with_capacity(located.len());
            for (pair, span) in located {
                match (span, opts.on_missing) {
                    (Some(span), _) => items.push(TargetItem::Span {
                        span,
                        attribute: collapse_whitespace(&pair.attribute),
                    }),
                    (None, OnMissing::Skip) => {
                        log::warn!("record {}: skipping {pair}, value not in title", record.id)
                    }
                    (None, OnMissing::Error) => {
                        return Err(EncodeError::Unfindable {
                            id: record.id.clone(),
                            pair: pair.clone(),
                        })
                    }
                }
            }
            if items.is_empty() {
                return Err(EncodeError::AllUnfindable(record.id.clone()));
            }
            Ok(items)
        }
    }
}

pub fn encode(record: &ProductRecord, opts: &EncodeOptions) -> Result<String, EncodeError> {
    target_items(record, opts).map(|items| render(&items))
}

pub fn encode_word_sequence(record: &ProductRecord, opts: &EncodeOptions) -> Result<String, EncodeError> {
    encode(
        record,
        &EncodeOptions {
            paradigm: Paradigm::WordSequence,
            ..*opts
        },
    )
}

pub fn encode_positional_sequence(record: &ProductRecord, opts: &EncodeOptions) -> Result<String, EncodeError> {
    encode(
        record,
        &EncodeOptions {
            paradigm: Paradigm::PositionalSequence,
            ..*opts
        },
    )
}

/// Returns `record` with its pairs permuted by a seeded shuffle.
pub fn shuffle_pairs(record: &ProductRecord, seed: u64) -> ProductRecord {
    let mut shuffled = record.clone();
    SeededRng::new(seed).shuffle(&mut shuffled.pairs);
    shuffled
}

#[cfg(test)]
mod tests {
    use super::*;

    const JACKET: &str = "New Band Women Skiing Jacket Outdoor Thicken Snowboarding Jacket Waterproof Windproof Outerwear Hooded Ski Coats WY006";
    const ADIDAS: &str = "adidas superstar gold label, men's skateboarding  shoes, white, wrap abrasion lightweight breathable b34308";

    fn record(title: &str, pairs: &[(&str, &str)]) -> ProductRecord {
        ProductRecord::new(
            "r",
            title,
            pairs.iter().map(|(a, v)| AvPair::new(*a, *v)).collect(),
            &Normalizer::default(),
        )
        .unwrap()
    }

    fn jacket() -> ProductRecord {
        record(
            JACKET,
            &[
                ("Gender", "Women"),
                ("Sport Type", "Snowboarding"),
                ("Collar", "Hooded"),
                ("Model Number", "WY006"),
            ],
        )
    }

    fn adidas() -> ProductRecord {
        record(ADIDAS, &[("brand name", "adidas"), ("model number", "b34308")])
    }

    #[test]
    fn golden_word_sequence() {
        let opts = EncodeOptions::new(Paradigm::WordSequence);
        assert_eq!(
            encode_word_sequence(&jacket(), &opts).unwrap(),
            "Women ; Gender | Snowboarding ; Sport Type | Hooded ; Collar | WY006 ; Model Number"
        );
        assert_eq!(
            encode_word_sequence(&adidas(), &opts).unwrap(),
            "adidas ; brand name | b34308 ; model number"
        );
        assert_eq!(encode_word_sequence(&record("x y", &[("brand", "x")]), &opts).unwrap(), "x ; brand");
    }

    #[test]
    fn golden_positional_sequence() {
        let opts = EncodeOptions::new(Paradigm::PositionalSequence);
        assert_eq!(
            encode_positional_sequence(&jacket(), &opts).unwrap(),
            "2 2 Gender | 7 7 Sport Type | 12 12 Collar | 15 15 Model Number"
        );
        assert_eq!(
            encode_positional_sequence(&adidas(), &opts).unwrap(),
            "0 0 brand name | 12 12 model number"
        );
    }

    #[test]
    fn title_order_sorts_and_input_order_keeps() {
        let r = record(JACKET, &[("Model Number", "WY006"), ("Missing", "parka"), ("Gender", "Women")]);
        let mut opts = EncodeOptions::new(Paradigm::WordSequence);
        assert_eq!(encode(&r, &opts).unwrap(), "Women ; Gender | WY006 ; Model Number | parka ; Missing");
        opts.pair_order = PairOrder::Input;
        assert_eq!(encode(&r, &opts).unwrap(), "WY006 ; Model Number | parka ; Missing | Women ; Gender");
    }

    #[test]
    fn positional_skip_and_error_modes() {
        let r = record(JACKET, &[("Gender", "Women"), ("Missing", "parka")]);
        let mut opts = EncodeOptions::new(Paradigm::PositionalSequence);
        assert_eq!(encode(&r, &opts).unwrap(), "2 2 Gender");
        opts.on_missing = OnMissing::Error;
        match encode(&r, &opts) {
            Err(EncodeError::Unfindable { pair, .. }) => assert_eq!(pair, AvPair::new("Missing", "parka")),
            other => panic!("unexpected {other:?}"),
        }
        let absent = record(JACKET, &[("Missing", "parka")]);
        opts.on_missing = OnMissing::Skip;
        assert!(matches!(encode(&absent, &opts), Err(EncodeError::AllUnfindable(_))));
    }

    #[test]
    fn empty_record_is_an_error() {
        let r = ProductRecord::new("e", "t", vec![], &Normalizer::default()).unwrap();
        for p in [Paradigm::WordSequence, Paradigm::PositionalSequence] {
            assert!(matches!(encode(&r, &EncodeOptions::new(p)), Err(EncodeError::NoPairs(_))));
        }
    }

    #[test]
    fn positional_with_mock_subword_remaps() {
        let mut opts = EncodeOptions::new(Paradigm::PositionalSequence);
        opts.scheme = Scheme::MockSubword(3);
        // adidas → adi|das = pieces 0..=1; b34308 → pieces 33..=34 (see tokenize tests)
        assert_eq!(encode(&adidas(), &opts).unwrap(), "0 1 brand name | 33 34 model number");
    }

    #[test]
    fn separator_count_matches_pairs() {
        let opts = EncodeOptions::new(Paradigm::WordSequence);
        let s = encode(&jacket(), &opts).unwrap();
        assert_eq!(s.matches(" | ").count(), 3);
    }

    #[test]
    fn shuffle_is_deterministic_permutation() {
        let r = jacket();
        let a = shuffle_pairs(&r, 17);
        assert_eq!(a, shuffle_pairs(&r, 17));
        let mut got = a.pairs.clone();
        let mut want = r.pairs.clone();
        got.sort();
        want.sort();
        assert_eq!(got, want);

        let single = record("x y", &[("brand", "x")]);
        assert_eq!(shuffle_pairs(&single, 3), single);
    }
}
