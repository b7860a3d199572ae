//! Non-model machinery for generative attribute-value extraction from
//! product titles.
//!
//! Records are encoded into target strings in one of two formats, model
//! generations are decoded back into `(attribute, value)` pairs with every
//! malformed segment accounted for, and predictions are scored with
//! exact-match micro precision, recall and F1.
//!
//! ```
//! use ave_core::{decode, encode, AvPair, EncodeOptions, Normalizer, Paradigm, ProductRecord, Scheme};
//!
//! let norm = Normalizer::default();
//! let record = ProductRecord::new(
//!     "1",
//!     "Seiko Women's SUJ708 Gold Tone Stainless Steel Watch",
//!     vec![AvPair::new("Brand", "Seiko"), AvPair::new("Model Number", "SUJ708")],
//!     &norm,
//! )
//! .unwrap();
//! let target = encode(&record, &EncodeOptions::new(Paradigm::PositionalSequence)).unwrap();
//! assert_eq!(target, "0 0 Brand | 2 2 Model Number");
//!
//! let report = decode(&target, Paradigm::PositionalSequence, &record.title, Scheme::Whitespace, &norm);
//! assert_eq!(report.pairs[1], AvPair::new("model number", "suj708"));
//! ```

pub mod cli;
pub mod decode;
pub mod encode;
pub mod metrics;
pub mod oracle;
pub mod preprocess;
pub mod record;
pub mod rng;
pub mod tokenize;

pub use decode::{decode, parse_positional_sequence, parse_word_sequence, resolve_spans, DecodeReport, Discard, DiscardReason};
pub use encode::{encode, encode_positional_sequence, encode_word_sequence, shuffle_pairs, EncodeOptions, OnMissing, PairOrder};
pub use metrics::{evaluate, match_joint, match_projected, prf, EvalOptions, EvalReport, Field, Prf};
pub use oracle::{Generation, NoiseSpec, Oracle};
pub use preprocess::{derive, split, stats, DatasetStats, PipelineConfig, RawTuple, SplitRatios};
pub use record::{cardinality, dedup_pairs, normalize, AvPair, Cardinality, Normalizer, Paradigm, ProductRecord};
pub use tokenize::{find_value_span, mock_subword_tokenize, remap_span, whitespace_tokenize, Scheme, TokenSpan, Tokenization, Tokenizer};
