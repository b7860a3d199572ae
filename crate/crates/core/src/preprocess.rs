//! Dataset derivation from raw `(title, attribute, value)` tuples, seeded
//! train/valid/test splitting and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::io::BufRead;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{synthesize_id, AvPair, Cardinality, Normalizer, ProductRecord};
use crate::rng::SeededRng;
use crate::tokenize::{find_value_span, whitespace_tokenize};

#[derive(Debug, Error)]
pub enum PreprocessError {
    #[error("no records survive filtering ({0})")]
    EmptyResult(Box<Attrition>),
    #[error("raw input is empty")]
    EmptyInput,
    #[error("invalid pipeline config: {0}")]
    Config(String),
    #[error("split needs at least 3 records, got {0}")]
    TooFewRecords(usize),
    #[error("invalid split ratios: {0}")]
    Ratios(String),
    #[error("unknown preset `{0}` (expected `av-data-v1` or `av-mae`)")]
    UnknownPreset(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// One raw annotation. A `null` JSON value is read as a missing value.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawTuple {
    pub title: String,
    pub attribute: String,
    #[serde(default)]
    pub value: Option<String>,
}

impl RawTuple {
    pub fn new(title: &str, attribute: &str, value: &str) -> Self {
        Self {
            title: title.to_owned(),
            attribute: attribute.to_owned(),
            value: Some(value.to_owned()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PipelineConfig {
    pub min_attr_freq: usize,
    #[serde(default)]
    pub max_attr_freq: Option<usize>,
    #[serde(default)]
    pub drop_value_literals: BTreeSet<String>,
    #[serde(default)]
    pub require_value_in_title: bool,
    #[serde(default)]
    pub null_markers: BTreeSet<String>,
}

impl PipelineConfig {
    /// AliExpress-style dumps: drop NULL values, keep attributes seen ≥ 60 times.
    pub fn av_data_v1() -> Self {
        Self {
            min_attr_freq: 60,
            max_attr_freq: None,
            drop_value_literals: BTreeSet::new(),
            require_value_in_title: false,
            null_markers: ["NULL".to_owned()].into(),
        }
    }

    /// MAE-style dumps: drop yes/no/na values and values absent from the
    /// title, keep attributes seen ≥ 700 times.
    pub fn av_mae() -> Self {
        Self {
            min_attr_freq: 700,
            max_attr_freq: None,
            drop_value_literals: ["yes", "no", "na"].map(String::from).into(),
            require_value_in_title: true,
            null_markers: BTreeSet::new(),
        }
    }

    pub fn preset(name: &str) -> Result<Self, PreprocessError> {
        match name {
            "av-data-v1" => Ok(Self::av_data_v1()),
            "av-mae" => Ok(Self::av_mae()),
            other => Err(PreprocessError::UnknownPreset(other.to_owned())),
        }
    }

    pub fn validate(&self) -> Result<(), PreprocessError> {
        if self.min_attr_freq == 0 {
            return Err(PreprocessError::Config("min_attr_freq must be at least 1".into()));
        }
        if let Some(max) = self.max_attr_freq {
            if max <= self.min_attr_freq {
                return Err(PreprocessError::Config(format!(
                    "max_attr_freq ({max}) must exceed min_attr_freq ({})",
                    self.min_attr_freq
                )));
            }
        }
        Ok(())
    }
}

/// Tuple and record counts removed at each derivation stage.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attrition {
    pub input_tuples: usize,
    /// Empty title/attribute/value or a reserved `|`/`;` in a field.
    pub dropped_malformed: usize,
    pub dropped_null_or_literal: usize,
    pub dropped_value_not_in_title: usize,
    pub dropped_attribute_frequency: usize,
    pub kept_tuples: usize,
    pub merged_duplicate_pairs: usize,
    pub dropped_empty_records: usize,
    pub records: usize,
    pub attributes_kept: BTreeSet<String>,
    pub attributes_dropped: BTreeSet<String>,
}

impl std::fmt::Display for Attrition {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "input {} tuples; malformed -{}; null/literal -{}; not in title -{}; attribute frequency -{}; \
             kept {} tuples in {} records",
            self.input_tuples,
            self.dropped_malformed,
            self.dropped_null_or_literal,
            self.dropped_value_not_in_title,
            self.dropped_attribute_frequency,
            self.kept_tuples,
            self.records
        )
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Derived {
    pub records: Vec<ProductRecord>,
    pub attrition: Attrition,
}

struct Tuple<'a> {
    title: &'a str,
    pair: AvPair,
}

/// Runs the filtering pipeline:
///
/// 1. drop tuples whose value is a null marker or a dropped literal;
/// 2. optionally drop tuples whose value does not occur in the title;
/// 3. drop attributes whose frequency on the surviving tuples is out of range;
/// 4. group by exact title, deduplicating pairs;
/// 5. drop records without pairs.
///
/// Malformed tuples (empty fields, reserved separators) are removed before
/// stage 1. Output order follows first appearance of each title.
pub fn derive(raw: &[RawTuple], config: &PipelineConfig, norm: &Normalizer) -> Result<Derived, PreprocessError> {
    config.validate()?;
    if raw.is_empty() {
        return Err(PreprocessError::EmptyInput);
    }
    let mut attrition = Attrition {
        input_tuples: raw.len(),
        ..Default::default()
    };
    let null_markers: HashSet<String> = config.null_markers.iter().map(|s| norm.apply(s)).collect();
    let literals: HashSet<String> = config.drop_value_literals.iter().map(|s| norm.apply(s)).collect();

    let mut stream: Vec<Tuple> = Vec::with_capacity(raw.len());
    for t in raw {
        let Some(value) = &t.value else {
            attrition.dropped_null_or_literal += 1;
            continue;
        };
        let pair = AvPair::new(t.attribute.as_str(), value.as_str());
        let normalized_value = norm.apply(value);
        if null_markers.contains(&normalized_value) || literals.contains(&normalized_value) {
            attrition.dropped_null_or_literal += 1;
        } else if t.title.trim().is_empty() || pair.ingestion_problem().is_some() {
            attrition.dropped_malformed += 1;
        } else {
            stream.push(Tuple { title: &t.title, pair });
        }
    }

    if config.require_value_in_title {
        let mut tokenized = HashMap::new();
        stream.retain(|t| {
            let tok = tokenized
                .entry(t.title)
                .or_insert_with(|| whitespace_tokenize(t.title).expect("blank titles removed above"));
            let found = find_value_span(tok, &t.pair.value, norm).is_some();
            if !found {
                attrition.dropped_value_not_in_title += 1;
            }
            found
        });
    }

    let mut freq: HashMap<String, usize> = HashMap::new();
    for t in &stream {
        *freq.entry(norm.apply(&t.pair.attribute)).or_default() += 1;
    }
    let keep = |count: usize| count >= config.min_attr_freq && config.max_attr_freq.map_or(true, |max| count <= max);
    for (attr, &count) in &freq {
        if keep(count) {
            attrition.attributes_kept.insert(attr.clone());
        } else {
            attrition.attributes_dropped.insert(attr.clone());
        }
    }
    stream.retain(|t| {
        let kept = attrition.attributes_kept.contains(&norm.apply(&t.pair.attribute));
        if !kept {
            attrition.dropped_attribute_frequency += 1;
        }
        kept
    });
    attrition.kept_tuples = stream.len();

    let mut order: Vec<&str> = Vec::new();
    let mut groups: HashMap<&str, Vec<AvPair>> = HashMap::new();
    for t in stream {
        groups
            .entry(t.title)
            .or_insert_with(|| {
                order.push(t.title);
                Vec::new()
            })
            .push(t.pair);
    }
    let mut records = Vec::with_capacity(order.len());
    for title in order {
        let pairs = groups.remove(title).unwrap_or_default();
        let before = pairs.len();
        let record = ProductRecord::new(synthesize_id(records.len()), title, pairs, norm)
            .expect("titles are non-blank");
        attrition.merged_duplicate_pairs += before - record.pairs.len();
        if record.pairs.is_empty() {
            attrition.dropped_empty_records += 1;
            continue;
        }
        records.push(record);
    }
    attrition.records = records.len();
    if records.is_empty() {
        return Err(PreprocessError::EmptyResult(Box::new(attrition)));
    }
    Ok(Derived { records, attrition })
}

/// Reads raw tuples as JSONL (`{title, attribute, value}`) or, when `tsv` is
/// set, as tab-separated `title<TAB>attribute<TAB>value` lines.
pub fn read_raw_tuples<R: BufRead>(reader: R, tsv: bool) -> Result<Vec<RawTuple>, PreprocessError> {
    let mut tuples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let tuple = if tsv {
            let fields: Vec<&str> = line.split('\t').collect();
            let [title, attribute, value] = fields.as_slice() else {
                return Err(PreprocessError::Parse {
                    line: line_no,
                    message: format!("expected 3 tab-separated columns, found {}", fields.len()),
                });
            };
            RawTuple::new(title, attribute, value)
        } else {
            serde_json::from_str(&line).map_err(|e| PreprocessError::Parse {
                line: line_no,
                message: e.to_string(),
            })?
        };
        tuples.push(tuple);
    }
    Ok(tuples)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitRatios {
    pub train: f64,
    pub valid: f64,
    pub test: f64,
}

impl SplitRatios {
    pub fn new(train: f64, valid: f64, test: f64) -> Result<Self, PreprocessError> {
        let all = [train, valid, test];
        if all.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(PreprocessError::Ratios("every ratio must be positive".into()));
        }
        let sum: f64 = all.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(PreprocessError::Ratios(format!("ratios sum to {sum}, expected 1")));
        }
        Ok(Self { train, valid, test })
    }
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.8,
            valid: 0.1,
            test: 0.1,
        }
    }
}

impl FromStr for SplitRatios {
    type Err = PreprocessError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<f64> = s
            .split(',')
            .map(|p| p.trim().parse::<f64>())
            .collect::<Result<_, _>>()
            .map_err(|e| PreprocessError::Ratios(format!("`{s}`: {e}")))?;
        match parts.as_slice() {
            [a, b, c] => Self::new(*a, *b, *c),
            _ => Err(PreprocessError::Ratios(format!("`{s}`: expected three comma-separated numbers"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Splits {
    pub train: Vec<ProductRecord>,
    pub valid: Vec<ProductRecord>,
    pub test: Vec<ProductRecord>,
}

/// Seeded shuffle, then validation and test take `floor(n * ratio)` records
/// each and train takes the rest. Each split keeps input order.
pub fn split(records: &[ProductRecord], ratios: SplitRatios, seed: u64) -> Result<Splits, PreprocessError> {
    let n = records.len();
    if n < 3 {
        return Err(PreprocessError::TooFewRecords(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::new(seed).shuffle(&mut order);
    // tolerance absorbs representation error such as 0.1 * 30 = 3.0000000000000004
    let take = |ratio: f64| ((n as f64) * ratio + 1e-9).floor() as usize;
    let n_valid = take(ratios.valid);
    let n_test = take(ratios.test);
    let n_train = n - n_valid - n_test;

    let pick = |range: std::ops::Range<usize>| -> Vec<ProductRecord> {
        let mut idx = order[range].to_vec();
        idx.sort_unstable();
        idx.into_iter().map(|i| records[i].clone()).collect()
    };
    Ok(Splits {
        train: pick(0..n_train),
        valid: pick(n_train..n_train + n_valid),
        test: pick(n_train + n_valid..n),
    })
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetStats {
    pub n_sentences: usize,
    pub n_single: usize,
    pub n_multi: usize,
    pub n_attributes: usize,
    pub n_pairs: usize,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub per_split: BTreeMap<String, DatasetStats>,
}

/// Sentence counts by cardinality and the number of distinct normalized
/// attributes. Records without pairs are not counted as sentences.
pub fn stats(records: &[ProductRecord], norm: &Normalizer) -> DatasetStats {
    let mut s = DatasetStats::default();
    let mut attributes = HashSet::new();
    for record in records {
        match record.cardinality() {
            Ok(Cardinality::Single) => s.n_single += 1,
            Ok(Cardinality::Multi) => s.n_multi += 1,
            Err(_) => continue,
        }
        s.n_sentences += 1;
        s.n_pairs += record.pairs.len();
        attributes.extend(record.pairs.iter().map(|p| norm.apply(&p.attribute)));
    }
    s.n_attributes = attributes.len();
    s
}

/// Statistics over several named splits plus their union.
pub fn stats_by_split(splits: &[(String, Vec<ProductRecord>)], norm: &Normalizer) -> DatasetStats {
    let all: Vec<ProductRecord> = splits.iter().flat_map(|(_, r)| r.iter().cloned()).collect();
    let mut total = stats(&all, norm);
    if splits.len() > 1 {
        total.per_split = splits
            .iter()
            .map(|(name, records)| (name.clone(), stats(records, norm)))
            .collect();
    }
    total
}
