//! Exact-match precision, recall and F1 for extracted pairs.
//!
//! Scores are micro-averaged: true positives and candidate counts are summed
//! over all records before dividing. Three views are reported: joint
//! (attribute and value both match), attribute-only and value-only, the last
//! two computed on per-record *sets* of projected strings. Joint scores are
//! also broken down by the gold cardinality of each record.

use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;
use std::ops::{Add, AddAssign};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::record::{AvPair, Cardinality, Normalizer, ProductRecord, RecordError};

#[derive(Debug, Error)]
pub enum MetricsError {
    #[error("true positives ({tp}) exceed predictions ({n_pred}) or gold ({n_gold})")]
    InvalidCounts { tp: usize, n_pred: usize, n_gold: usize },
    #[error("predictions reference unknown ids: {}", .0.join(", "))]
    UnknownIds(Vec<String>),
    #[error("no predictions for gold ids: {}", .0.join(", "))]
    MissingIds(Vec<String>),
    #[error("duplicate gold id `{0}`")]
    DuplicateGoldId(String),
    #[error(transparent)]
    Record(#[from] RecordError),
}

/// Raw counts behind a [`Prf`]. Addition is the micro-average reduction.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub n_pred: usize,
    pub n_gold: usize,
}

impl Add for Counts {
    type Output = Counts;

    fn add(self, rhs: Counts) -> Counts {
        Counts {
            tp: self.tp + rhs.tp,
            n_pred: self.n_pred + rhs.n_pred,
            n_gold: self.n_gold + rhs.n_gold,
        }
    }
}

impl AddAssign for Counts {
    fn add_assign(&mut self, rhs: Counts) {
        *self = *self + rhs;
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Prf {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub n_pred: usize,
    pub n_gold: usize,
}

/// Precision/recall/F1 from counts; an undefined ratio is reported as 0.
pub fn prf(tp: usize, n_pred: usize, n_gold: usize) -> Result<Prf, MetricsError> {
    if tp > n_pred || tp > n_gold {
        return Err(MetricsError::InvalidCounts { tp, n_pred, n_gold });
    }
    let ratio = |num: usize, den: usize| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let precision = ratio(tp, n_pred);
    let recall = ratio(tp, n_gold);
    let f1 = if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    };
    Ok(Prf {
        precision,
        recall,
        f1,
        tp,
        n_pred,
        n_gold,
    })
}

impl TryFrom<Counts> for Prf {
    type Error = MetricsError;

    fn try_from(c: Counts) -> Result<Self, Self::Error> {
        prf(c.tp, c.n_pred, c.n_gold)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    Attribute,
    Value,
}

/// Number of predicted pairs that exactly match a gold pair. Both sides are
/// treated as sets.
pub fn match_joint(gold: &[AvPair], pred: &[AvPair]) -> usize {
    let gold: HashSet<&AvPair> = gold.iter().collect();
    let pred: HashSet<&AvPair> = pred.iter().collect();
    gold.intersection(&pred).count()
}

/// Counts after projecting both sides onto one field and deduplicating.
pub fn match_projected(gold: &[AvPair], pred: &[AvPair], field: Field) -> Counts {
    let project = |pairs: &[AvPair]| -> HashSet<String> {
        pairs
            .iter()
            .map(|p| match field {
                Field::Attribute => p.attribute.clone(),
                Field::Value => p.value.clone(),
            })
            .collect()
    };
    let (gold, pred) = (project(gold), project(pred));
    Counts {
        tp: gold.intersection(&pred).count(),
        n_pred: pred.len(),
        n_gold: gold.len(),
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalOptions {
    pub normalizer: Normalizer,
    /// Error when a gold record has no prediction entry instead of scoring it
    /// as empty.
    pub strict_ids: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub joint: Prf,
    pub attribute: Prf,
    pub value: Prf,
    pub by_cardinality: BTreeMap<Cardinality, Prf>,
    pub record_count: usize,
}

/// Per-record counts for the three views.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RecordCounts {
    pub joint: Counts,
    pub attribute: Counts,
    pub value: Counts,
}

impl Add for RecordCounts {
    type Output = RecordCounts;

    fn add(self, rhs: RecordCounts) -> RecordCounts {
        RecordCounts {
            joint: self.joint + rhs.joint,
            attribute: self.attribute + rhs.attribute,
            value: self.value + rhs.value,
        }
    }
}

/// Counts for one record; inputs are normalized and deduplicated first.
pub fn record_counts(gold: &[AvPair], pred: &[AvPair], norm: &Normalizer) -> RecordCounts {
    let gold = crate::record::dedup_pairs(gold, norm);
    let pred = crate::record::dedup_pairs(pred, norm);
    RecordCounts {
        joint: Counts {
            tp: match_joint(&gold, &pred),
            n_pred: pred.len(),
            n_gold: gold.len(),
        },
        attribute: match_projected(&gold, &pred, Field::Attribute),
        value: match_projected(&gold, &pred, Field::Value),
    }
}

pub fn evaluate(
    gold_records: &[ProductRecord],
    predictions: &HashMap<String, Vec<AvPair>>,
    opts: &EvalOptions,
) -> Result<EvalReport, MetricsError> {
    let mut gold_ids = HashSet::with_capacity(gold_records.len());
    for record in gold_records {
        if !gold_ids.insert(record.id.as_str()) {
            return Err(MetricsError::DuplicateGoldId(record.id.clone()));
        }
    }
    let mut unknown: Vec<String> = predictions
        .keys()
        .filter(|id| !gold_ids.contains(id.as_str()))
        .cloned()
        .collect();
    if !unknown.is_empty() {
        unknown.sort();
        return Err(MetricsError::UnknownIds(unknown));
    }
    if opts.strict_ids {
        let missing: Vec<String> = gold_records
            .iter()
            .filter(|r| !predictions.contains_key(&r.id))
            .map(|r| r.id.clone())
            .collect();
        if !missing.is_empty() {
            return Err(MetricsError::MissingIds(missing));
        }
    }

    let mut total = RecordCounts::default();
    let mut by_cardinality: BTreeMap<Cardinality, Counts> = BTreeMap::new();
    for record in gold_records {
        let class = record.cardinality()?;
        let pred = predictions.get(&record.id).map_or(&[][..], Vec::as_slice);
        let counts = record_counts(&record.pairs, pred, &opts.normalizer);
        total = total + counts;
        *by_cardinality.entry(class).or_default() += counts.joint;
    }

    Ok(EvalReport {
        joint: total.joint.try_into()?,
        attribute: total.attribute.try_into()?,
        value: total.value.try_into()?,
        by_cardinality: by_cardinality
            .into_iter()
            .map(|(k, c)| Ok((k, c.try_into()?)))
            .collect::<Result<_, MetricsError>>()?,
        record_count: gold_records.len(),
    })
}

impl fmt::Display for EvalReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let pct = |x: f64| x * 100.0;
        writeln!(f, "{:<10} {:>7} {:>7} {:>7} {:>7} {:>7} {:>7}", "", "P", "R", "F1", "tp", "pred", "gold")?;
        let rows = [
            ("joint", &self.joint),
            ("attribute", &self.attribute),
            ("value", &self.value),
        ];
        for (name, s) in rows {
            writeln!(
                f,
                "{name:<10} {:>7.2} {:>7.2} {:>7.2} {:>7} {:>7} {:>7}",
                pct(s.precision),
                pct(s.recall),
                pct(s.f1),
                s.tp,
                s.n_pred,
                s.n_gold
            )?;
        }
        write!(f, "records    {}", self.record_count)
    }
}

impl EvalReport {
    /// Joint F1 per cardinality class, one line each.
    pub fn cardinality_table(&self) -> String {
        let mut out = String::new();
        for (class, s) in &self.by_cardinality {
            out.push_str(&format!(
                "{:<10} {:>7.2} {:>7.2} {:>7.2} {:>7} {:>7} {:>7}\n",
                class.to_string(),
                s.precision * 100.0,
                s.recall * 100.0,
                s.f1 * 100.0,
                s.tp,
                s.n_pred,
                s.n_gold
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(items: &[(&str, &str)]) -> Vec<AvPair> {
        items.iter().map(|(a, v)| AvPair::new(*a, *v)).collect()
    }

    fn record(id: &str, items: &[(&str, &str)]) -> ProductRecord {
        ProductRecord::new(id, "title", pairs(items), &Normalizer::default()).unwrap()
    }

    #[test]
    fn prf_examples() {
        let s = prf(2, 3, 2).unwrap();
        assert!((s.precision - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(s.recall, 1.0);
        assert!((s.f1 - 0.8).abs() < 1e-12);

        let z = prf(0, 0, 5).unwrap();
        assert_eq!((z.precision, z.recall, z.f1), (0.0, 0.0, 0.0));
        for k in 1..20 {
            let p = prf(k, k, k).unwrap();
            assert_eq!((p.precision, p.recall, p.f1), (1.0, 1.0, 1.0));
        }
        assert!(matches!(prf(3, 2, 5), Err(MetricsError::InvalidCounts { .. })));
        assert!(prf(3, 5, 2).is_err());
    }

    #[test]
    fn joint_and_projected_on_case_study() {
        let gold = pairs(&[("brand name", "adidas"), ("model number", "b34308")]);
        let pred = pairs(&[("brand name", "adidas"), ("feature", "breathable"), ("model number", "b34308")]);
        assert_eq!(match_joint(&gold, &pred), 2);
        assert_eq!(match_joint(&gold, &gold), 2);
        assert_eq!(match_joint(&gold, &pairs(&[("x", "y")])), 0);
        let expect = Counts { tp: 2, n_pred: 3, n_gold: 2 };
        assert_eq!(match_projected(&gold, &pred, Field::Attribute), expect);
        assert_eq!(match_projected(&gold, &pred, Field::Value), expect);
        assert_eq!(match_projected(&gold, &[], Field::Value), Counts { tp: 0, n_pred: 0, n_gold: 2 });
    }

    #[test]
    fn projection_uses_sets() {
        let gold = pairs(&[("model", "a"), ("model", "b")]);
        let pred = pairs(&[("model", "a"), ("model", "c"), ("model", "d")]);
        assert_eq!(match_projected(&gold, &pred, Field::Attribute), Counts { tp: 1, n_pred: 1, n_gold: 1 });
    }

    #[test]
    fn evaluate_oracle_and_empty() {
        let gold = vec![record("a", &[("a", "x")]), record("b", &[("c", "z"), ("d", "w")])];
        let preds: HashMap<_, _> = gold.iter().map(|r| (r.id.clone(), r.pairs.clone())).collect();
        let rep = evaluate(&gold, &preds, &EvalOptions::default()).unwrap();
        for s in [rep.joint, rep.attribute, rep.value] {
            assert_eq!((s.precision, s.recall, s.f1), (1.0, 1.0, 1.0));
        }
        assert_eq!(rep.by_cardinality.len(), 2);

        let rep = evaluate(&gold, &HashMap::new(), &EvalOptions::default()).unwrap();
        assert_eq!((rep.joint.precision, rep.joint.recall, rep.joint.f1), (0.0, 0.0, 0.0));
        assert_eq!(rep.joint.n_gold, 3);
    }

    #[test]
    fn evaluate_micro_example() {
        let gold = vec![record("A", &[("a", "x")]), record("B", &[("c", "z")])];
        let mut preds = HashMap::new();
        preds.insert("A".to_string(), pairs(&[("a", "x"), ("b", "y")]));
        preds.insert("B".to_string(), vec![]);
        let rep = evaluate(&gold, &preds, &EvalOptions::default()).unwrap();
        assert_eq!((rep.joint.tp, rep.joint.n_pred, rep.joint.n_gold), (1, 2, 2));
        assert_eq!((rep.joint.precision, rep.joint.recall, rep.joint.f1), (0.5, 0.5, 0.5));
        assert_eq!(rep.by_cardinality.keys().collect::<Vec<_>>(), [&Cardinality::Single]);
        assert_eq!(rep.by_cardinality[&Cardinality::Single], rep.joint);
    }

    #[test]
    fn evaluate_id_checks() {
        let gold = vec![record("A", &[("a", "x")])];
        let mut preds = HashMap::new();
        preds.insert("Z".to_string(), vec![]);
        assert!(matches!(
            evaluate(&gold, &preds, &EvalOptions::default()),
            Err(MetricsError::UnknownIds(ids)) if ids == ["Z"]
        ));
        let strict = EvalOptions {
            strict_ids: true,
            ..Default::default()
        };
        assert!(matches!(evaluate(&gold, &HashMap::new(), &strict), Err(MetricsError::MissingIds(_))));
        let dup = vec![record("A", &[("a", "x")]), record("A", &[("b", "y")])];
        assert!(matches!(
            evaluate(&dup, &HashMap::new(), &EvalOptions::default()),
            Err(MetricsError::DuplicateGoldId(_))
        ));
    }

    #[test]
    fn evaluate_normalizes_case_unless_sensitive() {
        let gold = vec![record("A", &[("Brand", "Adidas")])];
        let mut preds = HashMap::new();
        preds.insert("A".to_string(), pairs(&[("brand", "adidas")]));
        assert_eq!(evaluate(&gold, &preds, &EvalOptions::default()).unwrap().joint.tp, 1);
        let cs = EvalOptions {
            normalizer: Normalizer::new(true),
            strict_ids: false,
        };
        assert_eq!(evaluate(&gold, &preds, &cs).unwrap().joint.tp, 0);
    }

    #[test]
    fn report_renders_fixed_table() {
        let gold = vec![record("A", &[("a", "x")])];
        let rep = evaluate(&gold, &HashMap::new(), &EvalOptions::default()).unwrap();
        let text = rep.to_string();
        let rows: Vec<&str> = text.lines().map(|l| l.split_whitespace().next().unwrap_or("")).collect();
        assert_eq!(rows, ["P", "joint", "attribute", "value", "records"]);
    }
}
