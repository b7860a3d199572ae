//! Pseudo-model that emits gold targets, optionally corrupted, so that the
//! decode and evaluation path can be validated without a trained generator.
//!
//! For each emitted segment three uniforms are drawn from one seeded stream,
//! in order, whether or not they are used: drop, attribute corruption and
//! value corruption. A segment is dropped when the first draw is below
//! `p_drop`; otherwise the attribute gets a `#` suffix when the second is
//! below `p_attr` and the value is corrupted when the third is below `p_val`
//! (word sequence: `#` suffix; positional: the span is widened by one token,
//! to the right when possible).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::encode::{render, target_items, EncodeError, EncodeOptions, TargetItem};
use crate::record::ProductRecord;
use crate::rng::SeededRng;
use crate::tokenize::{TokenizeError, Tokenizer};

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("noise rate `{name}` = {value} is outside [0, 1]")]
    Rate { name: &'static str, value: f64 },
    #[error(transparent)]
    Encode(#[from] EncodeError),
    #[error(transparent)]
    Tokenize(#[from] TokenizeError),
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub p_drop: f64,
    pub p_attr: f64,
    pub p_val: f64,
}

impl NoiseSpec {
    pub fn validate(&self) -> Result<(), OracleError> {
        for (name, value) in [("p_drop", self.p_drop), ("p_attr", self.p_attr), ("p_val", self.p_val)] {
            if !(0.0..=1.0).contains(&value) {
                return Err(OracleError::Rate { name, value });
            }
        }
        Ok(())
    }

    pub fn is_copy(&self) -> bool {
        self.p_drop == 0.0 && self.p_attr == 0.0 && self.p_val == 0.0
    }
}

/// Generation record consumed by `decode`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Generation {
    pub id: String,
    pub title: String,
    pub generated: String,
}

/// Stateful generator; records must be fed in file order for the output to
/// be reproducible.
pub struct Oracle {
    opts: EncodeOptions,
    noise: NoiseSpec,
    rng: SeededRng,
}

impl Oracle {
    pub fn new(opts: EncodeOptions, noise: NoiseSpec, seed: u64) -> Result<Self, OracleError> {
        noise.validate()?;
        Ok(Self {
            opts,
            noise,
            rng: SeededRng::new(seed),
        })
    }

    pub fn generate(&mut self, record: &ProductRecord) -> Result<Generation, OracleError> {
        let items = target_items(record, &self.opts)?;
        let n_tokens = match items.first() {
            Some(TargetItem::Span { .. }) => self.opts.scheme.tokenize(&record.title)?.len(),
            _ => 0,
        };
        let mut kept = Vec::with_capacity(items.len());
        for mut item in items {
            let drop = self.rng.uniform() < self.noise.p_drop;
            let corrupt_attr = self.rng.uniform() < self.noise.p_attr;
            let corrupt_val = self.rng.uniform() < self.noise.p_val;
            if drop {
                continue;
            }
            match &mut item {
                TargetItem::Word { value, attribute } => {
                    if corrupt_attr {
                        attribute.push('#');
                    }
                    if corrupt_val {
                        value.push('#');
                    }
                }
                TargetItem::Span { span, attribute } => {
                    if corrupt_attr {
                        attribute.push('#');
                    }
                    if corrupt_val {
                        if span.end + 1 < n_tokens {
                            span.end += 1;
                        } else if span.start > 0 {
                            span.start -= 1;
                        } else {
                            // single-token title: push the span out of range
                            span.start = n_tokens;
                            span.end = n_tokens;
                        }
                    }
                }
            }
            kept.push(item);
        }
        Ok(Generation {
            id: record.id.clone(),
            title: record.title.clone(),
            generated: render(&kept),
        })
    }
}
