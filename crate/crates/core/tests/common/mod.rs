//! Test-only generators and independent reference implementations.

#![allow(dead_code)]

use ave_core::{AvPair, Normalizer, ProductRecord};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub const JACKET: &str = "New Band Women Skiing Jacket Outdoor Thicken Snowboarding Jacket Waterproof Windproof Outerwear Hooded Ski Coats WY006";
pub const ADIDAS: &str = "adidas superstar gold label, men's skateboarding  shoes, white, wrap abrasion lightweight breathable b34308";

pub fn pairs(items: &[(&str, &str)]) -> Vec<AvPair> {
    items.iter().map(|(a, v)| AvPair::new(*a, *v)).collect()
}

pub fn record(id: &str, title: &str, items: &[(&str, &str)]) -> ProductRecord {
    ProductRecord::new(id, title, pairs(items), &Normalizer::default()).unwrap()
}

pub fn jacket() -> ProductRecord {
    record(
        "jacket",
        JACKET,
        &[
            ("Gender", "Women"),
            ("Sport Type", "Snowboarding"),
            ("Collar", "Hooded"),
            ("Model Number", "WY006"),
        ],
    )
}

pub fn adidas() -> ProductRecord {
    record("adidas", ADIDAS, &[("brand name", "adidas"), ("model number", "b34308")])
}

fn word(rng: &mut ChaCha8Rng) -> String {
    const ALPHABET: &[u8] = b"abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789";
    let len = rng.gen_range(2..=8);
    (0..len).map(|_| ALPHABET[rng.gen_range(0..ALPHABET.len())] as char).collect()
}

fn phrase(rng: &mut ChaCha8Rng, max_words: usize) -> Vec<String> {
    (0..rng.gen_range(1..=max_words)).map(|_| word(rng)).collect()
}

/// A record whose values are all planted verbatim in the title, sometimes
/// with a trailing comma attached and with irregular spacing.
pub fn planted_record(rng: &mut ChaCha8Rng, id: usize) -> ProductRecord {
    let n_pairs = rng.gen_range(1..=4);
    let values: Vec<Vec<String>> = (0..n_pairs).map(|_| phrase(rng, 3)).collect();
    let mut chunks: Vec<Vec<String>> = (0..rng.gen_range(0..=8)).map(|_| phrase(rng, 2)).collect();
    for v in &values {
        let mut planted = v.clone();
        if rng.gen_bool(0.2) {
            planted.last_mut().unwrap().push(',');
        }
        let at = rng.gen_range(0..=chunks.len());
        chunks.insert(at, planted);
    }
    let gaps = [" ", " ", " ", "  ", "\t"];
    let title = chunks
        .into_iter()
        .flatten()
        .map(|w| format!("{w}{}", gaps[rng.gen_range(0..gaps.len())]))
        .collect::<String>();
    let pairs = values
        .into_iter()
        .map(|v| AvPair::new(phrase(rng, 2).join(" "), v.join(" ")))
        .collect();
    ProductRecord::new(format!("{id:05}"), title, pairs, &Normalizer::default()).unwrap()
}

/// Small-alphabet pairs with case and spacing noise so that collisions,
/// duplicates and normalization all occur often.
pub fn noisy_pair(rng: &mut ChaCha8Rng) -> AvPair {
    let attrs = ["brand", "Brand", "color", " colour", "size", "model  number", "model number"];
    let values = ["red", "Red ", "blue", "xl", "XL", "b34308", "b 34308", "nike"];
    AvPair::new(*attrs.choose(rng).unwrap(), *values.choose(rng).unwrap())
}

/// Reference normalization: lowercase, trim, collapse whitespace.
pub fn ref_normalize(s: &str) -> String {
    s.split_whitespace()
        .map(|w| w.to_lowercase())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Nested-loop deduplication of normalized pairs.
fn ref_unique(pairs: &[AvPair]) -> Vec<(String, String)> {
    let mut out: Vec<(String, String)> = Vec::new();
    for p in pairs {
        let key = (ref_normalize(&p.attribute), ref_normalize(&p.value));
        let mut seen = false;
        for existing in &out {
            if *existing == key {
                seen = true;
            }
        }
        if !seen {
            out.push(key);
        }
    }
    out
}

fn ref_unique_strings(items: Vec<String>) -> Vec<String> {
    let mut out: Vec<String> = Vec::new();
    for s in items {
        if !out.iter().any(|e| *e == s) {
            out.push(s);
        }
    }
    out
}

fn ref_intersection(a: &[String], b: &[String]) -> usize {
    let mut n = 0;
    for x in a {
        for y in b {
            if x == y {
                n += 1;
            }
        }
    }
    n
}

/// Brute-force micro counts `[joint, attribute, value]` as (tp, n_pred, n_gold).
pub fn brute_force_counts(corpus: &[(Vec<AvPair>, Vec<AvPair>)]) -> [(usize, usize, usize); 3] {
    let mut totals = [(0, 0, 0); 3];
    for (gold, pred) in corpus {
        let g = ref_unique(gold);
        let p = ref_unique(pred);
        let mut tp = 0;
        for pp in &p {
            for gg in &g {
                if pp == gg {
                    tp += 1;
                }
            }
        }
        let joint = (tp, p.len(), g.len());
        let project = |v: &[(String, String)], attr: bool| {
            ref_unique_strings(v.iter().map(|(a, val)| if attr { a.clone() } else { val.clone() }).collect())
        };
        let (ga, pa) = (project(&g, true), project(&p, true));
        let (gv, pv) = (project(&g, false), project(&p, false));
        let attribute = (ref_intersection(&pa, &ga), pa.len(), ga.len());
        let value = (ref_intersection(&pv, &gv), pv.len(), gv.len());
        for (slot, c) in totals.iter_mut().zip([joint, attribute, value]) {
            slot.0 += c.0;
            slot.1 += c.1;
            slot.2 += c.2;
        }
    }
    totals
}

/// Reference P/R/F1 with zero-division mapped to 0.
pub fn ref_prf((tp, n_pred, n_gold): (usize, usize, usize)) -> (f64, f64, f64) {
    let p = if n_pred == 0 { 0.0 } else { tp as f64 / n_pred as f64 };
    let r = if n_gold == 0 { 0.0 } else { tp as f64 / n_gold as f64 };
    let f = if p + r > 0.0 { 2.0 * p * r / (p + r) } else { 0.0 };
    (p, r, f)
}
