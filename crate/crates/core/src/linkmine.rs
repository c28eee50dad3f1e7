//! Link discovery between two KBs by normalized edit distance.
//!
//! Matched pairs whose entity types agree become full links; every other
//! match becomes a partial link. Names are compared as raw strings (no case
//! folding or trimming).

use std::collections::HashMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityRef, Kb, Link, LinkSet, LinkType};

/// Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_chars(&a, &b)
}

fn levenshtein_chars(a: &[char], b: &[char]) -> usize {
    // keep the shorter string in the row buffer
    let (a, b) = if a.len() < b.len() { (b, a) } else { (a, b) };
    if b.is_empty() {
        return a.len();
    }
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0; b.len() + 1];
    for (i, ca) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, cb) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(ca != cb);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// `1 - d(a, b) / max(|a|, |b|)`, and 1 when both are empty.
pub fn similarity(a: &str, b: &str) -> f64 {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    similarity_chars(&a, &b)
}

fn similarity_chars(a: &[char], b: &[char]) -> f64 {
    let longest = a.len().max(b.len());
    if longest == 0 {
        return 1.0;
    }
    1.0 - levenshtein_chars(a, b) as f64 / longest as f64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MinerConfig {
    pub similarity_threshold: f64,
    pub max_pairs_per_entity: usize,
    /// Compare every pair instead of the first-character / length blocks.
    pub exact: bool,
}

impl Default for MinerConfig {
    fn default() -> Self {
        Self {
            similarity_threshold: 0.85,
            max_pairs_per_entity: 5,
            exact: false,
        }
    }
}

impl MinerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.similarity_threshold) {
            return Err(Error::Config(format!(
                "similarity_threshold must lie in [0, 1], got {}",
                self.similarity_threshold
            )));
        }
        if self.max_pairs_per_entity == 0 {
            return Err(Error::Config("max_pairs_per_entity must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug)]
struct Candidate<'a> {
    sim: f64,
    e1: EntityRef,
    e2: EntityRef,
    n1: &'a str,
    n2: &'a str,
}

// Highest similarity first, then names: independent of load order.
fn rank_order(a: &Candidate<'_>, b: &Candidate<'_>) -> std::cmp::Ordering {
    b.sim
        .total_cmp(&a.sim)
        .then_with(|| a.n1.cmp(b.n1))
        .then_with(|| a.n2.cmp(b.n2))
}

/// Mine generalized links from `kb1` to `kb2`.
///
/// Pairs scoring at least the threshold are kept, at most
/// `max_pairs_per_entity` per entity on either side (best first). The
/// result is sorted by (kb1 name, kb2 name).
pub fn mine_links(kb1: &Kb, kb2: &Kb, cfg: &MinerConfig) -> Result<LinkSet> {
    cfg.validate()?;
    if kb1.id() == kb2.id() {
        return Err(Error::domain("cannot mine links within a single kb"));
    }
    let chars2: Vec<Vec<char>> = kb2
        .entities()
        .map(|e| kb2.entity_name(e).chars().collect())
        .collect();

    let mut by_first: HashMap<char, Vec<u32>> = HashMap::new();
    let mut by_len: HashMap<usize, Vec<u32>> = HashMap::new();
    if !cfg.exact {
        for (j, c) in chars2.iter().enumerate() {
            if let Some(&f) = c.first() {
                by_first.entry(f).or_default().push(j as u32);
            }
            by_len.entry(c.len()).or_default().push(j as u32);
        }
    }

    let threshold = cfg.similarity_threshold;
    let per_entity: Vec<Vec<Candidate<'_>>> = kb1
        .entities()
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&e1| {
            let n1 = kb1.entity_name(e1);
            let c1: Vec<char> = n1.chars().collect();
            let pool: Vec<u32> = if cfg.exact {
                (0..chars2.len() as u32).collect()
            } else {
                let mut pool: Vec<u32> = c1
                    .first()
                    .and_then(|f| by_first.get(f))
                    .cloned()
                    .unwrap_or_default();
                let lo = c1.len().saturating_sub(3);
                for len in lo..=c1.len() + 3 {
                    if let Some(ids) = by_len.get(&len) {
                        pool.extend_from_slice(ids);
                    }
                }
                pool.sort_unstable();
                pool.dedup();
                pool
            };
            let mut found: Vec<Candidate<'_>> = pool
                .into_iter()
                .filter_map(|j| {
                    let c2 = &chars2[j as usize];
                    // distance is at least the length gap: cheap exact prefilter
                    let longest = c1.len().max(c2.len());
                    if longest > 0 {
                        let gap = c1.len().abs_diff(c2.len()) as f64 / longest as f64;
                        if 1.0 - gap < threshold {
                            return None;
                        }
                    }
                    let sim = similarity_chars(&c1, c2);
                    (sim >= threshold).then(|| {
                        let e2 = kb2.entity(j);
                        Candidate {
                            sim,
                            e1,
                            e2,
                            n1,
                            n2: kb2.entity_name(e2),
                        }
                    })
                })
                .collect();
            found.sort_by(rank_order);
            found.truncate(cfg.max_pairs_per_entity);
            found
        })
        .collect();

    let mut all: Vec<Candidate<'_>> = per_entity.into_iter().flatten().collect();
    all.sort_by(rank_order);
    let mut kb2_count: HashMap<EntityRef, usize> = HashMap::new();
    let mut kept: Vec<Candidate<'_>> = Vec::new();
    for c in all {
        let n = kb2_count.entry(c.e2).or_default();
        if *n < cfg.max_pairs_per_entity {
            *n += 1;
            kept.push(c);
        }
    }
    kept.sort_by(|a, b| a.n1.cmp(b.n1).then_with(|| a.n2.cmp(b.n2)));

    let mut set = LinkSet::new();
    for c in kept {
        let t = if kb1.entity_type(c.e1) == kb2.entity_type(c.e2) {
            LinkType::Full
        } else {
            LinkType::Partial
        };
        set.insert(Link::new(c.e1, c.e2, t)?);
    }
    Ok(set)
}
