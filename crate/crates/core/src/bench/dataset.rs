//! Question quotas, planted probes and the stratified split.

use std::collections::HashSet;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::graph::{derive_answers, Branch, Edge, QueryGraph};
use super::synth::{generate_synthetic_kbs, PlantedPair, UPSTREAM};
use super::template::{instantiate_template, verbalize};
use crate::config::GenConfig;
use crate::error::{Error, Result};
use crate::kb::{EntityRef, KbRegistry, LinkSet, LinkType};
use crate::qa::{QuestionRecord, TemplateId};
use crate::rng::stream;

/// The populated (template, link type) cells: every template with full
/// links, and the two-hop templates with partial links.
pub const CELLS: [(TemplateId, LinkType); 9] = [
    (TemplateId::T1, LinkType::Full),
    (TemplateId::T2, LinkType::Full),
    (TemplateId::T3, LinkType::Full),
    (TemplateId::T4, LinkType::Full),
    (TemplateId::T5, LinkType::Full),
    (TemplateId::T6, LinkType::Full),
    (TemplateId::T1, LinkType::Partial),
    (TemplateId::T2, LinkType::Partial),
    (TemplateId::T3, LinkType::Partial),
];

/// A question together with the graph it was generated from, when known.
#[derive(Clone, Debug, PartialEq)]
pub struct Question {
    pub record: QuestionRecord,
    pub graph: Option<QueryGraph>,
}

/// A cell whose quota could not be met.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Shortfall {
    pub template: TemplateId,
    pub link_type: LinkType,
    pub requested: usize,
    pub generated: usize,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Dataset {
    pub train: Vec<Question>,
    pub dev: Vec<Question>,
    pub test: Vec<Question>,
    pub shortfalls: Vec<Shortfall>,
}

impl Dataset {
    pub fn all(&self) -> impl Iterator<Item = &Question> {
        self.train.iter().chain(&self.dev).chain(&self.test)
    }

    pub fn records(split: &[Question]) -> Vec<QuestionRecord> {
        split.iter().map(|q| q.record.clone()).collect()
    }
}

/// KBs, links and questions generated from one config.
#[derive(Clone, Debug)]
pub struct Benchmark {
    pub kbs: KbRegistry,
    pub links: LinkSet,
    pub planted: Vec<PlantedPair>,
    pub data: Dataset,
}

pub fn generate_benchmark(cfg: &GenConfig) -> Result<Benchmark> {
    let pair = generate_synthetic_kbs(cfg)?;
    let data = generate_dataset(cfg, &pair.kbs, &pair.links, &pair.planted)?;
    Ok(Benchmark {
        kbs: pair.kbs,
        links: pair.links,
        planted: pair.planted,
        data,
    })
}

fn record(id: String, g: &QueryGraph, answers: Vec<EntityRef>, kbs: &KbRegistry) -> Result<Question> {
    Ok(Question {
        record: QuestionRecord {
            id,
            text: verbalize(g, kbs)?,
            topic_entities: g.topics(),
            answers,
            template: g.template,
            link_type: g.link_type,
        },
        graph: Some(g.clone()),
    })
}

fn probe(kbs: &KbRegistry, links: &LinkSet, topic: EntityRef, id: String) -> Result<Question> {
    let kb = kbs.kb(topic.kb)?;
    let relation = kb
        .lookup_relation(UPSTREAM)
        .ok_or_else(|| Error::Internal(format!("kb {} has no {UPSTREAM} relation", kb.id())))?;
    let g = QueryGraph {
        template: TemplateId::P1,
        link_type: LinkType::Partial,
        branches: vec![Branch {
            topic,
            edges: vec![Edge::Hop { kb: kb.id(), relation }],
        }],
    };
    let answers = derive_answers(&g, kbs, links)?;
    record(id, &g, answers, kbs)
}

/// Split sizes for `n` items: train, dev, test.
pub fn split_sizes(n: usize) -> (usize, usize, usize) {
    let dev = (n as f64 * 0.1).round() as usize;
    let test = (n as f64 * 0.1).round() as usize;
    (n - dev - test, dev, test)
}

/// Fill every cell up to `questions_per_cell` distinct instances, add two
/// one-hop probes per planted pair, and split each cell 80/10/10. A cell
/// that cannot reach its quota is logged and reported as a shortfall.
pub fn generate_dataset(
    cfg: &GenConfig,
    kbs: &KbRegistry,
    links: &LinkSet,
    planted: &[PlantedPair],
) -> Result<Dataset> {
    let mut seen: HashSet<QueryGraph> = HashSet::new();
    let mut cells: Vec<Vec<Question>> = Vec::new();
    let mut shortfalls = Vec::new();
    for (c, &(t, lt)) in CELLS.iter().enumerate() {
        let mut rng = stream(cfg.seed, "questions", &[c as u64]);
        let mut out = Vec::new();
        let mut misses = 0;
        while out.len() < cfg.questions_per_cell && misses < 20 {
            match instantiate_template(t, kbs, links, lt, cfg.max_answers, &mut rng)? {
                Some((g, answers)) if seen.insert(g.clone()) => {
                    let id = format!("{t}-{lt}-{:04}", out.len());
                    out.push(record(id, &g, answers, kbs)?);
                    misses = 0;
                }
                _ => misses += 1,
            }
        }
        if out.len() < cfg.questions_per_cell {
            log::warn!("{t}/{lt}: generated {} of {} questions", out.len(), cfg.questions_per_cell);
            shortfalls.push(Shortfall {
                template: t,
                link_type: lt,
                requested: cfg.questions_per_cell,
                generated: out.len(),
            });
        }
        cells.push(out);
    }
    if !planted.is_empty() {
        let mut out = Vec::new();
        for (i, p) in planted.iter().enumerate() {
            out.push(probe(kbs, links, p.industry, format!("P1-partial-{:04}", 2 * i))?);
            out.push(probe(kbs, links, p.product, format!("P1-partial-{:04}", 2 * i + 1))?);
        }
        cells.push(out);
    }

    let mut data = Dataset {
        shortfalls,
        ..Dataset::default()
    };
    for (c, mut cell) in cells.into_iter().enumerate() {
        cell.shuffle(&mut stream(cfg.seed, "split", &[c as u64]));
        let (train, dev, _) = split_sizes(cell.len());
        let test = cell.split_off(train + dev);
        let dev = cell.split_off(train);
        data.train.extend(cell);
        data.dev.extend(dev);
        data.test.extend(test);
    }
    Ok(data)
}
