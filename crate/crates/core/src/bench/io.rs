//! Benchmark directories: KB and link TSVs, question JSONL and a manifest.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::dataset::{Benchmark, Dataset, Question, Shortfall};
use super::graph::{Branch, Edge, QueryGraph};
use crate::config::GenConfig;
use crate::embed::sha256_hex;
use crate::error::{Error, Result};
use crate::kb::{load_kb_with_types, load_links, save_kb, save_links, save_types, KbId, KbRegistry, LinkSet, LinkType};
use crate::qa::{QuestionRecord, TemplateId};

pub const BENCH_MANIFEST: &str = "manifest.json";
const FORMAT: &str = "multikb-bench";

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
enum StepJson {
    Hop { kb: KbId, relation: String },
    Link { link_type: LinkType, to: KbId },
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct BranchJson {
    topic: String,
    steps: Vec<StepJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphJson {
    template: TemplateId,
    link_type: LinkType,
    branches: Vec<BranchJson>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct QuestionJson {
    #[serde(default)]
    id: String,
    text: String,
    topic_entities: Vec<String>,
    answers: Vec<String>,
    template: TemplateId,
    link_type: LinkType,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    graph: Option<GraphJson>,
}

fn graph_to_json(g: &QueryGraph, kbs: &KbRegistry) -> Result<GraphJson> {
    let branches = g
        .branches
        .iter()
        .map(|b| {
            let steps = b
                .edges
                .iter()
                .map(|e| {
                    Ok(match *e {
                        Edge::Hop { kb, relation } => StepJson::Hop {
                            kb,
                            relation: kbs.kb(kb)?.relation_name(relation).to_owned(),
                        },
                        Edge::Link { link_type, to } => StepJson::Link { link_type, to },
                    })
                })
                .collect::<Result<_>>()?;
            Ok(BranchJson {
                topic: kbs.qualified_name(b.topic)?,
                steps,
            })
        })
        .collect::<Result<_>>()?;
    Ok(GraphJson {
        template: g.template,
        link_type: g.link_type,
        branches,
    })
}

fn graph_from_json(g: GraphJson, kbs: &KbRegistry) -> Result<QueryGraph> {
    let branches = g
        .branches
        .into_iter()
        .map(|b| {
            let edges = b
                .steps
                .into_iter()
                .map(|s| match s {
                    StepJson::Hop { kb, relation } => {
                        let r = kbs
                            .kb(kb)?
                            .lookup_relation(&relation)
                            .ok_or_else(|| Error::domain(format!("kb {kb} has no relation {relation:?}")))?;
                        Ok(Edge::Hop { kb, relation: r })
                    }
                    StepJson::Link { link_type, to } => Ok(Edge::Link { link_type, to }),
                })
                .collect::<Result<_>>()?;
            Ok(Branch {
                topic: kbs.resolve(&b.topic)?,
                edges,
            })
        })
        .collect::<Result<_>>()?;
    Ok(QueryGraph {
        template: g.template,
        link_type: g.link_type,
        branches,
    })
}

fn question_to_json(q: &Question, kbs: &KbRegistry) -> Result<QuestionJson> {
    let names = |es: &[crate::kb::EntityRef]| es.iter().map(|&e| kbs.qualified_name(e)).collect::<Result<Vec<_>>>();
    let r = &q.record;
    Ok(QuestionJson {
        id: r.id.clone(),
        text: r.text.clone(),
        topic_entities: names(&r.topic_entities)?,
        answers: names(&r.answers)?,
        template: r.template,
        link_type: r.link_type,
        graph: q.graph.as_ref().map(|g| graph_to_json(g, kbs)).transpose()?,
    })
}

/// One JSON object per line.
pub fn questions_to_jsonl(qs: &[Question], kbs: &KbRegistry) -> Result<String> {
    let mut out = String::new();
    for q in qs {
        out.push_str(&serde_json::to_string(&question_to_json(q, kbs)?)?);
        out.push('\n');
    }
    Ok(out)
}

/// Parse questions; entities are `kb:name` or `kb:local_id`. Lines without
/// an id get `<source>:<line>`.
pub fn parse_questions(text: &str, kbs: &KbRegistry, source_name: &str) -> Result<Vec<Question>> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            source_name: source_name.to_owned(),
            line: i + 1,
            message,
        };
        let j: QuestionJson = serde_json::from_str(line).map_err(|e| parse_err(e.to_string()))?;
        let resolve = |specs: &[String]| {
            specs
                .iter()
                .map(|s| kbs.resolve(s))
                .collect::<Result<Vec<_>>>()
                .map_err(|e| parse_err(e.to_string()))
        };
        let mut answers = resolve(&j.answers)?;
        answers.sort_unstable();
        answers.dedup();
        let record = QuestionRecord {
            id: if j.id.is_empty() { format!("{source_name}:{}", i + 1) } else { j.id },
            text: j.text,
            topic_entities: resolve(&j.topic_entities)?,
            answers,
            template: j.template,
            link_type: j.link_type,
        };
        record.validate().map_err(|e| parse_err(e.to_string()))?;
        let graph = j
            .graph
            .map(|g| graph_from_json(g, kbs))
            .transpose()
            .map_err(|e| parse_err(e.to_string()))?;
        out.push(Question { record, graph });
    }
    Ok(out)
}

pub fn load_questions(path: impl AsRef<Path>, kbs: &KbRegistry) -> Result<Vec<Question>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_questions(&text, kbs, &path.display().to_string())
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct BenchManifest {
    pub format: String,
    pub config: GenConfig,
    /// Side of the link that intersection answers are drawn from.
    pub answer_side: String,
    pub counts: Vec<CellCount>,
    pub shortfalls: Vec<Shortfall>,
    /// SHA-256 of every written file.
    pub files: Vec<(String, String)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellCount {
    pub template: TemplateId,
    pub link_type: LinkType,
    pub train: usize,
    pub dev: usize,
    pub test: usize,
}

fn cell_counts(d: &Dataset) -> Vec<CellCount> {
    let mut counts: Vec<CellCount> = Vec::new();
    for (split, qs) in [(0, &d.train), (1, &d.dev), (2, &d.test)] {
        for q in qs {
            let (t, lt) = (q.record.template, q.record.link_type);
            let pos = match counts.iter().position(|c| c.template == t && c.link_type == lt) {
                Some(p) => p,
                None => {
                    counts.push(CellCount {
                        template: t,
                        link_type: lt,
                        train: 0,
                        dev: 0,
                        test: 0,
                    });
                    counts.len() - 1
                }
            };
            let c = &mut counts[pos];
            match split {
                0 => c.train += 1,
                1 => c.dev += 1,
                _ => c.test += 1,
            }
        }
    }
    counts.sort_by_key(|c| (c.link_type, c.template));
    counts
}

pub const FILES: [&str; 8] = [
    "kb1.tsv",
    "types1.tsv",
    "kb2.tsv",
    "types2.tsv",
    "links.tsv",
    "train.jsonl",
    "dev.jsonl",
    "test.jsonl",
];

/// Write every benchmark file plus a manifest echoing `cfg`.
pub fn save_benchmark(b: &Benchmark, cfg: &GenConfig, dir: impl AsRef<Path>) -> Result<BenchManifest> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let (kb1, kb2) = (b.kbs.kb(1)?, b.kbs.kb(2)?);
    save_kb(kb1, dir.join("kb1.tsv"))?;
    save_types(kb1, dir.join("types1.tsv"))?;
    save_kb(kb2, dir.join("kb2.tsv"))?;
    save_types(kb2, dir.join("types2.tsv"))?;
    save_links(&b.links, kb1, kb2, dir.join("links.tsv"))?;
    for (name, qs) in [("train.jsonl", &b.data.train), ("dev.jsonl", &b.data.dev), ("test.jsonl", &b.data.test)] {
        let p = dir.join(name);
        fs::write(&p, questions_to_jsonl(qs, &b.kbs)?).map_err(|e| Error::io(&p, e))?;
    }
    let files = FILES
        .iter()
        .map(|f| {
            let p = dir.join(f);
            let bytes = fs::read(&p).map_err(|e| Error::io(&p, e))?;
            Ok(((*f).to_owned(), sha256_hex(&bytes)))
        })
        .collect::<Result<_>>()?;
    let manifest = BenchManifest {
        format: FORMAT.into(),
        config: cfg.clone(),
        answer_side: "a".into(),
        counts: cell_counts(&b.data),
        shortfalls: b.data.shortfalls.clone(),
        files,
    };
    let m = dir.join(BENCH_MANIFEST);
    fs::write(&m, serde_json::to_string_pretty(&manifest)? + "\n").map_err(|e| Error::io(&m, e))?;
    Ok(manifest)
}

/// KBs and links of a benchmark directory.
pub fn load_bench_kbs(dir: impl AsRef<Path>) -> Result<(KbRegistry, LinkSet)> {
    let dir = dir.as_ref();
    let need = |f: &str| -> Result<PathBuf> {
        let p = dir.join(f);
        if p.exists() {
            Ok(p)
        } else {
            Err(Error::MissingArtifact(format!("{} not found", p.display())))
        }
    };
    let kb1 = load_kb_with_types(need("kb1.tsv")?, need("types1.tsv")?, 1)?;
    let kb2 = load_kb_with_types(need("kb2.tsv")?, need("types2.tsv")?, 2)?;
    let links = load_links(need("links.tsv")?, &kb1, &kb2)?;
    Ok((KbRegistry::new(vec![kb1, kb2])?, links))
}

/// Everything in a benchmark directory. Planted pairs are not recovered.
pub fn load_benchmark(dir: impl AsRef<Path>) -> Result<Benchmark> {
    let dir = dir.as_ref();
    let (kbs, links) = load_bench_kbs(dir)?;
    let mut data = Dataset::default();
    for (name, split) in [("train.jsonl", &mut data.train), ("dev.jsonl", &mut data.dev), ("test.jsonl", &mut data.test)] {
        let p = dir.join(name);
        if !p.exists() {
            return Err(Error::MissingArtifact(format!("{} not found", p.display())));
        }
        *split = load_questions(&p, &kbs)?;
    }
    Ok(Benchmark {
        kbs,
        links,
        planted: Vec::new(),
        data,
    })
}
