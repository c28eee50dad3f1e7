use std::fmt;
use std::path::Path;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{gold_rank, hits_at_1, mean_std, mrr};
use crate::bench::{load_benchmark, Benchmark, Question};
use crate::config::{QaConfig, TrainConfig};
use crate::embed::{train_embedding, EmbeddingModel, TrainReport};
use crate::error::{Error, Result};
use crate::kb::{merge_aligned, merge_full_links, EntityRef, KbId, KbRegistry, LinkSet, LinkType, MergedKb};
use crate::qa::{train_qa, QaModel, QaReport, QuestionRecord, TemplateId};

/// The system variants compared in evaluation.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Variant {
    /// Every KB embedded on its own; links ignored.
    NoLink,
    /// KBs fused into one graph along full links.
    MergeKb,
    /// Link-aware training restricted to full links.
    FullLink,
    /// Link-aware training with every link.
    MultiKb,
    /// Every link contracted and same-named relations unified.
    ForcedMerge,
}

impl Variant {
    /// The four baseline rows, weakest first.
    pub const TABLE: [Variant; 4] = [Variant::NoLink, Variant::MergeKb, Variant::FullLink, Variant::MultiKb];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::NoLink => "no-link",
            Variant::MergeKb => "merge-kb",
            Variant::FullLink => "full-link",
            Variant::MultiKb => "multi-kb",
            Variant::ForcedMerge => "forced-merge",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [Variant::NoLink, Variant::MergeKb, Variant::FullLink, Variant::MultiKb, Variant::ForcedMerge]
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown variant {s:?} (expected no-link, merge-kb, full-link, multi-kb or forced-merge)"
                ))
            })
    }
}

/// Which questions to score.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    #[default]
    Dev,
    Test,
}

impl FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            other => Err(Error::Config(format!("unknown split {other:?} (expected dev or test)"))),
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalSettings {
    pub train: TrainConfig,
    pub qa: QaConfig,
    pub seeds: Vec<u64>,
    pub split: Split,
    /// KB whose entities are removed from the candidate answers.
    pub unplug: Option<KbId>,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Scores {
    pub mrr: f64,
    pub hits1: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CellScore {
    pub template: TemplateId,
    pub link_type: LinkType,
    pub questions: usize,
    pub mrr: f64,
    pub hits1: f64,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionResult {
    pub id: String,
    /// 1-based rank of the best gold answer; `None` scores 0.
    pub rank: Option<usize>,
    /// Every gold answer lies in the unplugged KB.
    pub unplugged: bool,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct RunReport {
    pub seed: u64,
    pub overall: Scores,
    pub breakdown: Vec<CellScore>,
    pub per_question: Vec<QuestionResult>,
    pub unplugged: usize,
    pub embedding: TrainReport,
    pub qa: QaReport,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct EvalReport {
    pub variant: Variant,
    pub split: Split,
    pub unplug: Option<KbId>,
    pub runs: usize,
    /// Means over runs.
    pub overall: Scores,
    /// Sample standard deviations over runs.
    pub stddev: Scores,
    /// Per-cell means over runs.
    pub breakdown: Vec<CellScore>,
    pub run_reports: Vec<RunReport>,
}

impl EvalReport {
    /// Mean MRR over runs of the questions whose records satisfy `keep`.
    pub fn mean_mrr_where(&self, records: &[QuestionRecord], keep: impl Fn(&QuestionRecord) -> bool) -> f64 {
        let kept: Vec<&str> = records.iter().filter(|r| keep(r)).map(|r| r.id.as_str()).collect();
        let per_run: Vec<f64> = self
            .run_reports
            .iter()
            .map(|run| {
                let ranks: Vec<Option<usize>> = run
                    .per_question
                    .iter()
                    .filter(|q| kept.contains(&q.id.as_str()))
                    .map(|q| q.rank)
                    .collect();
                mrr(&ranks)
            })
            .collect();
        mean_std(&per_run).0
    }
}

/// Per-cell MRR and Hits@1 of `results`, matched to `records` by position.
/// Empty cells are omitted; cells come sorted by link type, then template.
pub fn breakdown(results: &[QuestionResult], records: &[QuestionRecord]) -> Vec<CellScore> {
    let mut cells: Vec<((LinkType, TemplateId), Vec<Option<usize>>)> = Vec::new();
    for (res, rec) in results.iter().zip(records) {
        let key = (rec.link_type, rec.template);
        match cells.iter_mut().find(|(k, _)| *k == key) {
            Some((_, ranks)) => ranks.push(res.rank),
            None => cells.push((key, vec![res.rank])),
        }
    }
    cells.sort_by_key(|(k, _)| *k);
    cells
        .into_iter()
        .map(|((link_type, template), ranks)| CellScore {
            template,
            link_type,
            questions: ranks.len(),
            mrr: mrr(&ranks),
            hits1: hits_at_1(&ranks),
        })
        .collect()
}

/// The graph a variant trains on, and how original entities map into it.
pub struct Prepared {
    pub kbs: KbRegistry,
    pub links: LinkSet,
    pub merged: Option<MergedKb>,
}

impl Prepared {
    fn map(&self, e: EntityRef) -> Result<EntityRef> {
        match &self.merged {
            None => Ok(e),
            Some(m) => m
                .provenance
                .map(e)
                .ok_or_else(|| Error::Internal(format!("{e} missing from the merge provenance"))),
        }
    }

    /// A question restated in this variant's entity ids.
    pub fn map_record(&self, q: &QuestionRecord) -> Result<QuestionRecord> {
        let mut answers = q.answers.iter().map(|&a| self.map(a)).collect::<Result<Vec<_>>>()?;
        answers.sort_unstable();
        answers.dedup();
        Ok(QuestionRecord {
            topic_entities: q.topic_entities.iter().map(|&e| self.map(e)).collect::<Result<_>>()?,
            answers,
            ..q.clone()
        })
    }

    /// Whether the variant entity has a member outside the unplugged KB.
    pub fn retained(&self, e: EntityRef, unplug: Option<KbId>) -> bool {
        let Some(out) = unplug else { return true };
        match &self.merged {
            None => e.kb != out,
            Some(m) => m.provenance.members[e.local as usize].iter().any(|o| o.kb != out),
        }
    }

    /// Entities of `emb` that stay candidates with `unplug` removed.
    pub fn candidates(&self, emb: &EmbeddingModel, unplug: Option<KbId>) -> Result<Vec<EntityRef>> {
        let out: Vec<EntityRef> = QaModel::universe(emb).into_iter().filter(|&e| self.retained(e, unplug)).collect();
        if out.is_empty() {
            return Err(Error::domain("unplugging leaves no candidate answers"));
        }
        Ok(out)
    }
}

/// The training graph of `variant`. A merge that contracts nothing leaves
/// the KBs as they are.
pub fn prepare(variant: Variant, kbs: &KbRegistry, links: &LinkSet) -> Result<Prepared> {
    let merge = |m: MergedKb| -> Result<Prepared> {
        Ok(Prepared {
            kbs: KbRegistry::new(vec![m.kb.clone()])?,
            links: LinkSet::new(),
            merged: Some(m),
        })
    };
    let plain = |links: LinkSet| Prepared {
        kbs: kbs.clone(),
        links,
        merged: None,
    };
    Ok(match variant {
        Variant::NoLink => plain(LinkSet::new()),
        Variant::FullLink => plain(links.filtered(LinkType::Full)),
        Variant::MultiKb => plain(links.clone()),
        Variant::MergeKb if links.count(LinkType::Full) == 0 => plain(LinkSet::new()),
        Variant::MergeKb => merge(merge_full_links(kbs, links))?,
        Variant::ForcedMerge if links.is_empty() => plain(LinkSet::new()),
        Variant::ForcedMerge => merge(merge_aligned(kbs, links, &[LinkType::Full, LinkType::Partial]))?,
    })
}

/// Rank every question against `candidates` and record its best gold rank.
pub fn score_questions(
    qa: &QaModel,
    emb: &EmbeddingModel,
    questions: &[QuestionRecord],
    candidates: &[EntityRef],
) -> Result<Vec<QuestionResult>> {
    questions
        .par_iter()
        .map(|q| {
            let ranked = qa.rank_answers(emb, q, candidates)?;
            Ok(QuestionResult {
                id: q.id.clone(),
                rank: gold_rank(&ranked, &q.answers),
                unplugged: !q.answers.iter().any(|a| candidates.contains(a)),
            })
        })
        .collect()
}

fn records(qs: &[Question]) -> Vec<QuestionRecord> {
    qs.iter().map(|q| q.record.clone()).collect()
}

/// One seed of one variant, end to end.
pub fn run_once(variant: Variant, bench: &Benchmark, settings: &EvalSettings, seed: u64) -> Result<RunReport> {
    let prepared = prepare(variant, &bench.kbs, &bench.links)?;
    let map_all = |qs: &[Question]| -> Result<Vec<QuestionRecord>> {
        qs.iter().map(|q| prepared.map_record(&q.record)).collect()
    };
    let train = map_all(&bench.data.train)?;
    let dev = map_all(&bench.data.dev)?;
    let eval = match settings.split {
        Split::Dev => dev.clone(),
        Split::Test => map_all(&bench.data.test)?,
    };

    let train_cfg = TrainConfig {
        seed,
        ..settings.train.clone()
    };
    let (emb, embedding) = train_embedding(&prepared.kbs, &prepared.links, &train_cfg)?;
    let qa_cfg = QaConfig {
        seed,
        ..settings.qa.clone()
    };
    let (qa, qa_report) = train_qa(&emb, &train, &dev, &qa_cfg)?;
    let original = match settings.split {
        Split::Dev => &bench.data.dev,
        Split::Test => &bench.data.test,
    };
    let (overall, breakdown, per_question) = evaluate(&prepared, &emb, &qa, &eval, &records(original), settings.unplug)?;
    Ok(RunReport {
        seed,
        overall,
        breakdown,
        unplugged: per_question.iter().filter(|q| q.unplugged).count(),
        per_question,
        embedding,
        qa: qa_report,
    })
}

/// Score trained models on `questions` (in variant ids); the breakdown is
/// keyed by `original`, the same questions in source ids.
pub fn evaluate(
    prepared: &Prepared,
    emb: &EmbeddingModel,
    qa: &QaModel,
    questions: &[QuestionRecord],
    original: &[QuestionRecord],
    unplug: Option<KbId>,
) -> Result<(Scores, Vec<CellScore>, Vec<QuestionResult>)> {
    let candidates = prepared.candidates(emb, unplug)?;
    let per_question = score_questions(qa, emb, questions, &candidates)?;
    let ranks: Vec<Option<usize>> = per_question.iter().map(|q| q.rank).collect();
    let overall = Scores {
        mrr: mrr(&ranks),
        hits1: hits_at_1(&ranks),
    };
    Ok((overall, breakdown(&per_question, original), per_question))
}

/// Run `variant` once per seed and aggregate.
pub fn run_variant_on(variant: Variant, bench: &Benchmark, settings: &EvalSettings) -> Result<EvalReport> {
    if settings.seeds.is_empty() {
        return Err(Error::Config("at least one seed is required".into()));
    }
    let evaluated = match settings.split {
        Split::Dev => &bench.data.dev,
        Split::Test => &bench.data.test,
    };
    if evaluated.is_empty() {
        return Err(Error::domain(format!("the {:?} split has no questions", settings.split)));
    }
    let runs = settings
        .seeds
        .iter()
        .map(|&s| {
            log::info!("{variant}: seed {s}");
            run_once(variant, bench, settings, s)
        })
        .collect::<Result<Vec<_>>>()?;
    let (m, s) = mean_std(&runs.iter().map(|r| r.overall.mrr).collect::<Vec<_>>());
    let (h, hs) = mean_std(&runs.iter().map(|r| r.overall.hits1).collect::<Vec<_>>());
    let mut cells = runs[0].breakdown.clone();
    for c in &mut cells {
        let same = |x: &&CellScore| x.template == c.template && x.link_type == c.link_type;
        let pick = |f: fn(&CellScore) -> f64| -> Vec<f64> {
            runs.iter().filter_map(|r| r.breakdown.iter().find(same).map(f)).collect()
        };
        c.mrr = mean_std(&pick(|x| x.mrr)).0;
        c.hits1 = mean_std(&pick(|x| x.hits1)).0;
    }
    Ok(EvalReport {
        variant,
        split: settings.split,
        unplug: settings.unplug,
        runs: runs.len(),
        overall: Scores { mrr: m, hits1: h },
        stddev: Scores { mrr: s, hits1: hs },
        breakdown: cells,
        run_reports: runs,
    })
}

/// [`run_variant_on`] for a benchmark directory.
pub fn run_variant(variant: Variant, data_dir: impl AsRef<Path>, settings: &EvalSettings) -> Result<EvalReport> {
    let bench = load_benchmark(data_dir)?;
    run_variant_on(variant, &bench, settings)
}
