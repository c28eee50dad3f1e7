use rand::seq::{IndexedRandom, SliceRandom};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::loss::{sampled_loss_sum, Positive};
use super::model::{EmbeddingModel, Layout};
use super::replace::{build_replace_sets, ReplacedTriple};
use crate::config::TrainConfig;
use crate::error::{Error, Result};
use crate::kb::{KbId, KbRegistry, LinkSet, Triple};
use crate::optim::{Adam, ParamGroup};
use crate::rng::{derive_seed, stream};

/// Positives per data-parallel work unit. Fixed so that the reduction order,
/// and therefore the result, does not depend on the thread count.
const CHUNK: usize = 16;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub epochs: usize,
    pub raw_triples: usize,
    pub replaced_triples: usize,
    pub steps: u64,
    /// Mean batch loss per epoch.
    pub epoch_loss: Vec<f64>,
    /// `(epoch, training MRR)` at every evaluation.
    pub mrr_history: Vec<(usize, f64)>,
    /// `(epoch, training MRR)` at every checkpoint replacement.
    pub checkpoints: Vec<(usize, f64)>,
    pub best_epoch: Option<usize>,
    pub best_mrr: f64,
}

/// Train all KBs in `kbs` jointly, encoding `links` through replaced triples.
pub fn train_embedding(kbs: &KbRegistry, links: &LinkSet, cfg: &TrainConfig) -> Result<(EmbeddingModel, TrainReport)> {
    cfg.validate()?;
    if kbs.is_empty() {
        return Err(Error::domain("no knowledge base to embed"));
    }
    let mut rng = stream(cfg.seed, "kbe-init", &[]);
    let mut model = EmbeddingModel::init(kbs, cfg.h, cfg.translator_hidden, &mut rng);
    let raw: Vec<Triple> = kbs.iter().flat_map(|kb| kb.triples().iter().copied()).collect();
    let replaced = build_replace_sets(kbs, links, cfg.k_pl);
    let l = model.layout();
    let groups = vec![
        ParamGroup {
            range: 0..l.translator_range().start,
            lr: cfg.lr_kbe,
        },
        ParamGroup {
            range: l.translator_range(),
            lr: cfg.lr_trans,
        },
    ];
    let report = fit(&mut model, kbs, &raw, &replaced, groups, cfg)?;
    Ok((model, report))
}

/// Training-set sizes behind a plug-in run next to the joint run it replaces.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PlugInReport {
    pub train: TrainReport,
    /// Raw triples of the plugged KB.
    pub plugged_triples: usize,
    /// Replaced triples scored in the plugged KB, with partial duplication.
    pub plugged_replaced_weighted: usize,
    pub plugged_replaced_unweighted: usize,
    /// The same counts for training every KB jointly.
    pub joint_triples: usize,
    pub joint_replaced_weighted: usize,
    pub joint_replaced_unweighted: usize,
}

impl PlugInReport {
    pub fn weighted_ratio(&self) -> f64 {
        (self.plugged_triples + self.plugged_replaced_weighted) as f64
            / (self.joint_triples + self.joint_replaced_weighted) as f64
    }

    pub fn unweighted_ratio(&self) -> f64 {
        (self.plugged_triples + self.plugged_replaced_unweighted) as f64
            / (self.joint_triples + self.joint_replaced_unweighted) as f64
    }
}

/// Add the one KB of `kbs` not covered by `frozen`, training only its tables,
/// the link-type vectors and the translator on its triples plus the replaced
/// triples scored inside it. Everything `frozen` covers stays bit-identical.
pub fn train_plug_in(
    frozen: &EmbeddingModel,
    kbs: &KbRegistry,
    links: &LinkSet,
    cfg: &TrainConfig,
) -> Result<(EmbeddingModel, PlugInReport)> {
    cfg.validate()?;
    if cfg.h != frozen.h() {
        return Err(Error::Config(format!(
            "h = {} but the frozen model has h = {}",
            cfg.h,
            frozen.h()
        )));
    }
    let fl = frozen.layout();
    if fl.translator_hidden != cfg.translator_hidden {
        return Err(Error::Config("translator shape differs from the frozen model".into()));
    }
    let new: Vec<KbId> = kbs.ids().into_iter().filter(|id| !fl.has_kb(*id)).collect();
    let plugged = match new.as_slice() {
        [id] => *id,
        [] => {
            return Err(Error::domain(
                "every kb is already embedded in the frozen model; plug-in needs a new namespace",
            ))
        }
        _ => return Err(Error::domain("plug-in adds exactly one kb at a time")),
    };
    for s in &fl.kbs {
        let kb = kbs.kb(s.kb)?;
        if kb.entity_count() != s.entities || kb.relation_count() != s.relations {
            return Err(Error::domain(format!("kb {} does not match the frozen model's tables", s.kb)));
        }
    }

    let plugged_kb = kbs.kb(plugged)?;
    let mut shapes = fl.kbs.clone();
    shapes.push(super::model::KbShape {
        kb: plugged,
        entities: plugged_kb.entity_count(),
        relations: plugged_kb.relation_count(),
    });
    let layout = Layout::new(cfg.h, shapes, cfg.translator_hidden);
    let mut rng = stream(cfg.seed, "kbe-plug-init", &[u64::from(plugged)]);
    let mut model = EmbeddingModel::init_with_layout(layout, &mut rng);
    for s in &fl.kbs {
        let (src, dst) = (fl.entity_range(s.kb), model.layout().entity_range(s.kb));
        model.params[dst].copy_from_slice(&frozen.params[src]);
        let (src, dst) = (fl.relation_range(s.kb), model.layout().relation_range(s.kb));
        model.params[dst].copy_from_slice(&frozen.params[src]);
    }
    let (src, dst) = (fl.link_type_range(), model.layout().link_type_range());
    model.params[dst].copy_from_slice(&frozen.params[src]);
    let (src, dst) = (fl.translator_range(), model.layout().translator_range());
    model.params[dst].copy_from_slice(&frozen.params[src]);

    let all = build_replace_sets(kbs, links, cfg.k_pl);
    let unweighted = build_replace_sets(kbs, links, 1);
    let replaced: Vec<ReplacedTriple> = all.iter().copied().filter(|r| r.object.kb == plugged).collect();
    let raw: Vec<Triple> = plugged_kb.triples().to_vec();

    let l = model.layout();
    let groups = vec![
        ParamGroup {
            range: l.entity_range(plugged),
            lr: cfg.lr_kbe,
        },
        ParamGroup {
            range: l.relation_range(plugged),
            lr: cfg.lr_kbe,
        },
        ParamGroup {
            range: l.link_type_range(),
            lr: cfg.lr_kbe,
        },
        ParamGroup {
            range: l.translator_range(),
            lr: cfg.lr_trans,
        },
    ];
    let train = fit(&mut model, kbs, &raw, &replaced, groups, cfg)?;
    let report = PlugInReport {
        train,
        plugged_triples: raw.len(),
        plugged_replaced_weighted: replaced.len(),
        plugged_replaced_unweighted: unweighted.iter().filter(|r| r.object.kb == plugged).count(),
        joint_triples: kbs.triple_count(),
        joint_replaced_weighted: all.len(),
        joint_replaced_unweighted: unweighted.len(),
    };
    Ok((model, report))
}

#[derive(Clone, Copy)]
enum Batch {
    Raw(usize),
    Link(usize),
}

/// Spread `nr` raw and `nl` link batches evenly through one epoch.
fn interleave(nr: usize, nl: usize) -> Vec<Batch> {
    let mut keyed: Vec<(f64, u8, Batch)> = Vec::with_capacity(nr + nl);
    keyed.extend((0..nr).map(|i| ((i as f64 + 0.5) / nr as f64, 0, Batch::Raw(i))));
    keyed.extend((0..nl).map(|i| ((i as f64 + 0.5) / nl as f64, 1, Batch::Link(i))));
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, b)| b).collect()
}

fn fit(
    model: &mut EmbeddingModel,
    kbs: &KbRegistry,
    raw: &[Triple],
    replaced: &[ReplacedTriple],
    groups: Vec<ParamGroup>,
    cfg: &TrainConfig,
) -> Result<TrainReport> {
    let mut opt = Adam::new(model.params.len(), cfg.beta1, cfg.beta2, cfg.eps, groups);
    let mut raw_pos: Vec<Positive> = raw.iter().map(Positive::from).collect();
    let mut link_pos: Vec<Positive> = replaced.iter().map(Positive::from).collect();

    let mut sample_rng = stream(cfg.seed, "kbe-mrr-sample", &[]);
    let mrr_triples: Vec<Triple> = if raw.len() <= cfg.mrr_sample {
        raw.to_vec()
    } else {
        raw.choose_multiple(&mut sample_rng, cfg.mrr_sample).copied().collect()
    };

    let mut report = TrainReport {
        raw_triples: raw.len(),
        replaced_triples: replaced.len(),
        best_mrr: f64::NEG_INFINITY,
        ..TrainReport::default()
    };
    let mut best: Option<Vec<f64>> = None;
    let bs = cfg.batch_kbe;

    for epoch in 0..cfg.n_kbe {
        let mut shuffle = stream(cfg.seed, "kbe-shuffle", &[epoch as u64]);
        raw_pos.shuffle(&mut shuffle);
        link_pos.shuffle(&mut shuffle);
        let warm = epoch < cfg.n_warm && !link_pos.is_empty();
        let n_raw = if warm { 0 } else { raw_pos.len().div_ceil(bs) };
        let n_link = link_pos.len().div_ceil(bs);

        let mut epoch_loss = 0.0;
        let mut batches = 0usize;
        for (step, batch) in interleave(n_raw, n_link).into_iter().enumerate() {
            let (items, weight) = match batch {
                Batch::Raw(i) => (&raw_pos[i * bs..((i + 1) * bs).min(raw_pos.len())], 1.0),
                Batch::Link(i) => (&link_pos[i * bs..((i + 1) * bs).min(link_pos.len())], cfg.r_lk),
            };
            let seed = derive_seed(cfg.seed, "kbe-batch", &[epoch as u64, step as u64]);
            let (loss, grad) = batch_gradient(model, kbs, items, cfg, seed, weight);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!(
                    "loss became {loss} at epoch {epoch}, step {step}"
                )));
            }
            opt.step(&mut model.params, &grad);
            epoch_loss += loss;
            batches += 1;
        }
        report.epoch_loss.push(if batches > 0 { epoch_loss / batches as f64 } else { 0.0 });
        report.epochs = epoch + 1;

        if (epoch + 1) % cfg.eval_every == 0 || epoch + 1 == cfg.n_kbe {
            let mrr = training_mrr(model, kbs, &mrr_triples)?;
            report.mrr_history.push((epoch, mrr));
            if mrr > report.best_mrr {
                report.best_mrr = mrr;
                report.best_epoch = Some(epoch);
                report.checkpoints.push((epoch, mrr));
                best = Some(model.params.clone());
            }
        }
    }
    report.steps = opt.steps();
    if let Some(p) = best {
        model.params = p;
    }
    if report.best_epoch.is_none() {
        report.best_mrr = 0.0;
    }
    Ok(report)
}

/// Batch-mean loss (times `weight`) and its gradient.
fn batch_gradient(
    model: &EmbeddingModel,
    kbs: &KbRegistry,
    items: &[Positive],
    cfg: &TrainConfig,
    seed: u64,
    weight: f64,
) -> (f64, Vec<f64>) {
    let scale = weight / items.len() as f64;
    let len = model.params.len();
    let parts: Vec<(f64, Vec<f64>)> = items
        .par_chunks(CHUNK)
        .enumerate()
        .map(|(c, chunk)| {
            let mut rng = stream(seed, "chunk", &[c as u64]);
            let mut grad = vec![0.0; len];
            let loss = sampled_loss_sum(model, kbs, chunk, cfg, &mut rng, Some(&mut grad), scale);
            (loss, grad)
        })
        .collect();
    let mut total = 0.0;
    let mut grad = vec![0.0; len];
    for (loss, g) in parts {
        total += loss;
        for (a, b) in grad.iter_mut().zip(&g) {
            *a += b;
        }
    }
    (total * scale, grad)
}

/// Filtered MRR of the true object among all entities of its KB. Ties count
/// against the true object.
pub fn training_mrr(model: &EmbeddingModel, kbs: &KbRegistry, triples: &[Triple]) -> Result<f64> {
    if triples.is_empty() {
        return Ok(0.0);
    }
    let rr: Vec<f64> = triples
        .par_iter()
        .map(|t| -> Result<f64> {
            let kb = kbs.kb(t.object.kb)?;
            let scores = model.object_scores(model.entity_vec(t.subject)?, t.object.kb, t.relation)?;
            let truth = scores[t.object.local as usize];
            let mut rank = 1usize;
            for (e, &s) in scores.iter().enumerate() {
                let e = e as u32;
                if e != t.object.local && s >= truth && !kb.contains(t.subject.local, t.relation, e) {
                    rank += 1;
                }
            }
            Ok(1.0 / rank as f64)
        })
        .collect::<Result<_>>()?;
    Ok(rr.iter().sum::<f64>() / rr.len() as f64)
}

