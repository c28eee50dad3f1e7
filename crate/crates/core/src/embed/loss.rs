//! Contrastive triple loss with label smoothing, dropout and negative sampling.

use rand::Rng as _;

use super::complex::{bce_logit, grad_first, product, sigmoid};
use super::model::EmbeddingModel;
use super::replace::ReplacedTriple;
use crate::config::TrainConfig;
use crate::kb::{EntityRef, Kb, KbRegistry, LinkType, RelationId, Triple};
use crate::rng::Rng;

/// Draw up to `k` objects uniformly from `s`'s KB with `(s, r, o)` absent from
/// the KB. Gives up after `100 k` attempts, so degenerate KBs may yield fewer.
pub fn sample_negatives(kb: &Kb, s: EntityRef, r: RelationId, k: usize, rng: &mut Rng) -> Vec<EntityRef> {
    let n = kb.entity_count() as u32;
    let mut out = Vec::with_capacity(k);
    if n == 0 {
        return out;
    }
    let mut attempts = 0;
    while out.len() < k && attempts < 100 * k {
        attempts += 1;
        let o = rng.random_range(0..n);
        if !kb.contains(s.local, r, o) {
            out.push(kb.entity(o));
        }
    }
    out
}

/// The slot-one input of a scored triple.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Subject {
    Entity(EntityRef),
    /// A foreign entity passed through the translator with the given link type.
    Translated(EntityRef, LinkType),
}

/// One positive with explicit negatives. The relation belongs to the object's KB.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub subject: Subject,
    pub relation: RelationId,
    pub object: EntityRef,
    pub negatives: Vec<EntityRef>,
}

/// A positive before its negatives are drawn; `filter_subject` is the in-KB
/// subject that negatives are filtered against.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Positive {
    pub subject: Subject,
    pub filter_subject: EntityRef,
    pub relation: RelationId,
    pub object: EntityRef,
}

impl From<&Triple> for Positive {
    fn from(t: &Triple) -> Self {
        Self {
            subject: Subject::Entity(t.subject),
            filter_subject: t.subject,
            relation: t.relation,
            object: t.object,
        }
    }
}

impl From<&ReplacedTriple> for Positive {
    fn from(t: &ReplacedTriple) -> Self {
        Self {
            subject: Subject::Translated(t.new_subject, t.link_type),
            filter_subject: t.subject,
            relation: t.relation,
            object: t.object,
        }
    }
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct Dropout {
    pub p: f64,
    pub relations: bool,
    pub objects: bool,
}

impl Dropout {
    pub fn from_config(cfg: &TrainConfig) -> Option<Self> {
        (cfg.p_kbe > 0.0).then_some(Self {
            p: cfg.p_kbe,
            relations: cfg.dropout_relations,
            objects: cfg.dropout_objects,
        })
    }
}

fn draw_mask(p: f64, d: usize, rng: &mut Rng) -> Vec<f64> {
    let keep = 1.0 / (1.0 - p);
    (0..d)
        .map(|_| if rng.random::<f64>() < p { 0.0 } else { keep })
        .collect()
}

fn apply(v: &[f64], mask: Option<&[f64]>) -> Vec<f64> {
    match mask {
        Some(m) => v.iter().zip(m).map(|(a, b)| a * b).collect(),
        None => v.to_vec(),
    }
}

/// Summed loss of one example; adds `scale * d loss / d params` into `grad`.
pub(crate) fn example_loss(
    model: &EmbeddingModel,
    ex: &Example,
    gamma: f64,
    dropout: Option<Dropout>,
    rng: &mut Rng,
    grad: Option<&mut [f64]>,
    scale: f64,
) -> f64 {
    let layout = model.layout();
    let d = layout.dim();
    let kb = ex.object.kb;

    let (x_raw, trace) = match ex.subject {
        Subject::Entity(e) => (model.entity_unchecked(e).to_vec(), None),
        Subject::Translated(e, t) => {
            let tr = model.translate_forward(model.entity_unchecked(e), t);
            (tr.output.clone(), Some(tr))
        }
    };
    let mask_s = dropout.map(|dp| draw_mask(dp.p, d, rng));
    let mask_r = dropout.filter(|dp| dp.relations).map(|dp| draw_mask(dp.p, d, rng));
    let x = apply(&x_raw, mask_s.as_deref());
    let r = apply(model.relation_unchecked(kb, ex.relation), mask_r.as_deref());
    let mut sr = vec![0.0; d];
    product(&x, &r, &mut sr);

    let mut grad = grad;
    let mut upstream = vec![0.0; d];
    let mut loss = 0.0;
    let mut mask_o = vec![1.0; d];
    let objects = std::iter::once((ex.object, 1.0 - gamma)).chain(ex.negatives.iter().map(|&o| (o, gamma)));
    for (o, y) in objects {
        if let Some(dp) = dropout.filter(|dp| dp.objects) {
            mask_o = draw_mask(dp.p, d, rng);
        }
        let ov = model.entity_unchecked(o);
        let s: f64 = (0..d).map(|k| sr[k] * ov[k] * mask_o[k]).sum();
        loss += bce_logit(s, y);
        if let Some(g) = grad.as_deref_mut() {
            let gs = scale * (sigmoid(s) - y);
            let off = layout.entity(o);
            for k in 0..d {
                g[off + k] += gs * sr[k] * mask_o[k];
                upstream[k] += gs * ov[k] * mask_o[k];
            }
        }
    }

    if let Some(g) = grad {
        let mut gx = vec![0.0; d];
        grad_first(&r, &upstream, 1.0, &mut gx);
        if let Some(m) = &mask_s {
            gx.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
        }
        match ex.subject {
            Subject::Entity(e) => {
                let off = layout.entity(e);
                g[off..off + d].iter_mut().zip(&gx).for_each(|(a, b)| *a += b);
            }
            Subject::Translated(e, t) => {
                model.translate_backward(trace.as_ref().expect("traced"), t, &gx, e, g);
            }
        }
        let mut gr = vec![0.0; d];
        grad_first(&x, &upstream, 1.0, &mut gr);
        if let Some(m) = &mask_r {
            gr.iter_mut().zip(m).for_each(|(a, b)| *a *= b);
        }
        let off = layout.relation(kb, ex.relation);
        g[off..off + d].iter_mut().zip(&gr).for_each(|(a, b)| *a += b);
    }
    loss
}

/// Draw negatives and dropout masks for each positive in turn from `rng`,
/// returning the summed loss.
pub(crate) fn sampled_loss_sum(
    model: &EmbeddingModel,
    kbs: &KbRegistry,
    positives: &[Positive],
    cfg: &TrainConfig,
    rng: &mut Rng,
    mut grad: Option<&mut [f64]>,
    scale: f64,
) -> f64 {
    let dropout = Dropout::from_config(cfg);
    let mut total = 0.0;
    for p in positives {
        let kb = kbs.get(p.object.kb).expect("object kb registered");
        let ex = Example {
            subject: p.subject,
            relation: p.relation,
            object: p.object,
            negatives: sample_negatives(kb, p.filter_subject, p.relation, cfg.k_kbe, rng),
        };
        total += example_loss(model, &ex, cfg.gamma_kbe, dropout, rng, grad.as_deref_mut(), scale);
    }
    total
}

fn averaged(
    model: &EmbeddingModel,
    kbs: &KbRegistry,
    positives: &[Positive],
    cfg: &TrainConfig,
    rng: &mut Rng,
    with_grad: bool,
) -> (f64, Option<Vec<f64>>) {
    let n = positives.len().max(1) as f64;
    let mut grad = with_grad.then(|| vec![0.0; model.params().len()]);
    let sum = sampled_loss_sum(model, kbs, positives, cfg, rng, grad.as_deref_mut(), 1.0 / n);
    (sum / n, grad)
}

/// Raw-triple loss averaged over the batch, sampling negatives and masks from `rng`.
pub fn loss_raw(model: &EmbeddingModel, kbs: &KbRegistry, batch: &[Triple], cfg: &TrainConfig, rng: &mut Rng) -> f64 {
    let pos: Vec<Positive> = batch.iter().map(Positive::from).collect();
    averaged(model, kbs, &pos, cfg, rng, false).0
}

pub fn loss_raw_with_grad(
    model: &EmbeddingModel,
    kbs: &KbRegistry,
    batch: &[Triple],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> (f64, Vec<f64>) {
    let pos: Vec<Positive> = batch.iter().map(Positive::from).collect();
    let (l, g) = averaged(model, kbs, &pos, cfg, rng, true);
    (l, g.expect("requested"))
}

/// Replaced-triple loss: the subject is translated before scoring.
pub fn loss_link(
    model: &EmbeddingModel,
    kbs: &KbRegistry,
    batch: &[ReplacedTriple],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> f64 {
    let pos: Vec<Positive> = batch.iter().map(Positive::from).collect();
    averaged(model, kbs, &pos, cfg, rng, false).0
}

pub fn loss_link_with_grad(
    model: &EmbeddingModel,
    kbs: &KbRegistry,
    batch: &[ReplacedTriple],
    cfg: &TrainConfig,
    rng: &mut Rng,
) -> (f64, Vec<f64>) {
    let pos: Vec<Positive> = batch.iter().map(Positive::from).collect();
    let (l, g) = averaged(model, kbs, &pos, cfg, rng, true);
    (l, g.expect("requested"))
}

/// Dropout-free loss over fixed negatives, averaged over examples.
pub fn contrastive_loss(model: &EmbeddingModel, examples: &[Example], gamma: f64) -> f64 {
    let mut rng = crate::rng::stream(0, "unused", &[]);
    let n = examples.len().max(1) as f64;
    examples
        .iter()
        .map(|ex| example_loss(model, ex, gamma, None, &mut rng, None, 1.0))
        .sum::<f64>()
        / n
}
