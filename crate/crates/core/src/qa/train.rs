use rand::seq::SliceRandom;
use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::model::{QaExample, QaModel};
use super::record::QuestionRecord;
use super::text::Vocab;
use crate::config::QaConfig;
use crate::embed::EmbeddingModel;
use crate::error::{Error, Result};
use crate::eval::{gold_rank, mrr};
use crate::kb::EntityRef;
use crate::optim::{Adam, ParamGroup};
use crate::rng::{stream, Rng};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct QaReport {
    pub epochs: usize,
    pub steps: u64,
    pub vocab_size: usize,
    pub epoch_loss: Vec<f64>,
    /// `(epoch, dev MRR)` after every epoch.
    pub dev_mrr_history: Vec<(usize, f64)>,
    pub best_epoch: Option<usize>,
    pub best_dev_mrr: f64,
}

/// `k` uniform draws from `universe`, skipping gold answers.
pub fn sample_answer_negatives(universe: &[EntityRef], golds: &[EntityRef], k: usize, rng: &mut Rng) -> Vec<EntityRef> {
    if universe.iter().all(|e| golds.contains(e)) {
        return Vec::new();
    }
    let mut out = Vec::with_capacity(k);
    while out.len() < k {
        let e = universe[rng.random_range(0..universe.len())];
        if !golds.contains(&e) {
            out.push(e);
        }
    }
    out
}

/// Best gold rank of each question against `candidates`, in input order.
pub fn gold_ranks(
    qa: &QaModel,
    emb: &EmbeddingModel,
    questions: &[QuestionRecord],
    candidates: &[EntityRef],
) -> Result<Vec<Option<usize>>> {
    questions
        .par_iter()
        .map(|q| Ok(gold_rank(&qa.rank_answers(emb, q, candidates)?, &q.answers)))
        .collect()
}

fn check_refs(emb: &EmbeddingModel, qs: &[QuestionRecord]) -> Result<()> {
    for q in qs {
        q.validate()?;
        for &e in q.topic_entities.iter().chain(&q.answers) {
            if !emb.covers(e) {
                return Err(Error::UnknownEntity(format!(
                    "question {} refers to {e:?}, which the embedding does not cover",
                    q.id
                )));
            }
        }
    }
    Ok(())
}

/// Fit a question encoder against a frozen embedding, keeping the encoder
/// with the highest dev MRR over every entity the embedding covers. With no
/// dev questions the training questions select the checkpoint.
pub fn train_qa(
    emb: &EmbeddingModel,
    train: &[QuestionRecord],
    dev: &[QuestionRecord],
    cfg: &QaConfig,
) -> Result<(QaModel, QaReport)> {
    cfg.validate()?;
    if train.is_empty() {
        return Err(Error::domain("no training questions"));
    }
    check_refs(emb, train)?;
    check_refs(emb, dev)?;
    let vocab = Vocab::build(train.iter().map(|q| q.text.as_str()));
    let mut model = QaModel::init(vocab, cfg.d, emb.h(), &mut stream(cfg.seed, "qa-init", &[]));
    let universe = QaModel::universe(emb);
    let tokens: Vec<Vec<u32>> = train.iter().map(|q| model.vocab().encode(&q.text)).collect();
    let select = if dev.is_empty() { train } else { dev };

    let len = model.params().len();
    let mut adam = Adam::new(len, cfg.beta1, cfg.beta2, cfg.eps, vec![ParamGroup { range: 0..len, lr: cfg.lr_qa }]);
    let mut report = QaReport {
        vocab_size: model.vocab().len(),
        best_dev_mrr: f64::NEG_INFINITY,
        ..QaReport::default()
    };
    let mut best = model.clone();
    let mut order: Vec<usize> = (0..train.len()).collect();
    for epoch in 0..cfg.n_qa {
        order.shuffle(&mut stream(cfg.seed, "qa-shuffle", &[epoch as u64]));
        let mut total = 0.0;
        let mut batches = 0usize;
        for batch in order.chunks(cfg.batch_qa) {
            let examples: Vec<QaExample> = batch
                .iter()
                .map(|&i| {
                    let q = &train[i];
                    let mut rng = stream(cfg.seed, "qa-negatives", &[epoch as u64, i as u64]);
                    QaExample {
                        tokens: tokens[i].clone(),
                        topics: q.topic_entities.clone(),
                        answers: q.answers.clone(),
                        negatives: sample_answer_negatives(&universe, &q.answers, cfg.k_qa, &mut rng),
                    }
                })
                .collect();
            let (loss, grad) = model.loss_with_grad(emb, &examples, cfg.gamma_qa);
            if !loss.is_finite() {
                return Err(Error::Diverged(format!("question loss became {loss} in epoch {epoch}")));
            }
            adam.step(model.params_mut(), &grad);
            total += loss;
            batches += 1;
        }
        report.epoch_loss.push(total / batches as f64);
        let score = mrr(&gold_ranks(&model, emb, select, &universe)?);
        report.dev_mrr_history.push((epoch, score));
        if score > report.best_dev_mrr {
            report.best_dev_mrr = score;
            report.best_epoch = Some(epoch);
            best = model.clone();
        }
        log::debug!("qa epoch {epoch}: loss {:.5} dev mrr {score:.4}", total / batches as f64);
    }
    report.epochs = cfg.n_qa;
    report.steps = adam.steps();
    if report.best_epoch.is_none() {
        report.best_dev_mrr = 0.0;
    }
    Ok((best, report))
}
