use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::record::QuestionRecord;
use super::text::Vocab;
use crate::embed::{bce_logit, grad_first, product, sigmoid, EmbeddingModel};
use crate::error::{Error, Result};
use crate::kb::{EntityRef, KbId};
use crate::rng::Rng;

/// Mean-of-token-embeddings question encoder followed by an affine map into
/// the embedding's packed complex space.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaModel {
    pub(crate) vocab: Vocab,
    pub(crate) d: usize,
    pub(crate) h: usize,
    #[serde(skip)]
    pub(crate) params: Vec<f64>,
}

/// One training question with its negatives drawn.
#[derive(Clone, Debug, PartialEq)]
pub struct QaExample {
    pub tokens: Vec<u32>,
    pub topics: Vec<EntityRef>,
    pub answers: Vec<EntityRef>,
    pub negatives: Vec<EntityRef>,
}

impl QaModel {
    /// Token embeddings ~ N(0, 1), projection ~ N(0, 1/d), zero bias.
    pub fn init(vocab: Vocab, d: usize, h: usize, rng: &mut Rng) -> Self {
        let mut m = Self {
            vocab,
            d,
            h,
            params: Vec::new(),
        };
        m.params = vec![0.0; m.param_len()];
        let tok = Normal::new(0.0, 1.0).expect("finite std");
        let proj = Normal::new(0.0, (1.0 / d as f64).sqrt()).expect("finite std");
        let (t, rest) = m.params.split_at_mut(m.vocab.len() * d);
        for x in t {
            *x = tok.sample(rng);
        }
        for x in &mut rest[..2 * h * d] {
            *x = proj.sample(rng);
        }
        m
    }

    pub(crate) fn param_len(&self) -> usize {
        self.vocab.len() * self.d + 2 * self.h * self.d + 2 * self.h
    }

    fn proj_offset(&self) -> usize {
        self.vocab.len() * self.d
    }

    fn bias_offset(&self) -> usize {
        self.proj_offset() + 2 * self.h * self.d
    }

    pub fn vocab(&self) -> &Vocab {
        &self.vocab
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn h(&self) -> usize {
        self.h
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    /// Token embedding table, vocab x d, row-major.
    pub fn token_table(&self) -> &[f64] {
        &self.params[..self.proj_offset()]
    }

    /// Projection weights, 2h x d, row-major, followed by the bias.
    pub fn projection(&self) -> (&[f64], &[f64]) {
        (
            &self.params[self.proj_offset()..self.bias_offset()],
            &self.params[self.bias_offset()..],
        )
    }

    fn mean_embedding(&self, tokens: &[u32]) -> Vec<f64> {
        let d = self.d;
        let mut m = vec![0.0; d];
        for &t in tokens {
            let row = &self.params[t as usize * d..(t as usize + 1) * d];
            for (a, b) in m.iter_mut().zip(row) {
                *a += b;
            }
        }
        let n = tokens.len().max(1) as f64;
        m.iter_mut().for_each(|x| *x /= n);
        m
    }

    /// Question vector from token ids.
    pub fn encode_tokens(&self, tokens: &[u32]) -> Vec<f64> {
        let mean = self.mean_embedding(tokens);
        let (w, b) = self.projection();
        b.iter()
            .enumerate()
            .map(|(r, bias)| bias + w[r * self.d..(r + 1) * self.d].iter().zip(&mean).map(|(x, y)| x * y).sum::<f64>())
            .collect()
    }

    pub fn encode_question(&self, text: &str) -> Vec<f64> {
        self.encode_tokens(&self.vocab.encode(text))
    }

    fn check(&self, emb: &EmbeddingModel) -> Result<()> {
        if emb.h() != self.h {
            return Err(Error::domain(format!(
                "question encoder targets h = {} but the embedding has h = {}",
                self.h,
                emb.h()
            )));
        }
        Ok(())
    }

    /// Every entity the embedding covers, ordered by (kb, local).
    pub fn universe(emb: &EmbeddingModel) -> Vec<EntityRef> {
        emb.layout()
            .kbs
            .iter()
            .flat_map(|s| (0..s.entities as u32).map(move |i| EntityRef::new(s.kb, i)))
            .collect()
    }

    /// Entities of the listed KBs only.
    pub fn universe_of(emb: &EmbeddingModel, kbs: &[KbId]) -> Vec<EntityRef> {
        Self::universe(emb).into_iter().filter(|e| kbs.contains(&e.kb)).collect()
    }

    /// `sigmoid(ComplEx(h_e, h_q, h_a))`.
    pub fn score_answer(&self, emb: &EmbeddingModel, e: EntityRef, hq: &[f64], a: EntityRef) -> Result<f64> {
        self.check(emb)?;
        let s = crate::embed::complex_score(emb.entity_vec(e)?, hq, emb.entity_vec(a)?)?;
        Ok(sigmoid(s))
    }

    /// Candidates by mean likelihood over topic entities, best first; ties go
    /// to the smaller `(kb, local)`.
    pub fn rank_answers(
        &self,
        emb: &EmbeddingModel,
        q: &QuestionRecord,
        candidates: &[EntityRef],
    ) -> Result<Vec<(EntityRef, f64)>> {
        self.check(emb)?;
        let hq = self.encode_question(&q.text);
        rank_with_vector(emb, &hq, &q.topic_entities, candidates)
    }

    pub(crate) fn example_loss(
        &self,
        emb: &EmbeddingModel,
        ex: &QaExample,
        gamma: f64,
        grad: Option<&mut [f64]>,
        scale: f64,
    ) -> f64 {
        let dim = 2 * self.h;
        let mean = self.mean_embedding(&ex.tokens);
        let hq = self.encode_tokens(&ex.tokens);
        let mut g_q = vec![0.0; dim];
        let mut loss = 0.0;
        let want_grad = grad.is_some();
        let mut eq = vec![0.0; dim];
        for &e in &ex.topics {
            let ev = emb.entity_unchecked(e);
            product(ev, &hq, &mut eq);
            let mut upstream = vec![0.0; dim];
            let targets = ex
                .answers
                .iter()
                .map(|&a| (a, 1.0 - gamma))
                .chain(ex.negatives.iter().map(|&a| (a, gamma)));
            for (a, y) in targets {
                let av = emb.entity_unchecked(a);
                let s: f64 = eq.iter().zip(av).map(|(x, z)| x * z).sum();
                loss += bce_logit(s, y);
                if want_grad {
                    let g = scale * (sigmoid(s) - y);
                    upstream.iter_mut().zip(av).for_each(|(u, z)| *u += g * z);
                }
            }
            if want_grad {
                grad_first(ev, &upstream, 1.0, &mut g_q);
            }
        }
        if let Some(grad) = grad {
            let d = self.d;
            let (po, bo) = (self.proj_offset(), self.bias_offset());
            let mut g_mean = vec![0.0; d];
            for (r, &g) in g_q.iter().enumerate() {
                grad[bo + r] += g;
                let row = &self.params[po + r * d..po + (r + 1) * d];
                for c in 0..d {
                    grad[po + r * d + c] += g * mean[c];
                    g_mean[c] += g * row[c];
                }
            }
            let n = ex.tokens.len().max(1) as f64;
            for &t in &ex.tokens {
                let off = t as usize * d;
                for c in 0..d {
                    grad[off + c] += g_mean[c] / n;
                }
            }
        }
        loss
    }

    /// Batch loss, averaged over questions and summed over each question's
    /// topic entities, gold answers and negatives.
    pub fn loss(&self, emb: &EmbeddingModel, batch: &[QaExample], gamma: f64) -> f64 {
        let n = batch.len().max(1) as f64;
        batch.iter().map(|ex| self.example_loss(emb, ex, gamma, None, 1.0)).sum::<f64>() / n
    }

    pub fn loss_with_grad(&self, emb: &EmbeddingModel, batch: &[QaExample], gamma: f64) -> (f64, Vec<f64>) {
        let n = batch.len().max(1) as f64;
        let mut grad = vec![0.0; self.params.len()];
        let total: f64 = batch
            .iter()
            .map(|ex| self.example_loss(emb, ex, gamma, Some(&mut grad), 1.0 / n))
            .sum();
        (total / n, grad)
    }
}

/// Rank `candidates` for a precomputed question vector.
pub fn rank_with_vector(
    emb: &EmbeddingModel,
    hq: &[f64],
    topics: &[EntityRef],
    candidates: &[EntityRef],
) -> Result<Vec<(EntityRef, f64)>> {
    if topics.is_empty() {
        return Err(Error::domain("a question needs at least one topic entity"));
    }
    if hq.len() != 2 * emb.h() {
        return Err(Error::domain(format!(
            "question vector has {} reals, expected {}",
            hq.len(),
            2 * emb.h()
        )));
    }
    let dim = hq.len();
    let mut eqs = Vec::with_capacity(topics.len());
    for &e in topics {
        let mut eq = vec![0.0; dim];
        product(emb.entity_vec(e)?, hq, &mut eq);
        eqs.push(eq);
    }
    let n = topics.len() as f64;
    let mut scored = Vec::with_capacity(candidates.len());
    for &a in candidates {
        let av = emb.entity_vec(a)?;
        let (mut lambda, mut logit) = (0.0, 0.0);
        for eq in &eqs {
            let s: f64 = eq.iter().zip(av).map(|(x, z)| x * z).sum();
            lambda += sigmoid(s);
            logit += s;
        }
        scored.push((a, lambda / n, logit / n));
    }
    // a saturated sigmoid rounds to exactly 1 or 0; the mean logit keeps those apart
    scored.sort_by(|x, y| y.1.total_cmp(&x.1).then(y.2.total_cmp(&x.2)).then(x.0.cmp(&y.0)));
    let out = scored.into_iter().map(|(a, l, _)| (a, l)).collect();
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::{KbBuilder, KbRegistry, LinkType};
    use crate::qa::record::TemplateId;
    use rand::{Rng as _, SeedableRng};

    fn setup() -> (EmbeddingModel, QaModel) {
        let mut b = KbBuilder::new(1);
        for i in 0..5 {
            b.named_triple(&format!("e{i}"), "r", &format!("e{}", (i + 1) % 5));
        }
        let reg = KbRegistry::new(vec![b.build()]).unwrap();
        let mut rng = Rng::seed_from_u64(2);
        let emb = EmbeddingModel::init(&reg, 2, None, &mut rng);
        let qa = QaModel::init(Vocab::build(["what is x", "who y"]), 3, 2, &mut rng);
        (emb, qa)
    }

    fn question(text: &str, topics: Vec<EntityRef>) -> QuestionRecord {
        QuestionRecord {
            id: "q".into(),
            text: text.into(),
            topic_entities: topics,
            answers: vec![EntityRef::new(1, 0)],
            template: TemplateId::T1,
            link_type: LinkType::Full,
        }
    }

    #[test]
    fn one_token_is_its_projection_and_repeats_do_not_matter() {
        let (_, qa) = setup();
        let id = qa.vocab().id("x");
        let row = &qa.token_table()[id as usize * 3..id as usize * 3 + 3];
        let (w, b) = qa.projection();
        let want: Vec<f64> = (0..4)
            .map(|r| b[r] + (0..3).map(|c| w[r * 3 + c] * row[c]).sum::<f64>())
            .collect();
        assert_eq!(qa.encode_question("x"), want);
        let twice = qa.encode_question("x x");
        for (a, b) in twice.iter().zip(&want) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_question_vector_scores_one_half() {
        let (emb, qa) = setup();
        let s = qa
            .score_answer(&emb, EntityRef::new(1, 0), &[0.0; 4], EntityRef::new(1, 3))
            .unwrap();
        assert_eq!(s, 0.5);
        assert!(qa.score_answer(&emb, EntityRef::new(1, 9), &[0.0; 4], EntityRef::new(1, 3)).is_err());
    }

    #[test]
    fn swapping_topic_and_answer_changes_the_score() {
        let (emb, qa) = setup();
        let hq = qa.encode_question("what is x");
        let (e, a) = (EntityRef::new(1, 1), EntityRef::new(1, 2));
        let fwd = qa.score_answer(&emb, e, &hq, a).unwrap();
        let back = qa.score_answer(&emb, a, &hq, e).unwrap();
        assert!((fwd - back).abs() > 1e-9);
    }

    #[test]
    fn two_topic_ranking_is_the_mean_of_two_score_tables() {
        let (emb, qa) = setup();
        let all = QaModel::universe(&emb);
        let topics = vec![EntityRef::new(1, 0), EntityRef::new(1, 3)];
        let q = question("who y", topics.clone());
        let hq = qa.encode_question(&q.text);
        let ranked = qa.rank_answers(&emb, &q, &all).unwrap();
        for (a, got) in &ranked {
            let s0 = qa.score_answer(&emb, topics[0], &hq, *a).unwrap();
            let s1 = qa.score_answer(&emb, topics[1], &hq, *a).unwrap();
            assert!((got - (s0 + s1) / 2.0).abs() < 1e-12);
            assert!(s0.min(s1) <= *got + 1e-15 && *got <= s0.max(s1) + 1e-15);
        }
        for w in ranked.windows(2) {
            assert!(w[0].1 >= w[1].1);
        }
        // a single topic reproduces the plain score ordering
        let single = qa.rank_answers(&emb, &question("who y", vec![topics[0]]), &all).unwrap();
        let mut by_score: Vec<(EntityRef, f64)> = all
            .iter()
            .map(|&a| (a, qa.score_answer(&emb, topics[0], &hq, a).unwrap()))
            .collect();
        by_score.sort_by(|x, y| y.1.total_cmp(&x.1).then(x.0.cmp(&y.0)));
        assert_eq!(single, by_score);
    }

    #[test]
    fn restriction_and_permutation_preserve_order() {
        let (emb, qa) = setup();
        let all = QaModel::universe(&emb);
        let q = question("what is x", vec![EntityRef::new(1, 2)]);
        let full = qa.rank_answers(&emb, &q, &all).unwrap();
        let mut rng = Rng::seed_from_u64(5);
        let subset: Vec<EntityRef> = all.iter().copied().filter(|_| rng.random_bool(0.6)).collect();
        let mut shuffled = subset.clone();
        shuffled.reverse();
        let part = qa.rank_answers(&emb, &q, &shuffled).unwrap();
        let expected: Vec<(EntityRef, f64)> = full.into_iter().filter(|(e, _)| subset.contains(e)).collect();
        assert_eq!(part, expected);
    }

    #[test]
    fn ties_break_by_entity() {
        let (mut emb, qa) = setup();
        emb.params_mut().fill(0.0);
        let all = QaModel::universe(&emb);
        let ranked = qa.rank_answers(&emb, &question("x", vec![EntityRef::new(1, 0)]), &all).unwrap();
        let order: Vec<EntityRef> = ranked.iter().map(|r| r.0).collect();
        assert_eq!(order, all);
    }
}
