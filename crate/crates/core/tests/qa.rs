use multikb::bench::toy::{toy_pair, ToyConfig};
use multikb::config::{QaConfig, TrainConfig};
use multikb::embed::{train_embedding, EmbeddingModel};
use multikb::kb::{EntityRef, KbRegistry, LinkSet, LinkType};
use multikb::qa::{sample_answer_negatives, train_qa, QaExample, QaModel, QuestionRecord, TemplateId, Vocab};
use multikb::rng::{stream, Rng};
use rand::{Rng as _, SeedableRng};

fn small_embedding(seed: u64) -> (KbRegistry, EmbeddingModel) {
    let (reg, _) = toy_pair(&ToyConfig {
        entities: 10,
        relations: 2,
        triples: 25,
        full_links: 2,
        partial_links: 2,
        seed,
    });
    let mut rng = Rng::seed_from_u64(seed);
    let emb = EmbeddingModel::init(&reg, 4, None, &mut rng);
    (reg, emb)
}

fn examples(qa: &QaModel, emb: &EmbeddingModel, seed: u64) -> Vec<QaExample> {
    let universe = QaModel::universe(emb);
    let mut rng = Rng::seed_from_u64(seed);
    ["which entity follows k1e3", "what is linked to k2e1 and k1e0", "k1e4 relation"]
        .iter()
        .enumerate()
        .map(|(i, text)| {
            let topics: Vec<EntityRef> = (0..=i % 2).map(|j| universe[(3 * i + 7 * j) % universe.len()]).collect();
            let answers = vec![universe[(5 * i + 2) % universe.len()], universe[(5 * i + 11) % universe.len()]];
            QaExample {
                tokens: qa.vocab().encode(text),
                topics,
                negatives: sample_answer_negatives(&universe, &answers, 6, &mut rng),
                answers,
            }
        })
        .collect()
}

#[test]
fn encoder_gradient_matches_finite_differences() {
    let (_, emb) = small_embedding(1);
    let vocab = Vocab::build(["which entity follows k1e3", "what is linked to k2e1 and k1e0"]);
    let mut rng = Rng::seed_from_u64(8);
    let mut qa = QaModel::init(vocab, 5, 4, &mut rng);
    for x in qa.params_mut().iter_mut() {
        *x += rng.random_range(-0.3..0.3);
    }
    let batch = examples(&qa, &emb, 2);
    let (_, grad) = qa.loss_with_grad(&emb, &batch, 0.05);
    let eps = 1e-5;
    let (mut diff, mut norm) = (0.0f64, 0.0f64);
    let mut m = qa.clone();
    for i in 0..qa.params().len() {
        let orig = m.params()[i];
        m.params_mut()[i] = orig + eps;
        let up = m.loss(&emb, &batch, 0.05);
        m.params_mut()[i] = orig - eps;
        let down = m.loss(&emb, &batch, 0.05);
        m.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        diff += (numeric - grad[i]).powi(2);
        norm = norm.max(numeric.abs()).max(grad[i].abs());
    }
    let norm_total: f64 = grad.iter().map(|g| g * g).sum::<f64>().sqrt();
    assert!(norm > 0.0);
    assert!(diff.sqrt() / norm_total < 1e-4, "relative error {}", diff.sqrt() / norm_total);
}

#[test]
fn zero_projection_loss_is_ln2_per_target() {
    let (_, emb) = small_embedding(2);
    let vocab = Vocab::build(["which entity follows k1e3", "k1e4 relation"]);
    let mut qa = QaModel::init(vocab, 3, 4, &mut Rng::seed_from_u64(1));
    let tok = qa.token_table().len();
    qa.params_mut()[tok..].fill(0.0);
    let batch = examples(&qa, &emb, 3);
    let per_question: Vec<f64> = batch
        .iter()
        .map(|ex| (ex.topics.len() * (ex.answers.len() + ex.negatives.len())) as f64 * std::f64::consts::LN_2)
        .collect();
    let want = per_question.iter().sum::<f64>() / batch.len() as f64;
    for gamma in [0.0, 0.05, 0.3] {
        assert!((qa.loss(&emb, &batch, gamma) - want).abs() < 1e-12);
    }
}

#[test]
fn negatives_avoid_gold_answers() {
    let universe: Vec<EntityRef> = (0..6).map(|i| EntityRef::new(1, i)).collect();
    let golds = vec![universe[0], universe[4]];
    let mut rng = stream(1, "t", &[]);
    let negs = sample_answer_negatives(&universe, &golds, 500, &mut rng);
    assert_eq!(negs.len(), 500);
    assert!(negs.iter().all(|e| !golds.contains(e)));
    for e in [1, 2, 3, 5] {
        assert!(negs.contains(&universe[e]));
    }
    assert!(sample_answer_negatives(&universe[..1], &golds, 5, &mut rng).is_empty());
}

/// Questions "r<r> of <subject>" over a trained toy embedding.
fn toy_questions(reg: &KbRegistry) -> Vec<QuestionRecord> {
    let mut out = Vec::new();
    for kb in reg.iter() {
        for s in 0..kb.entity_count() as u32 {
            let subject = EntityRef::new(kb.id(), s);
            for r in 0..kb.relation_count() as u32 {
                let answers: Vec<EntityRef> = kb.neighbors(subject, r).unwrap();
                if answers.is_empty() {
                    continue;
                }
                out.push(QuestionRecord {
                    id: format!("q{}", out.len()),
                    text: format!("what is the {} of {}", kb.relation_name(r), kb.entity_name(subject)),
                    topic_entities: vec![subject],
                    answers,
                    template: TemplateId::T1,
                    link_type: LinkType::Full,
                });
            }
        }
    }
    out
}

fn trained_toy() -> (KbRegistry, EmbeddingModel) {
    let (pair, _) = toy_pair(&ToyConfig::default());
    let reg = KbRegistry::new(vec![pair.kb(1).unwrap().clone()]).unwrap();
    let cfg = TrainConfig {
        h: 16,
        n_kbe: 150,
        n_warm: 0,
        k_kbe: 100,
        batch_kbe: 32,
        lr_kbe: 0.03,
        p_kbe: 0.0,
        seed: 3,
        ..TrainConfig::default()
    };
    let (emb, _) = train_embedding(&reg, &LinkSet::new(), &cfg).unwrap();
    (reg, emb)
}

fn qa_cfg(epochs: usize) -> QaConfig {
    QaConfig {
        d: 16,
        n_qa: epochs,
        lr_qa: 0.01,
        k_qa: 30,
        batch_qa: 16,
        seed: 5,
        ..QaConfig::default()
    }
}

#[test]
fn qa_training_learns_relation_words_and_leaves_the_embedding_alone() {
    let (reg, emb) = trained_toy();
    let before = emb.params().to_vec();
    let qs = toy_questions(&reg);
    let (train, dev): (Vec<_>, Vec<_>) = qs.into_iter().enumerate().partition(|(i, _)| i % 5 != 0);
    let train: Vec<QuestionRecord> = train.into_iter().map(|x| x.1).collect();
    let dev: Vec<QuestionRecord> = dev.into_iter().map(|x| x.1).collect();
    let (qa, report) = train_qa(&emb, &train, &dev, &qa_cfg(60)).unwrap();
    assert!(emb.params().iter().zip(&before).all(|(a, b)| a.to_bits() == b.to_bits()));
    // ranking with the true relation vector scores about 0.94 here; chance is about 0.13
    assert!(report.best_dev_mrr > 0.8, "dev MRR {}", report.best_dev_mrr);
    let best = report.best_epoch.unwrap();
    assert!(report.dev_mrr_history.iter().all(|(_, m)| *m <= report.best_dev_mrr));
    assert_eq!(report.dev_mrr_history[best].1, report.best_dev_mrr);
    let ranks = multikb::qa::gold_ranks(&qa, &emb, &dev, &QaModel::universe(&emb)).unwrap();
    assert!((multikb::eval::mrr(&ranks) - report.best_dev_mrr).abs() < 1e-12);
}

#[test]
fn qa_training_is_deterministic() {
    let (reg, emb) = trained_toy();
    let qs = toy_questions(&reg);
    let (a, ra) = train_qa(&emb, &qs[..40], &qs[40..50], &qa_cfg(3)).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(3).build().unwrap();
    let (b, rb) = pool.install(|| train_qa(&emb, &qs[..40], &qs[40..50], &qa_cfg(3)).unwrap());
    assert_eq!(ra, rb);
    assert!(a.params().iter().zip(b.params()).all(|(x, y)| x.to_bits() == y.to_bits()));
}

#[test]
fn questions_outside_the_embedding_are_rejected() {
    let (reg, emb) = small_embedding(3);
    let mut qs = toy_questions(&reg);
    qs[0].answers.push(EntityRef::new(9, 0));
    assert!(matches!(
        train_qa(&emb, &qs, &[], &qa_cfg(1)),
        Err(multikb::Error::UnknownEntity(_))
    ));
}

