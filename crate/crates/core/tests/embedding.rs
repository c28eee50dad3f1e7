use multikb::bench::toy::{toy_pair, ToyConfig};
use multikb::config::TrainConfig;
use multikb::embed::{
    build_replace_sets, loss_link_with_grad, loss_raw_with_grad, sigmoid, train_embedding, train_plug_in, EmbeddingModel,
    ReplacedTriple,
};
use multikb::kb::{EntityRef, KbRegistry, LinkSet, LinkType, Triple};
use multikb::rng::{stream, Rng};
use rand::{Rng as _, SeedableRng};

fn small_cfg() -> TrainConfig {
    TrainConfig {
        h: 4,
        k_kbe: 5,
        p_kbe: 0.3,
        gamma_kbe: 0.1,
        ..TrainConfig::default()
    }
}

fn randomized_model(reg: &KbRegistry, hidden: Option<usize>, seed: u64) -> EmbeddingModel {
    let mut rng = Rng::seed_from_u64(seed);
    let mut m = EmbeddingModel::init(reg, 4, hidden, &mut rng);
    let r = m.layout().translator_range();
    for x in &mut m.params_mut()[r] {
        *x = rng.random_range(-0.6..0.6);
    }
    m
}

/// Relative error of the analytic gradient over one parameter block.
fn block_error<F: Fn(&EmbeddingModel) -> f64>(
    model: &EmbeddingModel,
    analytic: &[f64],
    range: std::ops::Range<usize>,
    loss: F,
) -> f64 {
    let eps = 1e-5;
    let mut diff = 0.0;
    let mut norm_a = 0.0;
    let mut norm_n = 0.0;
    let mut m = model.clone();
    for i in range.clone() {
        let orig = m.params()[i];
        m.params_mut()[i] = orig + eps;
        let up = loss(&m);
        m.params_mut()[i] = orig - eps;
        let down = loss(&m);
        m.params_mut()[i] = orig;
        let numeric = (up - down) / (2.0 * eps);
        diff += (numeric - analytic[i]).powi(2);
        norm_a += analytic[i].powi(2);
        norm_n += numeric.powi(2);
    }
    let scale = norm_a.sqrt().max(norm_n.sqrt());
    assert!(scale > 1e-8, "gradient block {range:?} is identically zero");
    diff.sqrt() / scale
}

fn check_all_blocks(hidden: Option<usize>) {
    let (reg, links) = toy_pair(&ToyConfig {
        entities: 8,
        relations: 2,
        triples: 20,
        full_links: 2,
        partial_links: 2,
        seed: 4,
    });
    let cfg = TrainConfig {
        translator_hidden: hidden,
        ..small_cfg()
    };
    let model = randomized_model(&reg, hidden, 7);
    let raw: Vec<Triple> = reg.kb(1).unwrap().triples()[..6].to_vec();
    let all = build_replace_sets(&reg, &links, 1);
    // three entries scored in each kb
    let replaced: Vec<ReplacedTriple> = [1u16, 2]
        .iter()
        .flat_map(|&kb| all.iter().filter(move |r| r.object.kb == kb).take(3).copied())
        .collect();
    assert!(replaced.iter().any(|r| r.link_type == LinkType::Full));
    assert!(replaced.iter().any(|r| r.link_type == LinkType::Partial));

    let raw_loss = |m: &EmbeddingModel| loss_raw_with_grad(m, &reg, &raw, &cfg, &mut stream(5, "g", &[])).0;
    let (_, g_raw) = loss_raw_with_grad(&model, &reg, &raw, &cfg, &mut stream(5, "g", &[]));
    let l = model.layout();
    for range in [l.entity_range(1), l.relation_range(1)] {
        let err = block_error(&model, &g_raw, range, raw_loss);
        assert!(err < 1e-4, "raw loss gradient error {err}");
    }

    let link_loss = |m: &EmbeddingModel| loss_link_with_grad(m, &reg, &replaced, &cfg, &mut stream(6, "g", &[])).0;
    let (_, g_link) = loss_link_with_grad(&model, &reg, &replaced, &cfg, &mut stream(6, "g", &[]));
    for range in [
        l.entity_range(1),
        l.entity_range(2),
        l.relation_range(1),
        l.relation_range(2),
        l.link_type_range(),
        l.translator_range(),
    ] {
        let err = block_error(&model, &g_link, range.clone(), link_loss);
        assert!(err < 1e-4, "link loss gradient error {err} on {range:?}");
    }
}

#[test]
fn analytic_gradients_match_finite_differences() {
    check_all_blocks(None);
}

#[test]
fn hidden_layer_translator_gradients_match_finite_differences() {
    check_all_blocks(Some(5));
}

#[test]
fn score_replaced_is_translation_then_likelihood() {
    let (reg, _) = toy_pair(&ToyConfig::default());
    let m = randomized_model(&reg, None, 2);
    let rt = ReplacedTriple {
        new_subject: EntityRef::new(2, 3),
        subject: EntityRef::new(1, 3),
        relation: 1,
        object: EntityRef::new(1, 5),
        link_type: LinkType::Partial,
    };
    let translated = m.translate(m.entity_vec(rt.new_subject).unwrap(), rt.link_type).unwrap();
    let r = m.relation_vec(1, 1).unwrap();
    let want = sigmoid(multikb::embed::complex_score(&translated, r, m.entity_vec(rt.object).unwrap()).unwrap());
    assert_eq!(m.score_replaced(&rt).unwrap(), want);
    let full = ReplacedTriple {
        link_type: LinkType::Full,
        ..rt
    };
    assert_ne!(m.score_replaced(&full).unwrap(), want);
}

fn toy_train_cfg(epochs: usize) -> TrainConfig {
    TrainConfig {
        h: 16,
        n_kbe: epochs,
        n_warm: 10,
        k_kbe: 100,
        batch_kbe: 32,
        lr_kbe: 0.03,
        lr_trans: 0.005,
        // memorizing random triples: dropout only slows it down
        p_kbe: 0.0,
        seed: 3,
        ..TrainConfig::default()
    }
}

#[test]
fn toy_pair_is_learnable() {
    let (reg, links) = toy_pair(&ToyConfig::default());
    let cfg = toy_train_cfg(200);
    let (model, report) = train_embedding(&reg, &links, &cfg).unwrap();
    assert!(report.best_mrr >= 0.8, "training MRR {}", report.best_mrr);

    let mut rng = stream(99, "eval-negatives", &[]);
    let (mut pos, mut neg, mut n_pos, mut n_neg) = (0.0, 0.0, 0usize, 0usize);
    for kb in reg.iter() {
        for t in kb.triples() {
            pos += model.triple_likelihood(t.subject, t.relation, t.object).unwrap();
            n_pos += 1;
            for o in multikb::embed::sample_negatives(kb, t.subject, t.relation, 10, &mut rng) {
                neg += model.triple_likelihood(t.subject, t.relation, o).unwrap();
                n_neg += 1;
            }
        }
    }
    let gap = pos / n_pos as f64 - neg / n_neg as f64;
    assert!(gap >= 0.3, "likelihood gap {gap}");
    // checkpoints only ever replace a worse one
    for w in report.checkpoints.windows(2) {
        assert!(w[1].1 > w[0].1);
    }
}

#[test]
fn training_is_bit_reproducible_across_thread_counts() {
    let (reg, links) = toy_pair(&ToyConfig::default());
    let cfg = toy_train_cfg(8);
    let run = |threads: usize| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
        pool.install(|| train_embedding(&reg, &links, &cfg).unwrap())
    };
    let (a, ra) = run(1);
    let (b, rb) = run(4);
    assert!(a.params().iter().zip(b.params()).all(|(x, y)| x.to_bits() == y.to_bits()));
    assert_eq!(ra, rb);
}

#[test]
fn without_links_the_translator_never_moves() {
    let (reg, _) = toy_pair(&ToyConfig::default());
    let cfg = toy_train_cfg(3);
    let (model, report) = train_embedding(&reg, &LinkSet::new(), &cfg).unwrap();
    assert_eq!(report.replaced_triples, 0);
    let mut rng = stream(cfg.seed, "kbe-init", &[]);
    let init = EmbeddingModel::init(&reg, cfg.h, None, &mut rng);
    let r = model.layout().translator_range();
    assert_eq!(model.params()[r.clone()], init.params()[r]);
    let r = model.layout().link_type_range();
    assert_eq!(model.params()[r.clone()], init.params()[r]);
}

#[test]
fn plug_in_freezes_the_base_kb() {
    let (reg, links) = toy_pair(&ToyConfig::default());
    let cfg = toy_train_cfg(5);
    let base = KbRegistry::new(vec![reg.kb(1).unwrap().clone()]).unwrap();
    let (frozen, _) = train_embedding(&base, &LinkSet::new(), &cfg).unwrap();
    let (plugged, report) = train_plug_in(&frozen, &reg, &links, &cfg).unwrap();
    for range in [frozen.layout().entity_range(1), frozen.layout().relation_range(1)] {
        let a = &frozen.params()[range.clone()];
        let b = &plugged.params()[range];
        assert!(a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    }
    let kb2 = reg.kb(2).unwrap();
    let r21 = build_replace_sets(&reg, &links, cfg.k_pl)
        .iter()
        .filter(|r| r.object.kb == 2)
        .count();
    assert_eq!(report.plugged_triples, kb2.triple_count());
    assert_eq!(report.plugged_replaced_weighted, r21);
    assert_eq!(report.train.raw_triples + report.train.replaced_triples, kb2.triple_count() + r21);
    let joint = reg.triple_count() + build_replace_sets(&reg, &links, cfg.k_pl).len();
    assert!((report.weighted_ratio() - (kb2.triple_count() + r21) as f64 / joint as f64).abs() < 1e-12);

    // the same namespace twice is refused
    assert!(train_plug_in(&plugged, &reg, &links, &cfg).is_err());
}
