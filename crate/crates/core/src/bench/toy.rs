//! Small random KB pairs for smoke tests and learnability checks.

use rand::seq::SliceRandom;
use rand::Rng as _;

use crate::kb::{EntityRef, KbBuilder, KbRegistry, Link, LinkSet, LinkType};
use crate::rng::stream;

#[derive(Clone, Copy, Debug)]
pub struct ToyConfig {
    pub entities: usize,
    pub relations: usize,
    pub triples: usize,
    pub full_links: usize,
    pub partial_links: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        Self {
            entities: 30,
            relations: 3,
            triples: 90,
            full_links: 4,
            partial_links: 4,
            seed: 1,
        }
    }
}

/// Two KBs (ids 1 and 2) of uniformly random triples. The first
/// `full_links + partial_links` entities of each KB are linked pairwise.
pub fn toy_pair(cfg: &ToyConfig) -> (KbRegistry, LinkSet) {
    let mut rng = stream(cfg.seed, "toy", &[]);
    let mut kbs = Vec::new();
    for id in [1u16, 2] {
        let mut b = KbBuilder::new(id);
        for e in 0..cfg.entities {
            b.typed_entity(&format!("k{id}e{e}"), "Thing");
        }
        for r in 0..cfg.relations {
            b.relation(&format!("k{id}r{r}"));
        }
        let max = cfg.entities * cfg.entities * cfg.relations;
        let mut added = 0;
        while added < cfg.triples.min(max) {
            let s = rng.random_range(0..cfg.entities) as u32;
            let o = rng.random_range(0..cfg.entities) as u32;
            let r = rng.random_range(0..cfg.relations) as u32;
            if b.triple(s, r, o) {
                added += 1;
            }
        }
        kbs.push(b.build());
    }
    let mut order: Vec<u32> = (0..cfg.entities as u32).collect();
    order.shuffle(&mut rng);
    let mut links = LinkSet::new();
    for (i, &e) in order.iter().take(cfg.full_links + cfg.partial_links).enumerate() {
        let t = if i < cfg.full_links {
            LinkType::Full
        } else {
            LinkType::Partial
        };
        links.insert(Link::new(EntityRef::new(1, e), EntityRef::new(2, e), t).expect("distinct kbs"));
    }
    (KbRegistry::new(kbs).expect("distinct ids"), links)
}
