//! Typed random KB pairs with planted full and partial links.

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::names::NameGen;
use crate::config::GenConfig;
use crate::error::{Error, Result};
use crate::kb::{EntityRef, Kb, KbBuilder, KbRegistry, Link, LinkSet, LinkType};
use crate::rng::{stream, Rng};

pub const KB1: u16 = 1;
pub const KB2: u16 = 2;

/// Entity types of the sector KB and their shares.
const KB1_TYPES: &[(&str, f64)] = &[
    ("Concept_Sector", 0.30),
    ("Supply_Chain", 0.15),
    ("Industry", 0.20),
    ("Product", 0.20),
    ("Company", 0.15),
];

/// Entity types of the company KB and their shares.
const KB2_TYPES: &[(&str, f64)] = &[
    ("Company", 0.35),
    ("Product", 0.25),
    ("Industry", 0.20),
    ("Person", 0.20),
];

const KB1_RELATIONS: &[(&str, &str, &str)] = &[
    ("constituent", "Concept_Sector", "Company"),
    ("featured", "Concept_Sector", "Product"),
    ("covers", "Concept_Sector", "Industry"),
    ("adjacent", "Concept_Sector", "Concept_Sector"),
    ("feeds", "Industry", "Industry"),
    ("segment", "Supply_Chain", "Industry"),
    ("yields", "Industry", "Product"),
    ("material", "Product", "Product"),
    ("maker", "Product", "Company"),
    ("leader", "Industry", "Company"),
    ("concept", "Company", "Concept_Sector"),
    ("stage", "Industry", "Supply_Chain"),
];

const KB2_RELATIONS: &[(&str, &str, &str)] = &[
    ("subsidiary", "Company", "Company"),
    ("chief", "Company", "Person"),
    ("founder", "Company", "Person"),
    ("sells", "Company", "Product"),
    ("operates", "Company", "Industry"),
    ("component", "Product", "Product"),
    ("category", "Product", "Industry"),
    ("supplier", "Company", "Company"),
    ("rival", "Company", "Company"),
    ("invests", "Person", "Company"),
    ("expertise", "Person", "Industry"),
    ("neighbor", "Industry", "Industry"),
];

/// Same-type pairs joined by full links, in round-robin order.
const FULL_TYPES: &[&str] = &["Industry", "Product", "Company"];

/// Cross-type pairs joined by partial links, in round-robin order.
const PARTIAL_TYPES: &[(&str, &str)] = &[
    ("Concept_Sector", "Company"),
    ("Concept_Sector", "Product"),
    ("Concept_Sector", "Industry"),
    ("Concept_Sector", "Person"),
    ("Supply_Chain", "Industry"),
];

/// Relation name shared by both KBs in the merge-failure scenario.
pub const UPSTREAM: &str = "upstream";
const PLANTED_PRODUCTS: usize = 3;
const PLANTED_INDUSTRIES: usize = 2;

/// A product of KB1 partially linked to an industry of KB2, each with its
/// own `upstream` facts.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedPair {
    pub product: EntityRef,
    pub industry: EntityRef,
}

#[derive(Clone, Debug)]
pub struct SyntheticPair {
    pub kbs: KbRegistry,
    pub links: LinkSet,
    pub planted: Vec<PlantedPair>,
}

struct Draft {
    types: Vec<&'static str>,
    names: Vec<String>,
    relations: Vec<(String, &'static str, &'static str)>,
    triples: Vec<(u32, u32, u32)>,
}

impl Draft {
    fn of_type(&self, t: &str) -> Vec<u32> {
        (0..self.types.len() as u32).filter(|&e| self.types[e as usize] == t).collect()
    }

    fn build(&self, id: u16) -> Kb {
        let mut b = KbBuilder::new(id);
        for (n, t) in self.names.iter().zip(&self.types) {
            b.typed_entity(n, t);
        }
        for (name, _, _) in &self.relations {
            b.relation(name);
        }
        for &(s, r, o) in &self.triples {
            b.triple(s, r, o);
        }
        b.build()
    }
}

fn allocate_types(n: usize, shares: &[(&'static str, f64)], rng: &mut Rng) -> Vec<&'static str> {
    let mut counts: Vec<usize> = shares.iter().map(|(_, w)| (w * n as f64).floor() as usize).collect();
    let (k, mut i) = (counts.len(), 0);
    while counts.iter().sum::<usize>() < n {
        counts[i % k] += 1;
        i += 1;
    }
    let mut types: Vec<&'static str> = shares
        .iter()
        .zip(&counts)
        .flat_map(|((t, _), &c)| std::iter::repeat_n(*t, c))
        .collect();
    types.shuffle(rng);
    types
}

fn relation_table(table: &[(&'static str, &'static str, &'static str)], n: usize) -> Vec<(String, &'static str, &'static str)> {
    (0..n)
        .map(|i| {
            let (name, d, r) = table[i % table.len()];
            let name = if i < table.len() {
                name.to_owned()
            } else {
                format!("{name}{}", i / table.len() + 1)
            };
            (name, d, r)
        })
        .collect()
}

fn fill_triples(d: &mut Draft, target: usize, rng: &mut Rng) -> Result<()> {
    let pools: Vec<(Vec<u32>, Vec<u32>)> = d.relations.iter().map(|(_, s, o)| (d.of_type(s), d.of_type(o))).collect();
    let mut seen: std::collections::HashSet<(u32, u32, u32)> = d.triples.iter().copied().collect();
    let capacity: usize = pools.iter().map(|(s, o)| s.len() * o.len()).sum();
    if target > capacity / 2 {
        return Err(Error::Config(format!(
            "{target} triples do not fit the typed schema (at most {} are reachable)",
            capacity / 2
        )));
    }
    let mut added = 0;
    while added < target {
        let r = rng.random_range(0..pools.len());
        let (subjects, objects) = &pools[r];
        let (Some(&s), Some(&o)) = (subjects.choose(rng), objects.choose(rng)) else {
            continue;
        };
        if s != o && seen.insert((s, r as u32, o)) {
            d.triples.push((s, r as u32, o));
            added += 1;
        }
    }
    Ok(())
}

fn take_unlinked(pool: &mut Vec<u32>, what: &str) -> Result<u32> {
    pool.pop()
        .ok_or_else(|| Error::Config(format!("not enough {what} entities for the requested links")))
}

/// Two typed KBs (ids 1 and 2) with planted links. Full links join
/// same-type entities under identical names; partial links join different
/// types under names one edit apart.
pub fn generate_synthetic_kbs(cfg: &GenConfig) -> Result<SyntheticPair> {
    cfg.validate()?;
    let mut rng = stream(cfg.seed, "synthetic-kbs", &[]);
    let mut d1 = Draft {
        types: allocate_types(cfg.entities_per_kb, KB1_TYPES, &mut rng),
        names: Vec::new(),
        relations: relation_table(KB1_RELATIONS, cfg.relations_per_kb),
        triples: Vec::new(),
    };
    let mut d2 = Draft {
        types: allocate_types(cfg.entities_per_kb, KB2_TYPES, &mut rng),
        names: Vec::new(),
        relations: relation_table(KB2_RELATIONS, cfg.relations_per_kb),
        triples: Vec::new(),
    };
    fill_triples(&mut d1, cfg.triples_per_kb, &mut rng)?;
    fill_triples(&mut d2, cfg.triples_per_kb, &mut rng)?;

    // unlinked entities per type, consumed from the back
    let mut free1: std::collections::HashMap<&str, Vec<u32>> = std::collections::HashMap::new();
    let mut free2: std::collections::HashMap<&str, Vec<u32>> = std::collections::HashMap::new();
    for (t, _) in KB1_TYPES {
        let mut v = d1.of_type(t);
        v.shuffle(&mut rng);
        free1.insert(t, v);
    }
    for (t, _) in KB2_TYPES {
        let mut v = d2.of_type(t);
        v.shuffle(&mut rng);
        free2.insert(t, v);
    }
    let mut pairs: Vec<(u32, u32, LinkType)> = Vec::new();
    for i in 0..cfg.full_links {
        let t = FULL_TYPES[i % FULL_TYPES.len()];
        let a = take_unlinked(free1.get_mut(t).expect("known type"), t)?;
        let b = take_unlinked(free2.get_mut(t).expect("known type"), t)?;
        pairs.push((a, b, LinkType::Full));
    }
    for i in 0..cfg.partial_links {
        let (t1, t2) = PARTIAL_TYPES[i % PARTIAL_TYPES.len()];
        let a = take_unlinked(free1.get_mut(t1).expect("known type"), t1)?;
        let b = take_unlinked(free2.get_mut(t2).expect("known type"), t2)?;
        pairs.push((a, b, LinkType::Partial));
    }

    let mut planted_locals = Vec::new();
    if cfg.merge_failure_pairs > 0 {
        let up1 = d1.relations.len() as u32;
        d1.relations.push((UPSTREAM.to_owned(), "Product", "Product"));
        let up2 = d2.relations.len() as u32;
        d2.relations.push((UPSTREAM.to_owned(), "Industry", "Industry"));
        let products = d1.of_type("Product");
        let industries = d2.of_type("Industry");
        if products.len() <= PLANTED_PRODUCTS || industries.len() <= PLANTED_INDUSTRIES {
            return Err(Error::Config("too few products or industries to plant merge failures".into()));
        }
        for _ in 0..cfg.merge_failure_pairs {
            let p = take_unlinked(free1.get_mut("Product").expect("known type"), "Product")?;
            let ind = take_unlinked(free2.get_mut("Industry").expect("known type"), "Industry")?;
            let others: Vec<u32> = products.iter().copied().filter(|&x| x != p).collect();
            for &o in others.choose_multiple(&mut rng, PLANTED_PRODUCTS) {
                d1.triples.push((p, up1, o));
            }
            let others: Vec<u32> = industries.iter().copied().filter(|&x| x != ind).collect();
            for &o in others.choose_multiple(&mut rng, PLANTED_INDUSTRIES) {
                d2.triples.push((ind, up2, o));
            }
            pairs.push((p, ind, LinkType::Partial));
            planted_locals.push((p, ind));
        }
    }

    let mut names = NameGen::new();
    d1.names = (0..d1.types.len()).map(|_| names.fresh(&mut rng)).collect();
    let mut names2: Vec<Option<String>> = vec![None; d2.types.len()];
    for &(a, b, t) in &pairs {
        let base = &d1.names[a as usize];
        names2[b as usize] = Some(match t {
            LinkType::Full => base.clone(),
            LinkType::Partial => names.variant(base, &mut rng),
        });
    }
    d2.names = names2
        .into_iter()
        .map(|n| n.unwrap_or_else(|| names.fresh(&mut rng)))
        .collect();

    // Canonical ids, so that the KBs reload from disk unchanged.
    let (kb1, m1) = d1.build(KB1).canonicalize();
    let (kb2, m2) = d2.build(KB2).canonicalize();
    let kbs = KbRegistry::new(vec![kb1, kb2])?;
    let e1 = |a: u32| EntityRef::new(KB1, m1[a as usize]);
    let e2 = |b: u32| EntityRef::new(KB2, m2[b as usize]);
    let mut rows: Vec<Link> = pairs
        .iter()
        .map(|&(a, b, t)| Link::new(e1(a), e2(b), t).expect("distinct kbs"))
        .collect();
    let (k1, k2) = (kbs.kb(KB1)?, kbs.kb(KB2)?);
    rows.sort_by(|x, y| {
        (k1.entity_name(x.e1), k2.entity_name(x.e2), x.link_type.as_str()).cmp(&(
            k1.entity_name(y.e1),
            k2.entity_name(y.e2),
            y.link_type.as_str(),
        ))
    });
    let links = LinkSet::from_links(rows);
    let planted = planted_locals
        .into_iter()
        .map(|(p, i)| PlantedPair {
            product: e1(p),
            industry: e2(i),
        })
        .collect();
    Ok(SyntheticPair { kbs, links, planted })
}
