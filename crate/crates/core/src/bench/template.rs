//! Sampling template instances and turning them into questions.

use rand::seq::IndexedRandom;
use rand::Rng as _;

use super::graph::{derive_answers, template_spec, Branch, Edge, QueryGraph, Step};
use crate::error::Result;
use crate::kb::{EntityRef, Kb, KbRegistry, Link, LinkSet, LinkType};
use crate::qa::TemplateId;
use crate::rng::{fnv1a, Rng};

/// Sampling attempts per call before giving up.
const ATTEMPTS: usize = 200;

fn walk_back(kb: &Kb, from: EntityRef, hops: usize, rng: &mut Rng) -> Option<(EntityRef, Vec<Edge>)> {
    let mut cur = from;
    let mut edges = Vec::with_capacity(hops);
    for _ in 0..hops {
        let &(relation, s) = kb.incoming(cur.local).choose(rng)?;
        edges.push(Edge::Hop { kb: kb.id(), relation });
        cur = EntityRef::new(kb.id(), s);
    }
    edges.reverse();
    Some((cur, edges))
}

fn walk_forward(kb: &Kb, from: EntityRef, hops: usize, rng: &mut Rng) -> Option<(EntityRef, Vec<Edge>)> {
    let mut cur = from;
    let mut edges = Vec::with_capacity(hops);
    for _ in 0..hops {
        let &(relation, o) = kb.outgoing(cur.local).choose(rng)?;
        edges.push(Edge::Hop { kb: kb.id(), relation });
        cur = EntityRef::new(kb.id(), o);
    }
    Some((cur, edges))
}

/// A branch through `link` whose pattern has its link at `at`. Returns the
/// branch and the entity it reached.
fn sample_linked_branch(
    kbs: &KbRegistry,
    link: &Link,
    pattern: &[Step],
    at: usize,
    rng: &mut Rng,
) -> Option<(Branch, EntityRef)> {
    let (u, v) = if rng.random_bool(0.5) { (link.e1, link.e2) } else { (link.e2, link.e1) };
    let (topic, mut edges) = walk_back(kbs.get(u.kb)?, u, at, rng)?;
    edges.push(Edge::Link {
        link_type: link.link_type,
        to: v.kb,
    });
    let (end, tail) = walk_forward(kbs.get(v.kb)?, v, pattern.len() - at - 1, rng)?;
    edges.extend(tail);
    Some((Branch { topic, edges }, end))
}

fn sample_once(
    t: TemplateId,
    kbs: &KbRegistry,
    candidates: &[&Link],
    rng: &mut Rng,
) -> Option<QueryGraph> {
    let spec = template_spec(t);
    let link = *candidates.choose(rng)?;
    let branches = match spec.branches {
        [single] => {
            let at = single.iter().position(|s| *s == Step::Link)?;
            vec![sample_linked_branch(kbs, link, single, at, rng)?.0]
        }
        [a, b] => {
            let at = b.iter().position(|s| *s == Step::Link)?;
            let (bb, end) = sample_linked_branch(kbs, link, b, at, rng)?;
            let (topic, edges) = walk_back(kbs.get(end.kb)?, end, a.len(), rng)?;
            vec![Branch { topic, edges }, bb]
        }
        _ => return None,
    };
    Some(QueryGraph {
        template: t,
        link_type: link.link_type,
        branches,
    })
}

/// Sample an instance of template `t` whose link edge has type `link_type`
/// and whose answer set is non-empty, at most `max_answers` long and
/// disjoint from the topic entities. Gives up after a bounded number of
/// attempts.
pub fn instantiate_template(
    t: TemplateId,
    kbs: &KbRegistry,
    links: &LinkSet,
    link_type: LinkType,
    max_answers: usize,
    rng: &mut Rng,
) -> Result<Option<(QueryGraph, Vec<EntityRef>)>> {
    let candidates: Vec<&Link> = links.links().iter().filter(|l| l.link_type == link_type).collect();
    if candidates.is_empty() || t == TemplateId::P1 {
        return Ok(None);
    }
    for _ in 0..ATTEMPTS {
        let Some(g) = sample_once(t, kbs, &candidates, rng) else {
            continue;
        };
        let answers = derive_answers(&g, kbs, links)?;
        let topics = g.topics();
        if answers.is_empty() || answers.len() > max_answers || answers.iter().any(|a| topics.contains(a)) {
            continue;
        }
        if topics.len() > 1 && topics[0] == topics[1] {
            continue;
        }
        return Ok(Some((g, answers)));
    }
    Ok(None)
}

fn relation_words(kbs: &KbRegistry, e: &Edge) -> Result<String> {
    match *e {
        Edge::Hop { kb, relation } => Ok(kbs.kb(kb)?.relation_name(relation).replace('_', " ")),
        Edge::Link { .. } => Ok(String::new()),
    }
}

/// "the r2 of the r1 of e"
fn chain_phrase(kbs: &KbRegistry, b: &Branch) -> Result<String> {
    let mut phrase = kbs.entity_name(b.topic)?.to_owned();
    for e in &b.edges {
        if let Edge::Hop { .. } = e {
            phrase = format!("the {} of {phrase}", relation_words(kbs, e)?);
        }
    }
    Ok(phrase)
}

fn plural(word: &str) -> String {
    let w = word.to_lowercase().replace('_', " ");
    match w.strip_suffix('y') {
        Some(stem) => format!("{stem}ies"),
        None => format!("{w}s"),
    }
}

/// Canonical English question for a graph. One of three surface forms is
/// picked by a hash of the graph, so equal graphs always read the same.
pub fn verbalize(g: &QueryGraph, kbs: &KbRegistry) -> Result<String> {
    let key = serde_json::to_string(g)?;
    let variant = fnv1a(key.as_bytes()) % 3;
    if g.template == TemplateId::P1 {
        let b = &g.branches[0];
        let kind = plural(kbs.kb(b.topic.kb)?.entity_type(b.topic));
        let rel = relation_words(kbs, &b.edges[0])?;
        let name = kbs.entity_name(b.topic)?;
        return Ok(match variant {
            0 => format!("What are the {rel} {kind} of {name}?"),
            1 => format!("Which {kind} are {rel} of {name}?"),
            _ => format!("Tell me the {rel} {kind} of {name}."),
        });
    }
    let phrases: Vec<String> = g.branches.iter().map(|b| chain_phrase(kbs, b)).collect::<Result<_>>()?;
    Ok(match (phrases.as_slice(), variant) {
        ([p], 0) => format!("What is {p}?"),
        ([p], 1) => format!("Which entities are {p}?"),
        ([p], _) => format!("Tell me {p}."),
        ([a, b], 0) => format!("What is both {a} and {b}?"),
        ([a, b], 1) => format!("Which entities are {a} and also {b}?"),
        ([a, b], _) => format!("Tell me what is {a} as well as {b}."),
        _ => format!("What is {}?", phrases.join(" and ")),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kb::KbBuilder;
    use crate::rng::stream;

    /// Appendix-style pair: a company's industry, partially linked to a
    /// product line with two downstream products.
    fn appendix_pair() -> (KbRegistry, LinkSet) {
        let mut a = KbBuilder::new(1);
        a.named_triple("dayangbio", "industry", "fluorindus");
        a.named_triple("otherco", "peer", "dayangbio");
        let mut b = KbBuilder::new(2);
        b.named_triple("fluorchem", "downstream", "hydrofluoro");
        b.named_triple("fluorchem", "downstream", "cryolite");
        let (a, b) = (a.build(), b.build());
        let link = Link::new(
            a.lookup_entity("fluorindus").unwrap(),
            b.lookup_entity("fluorchem").unwrap(),
            LinkType::Partial,
        )
        .unwrap();
        (KbRegistry::new(vec![a, b]).unwrap(), LinkSet::from_links([link]))
    }

    #[test]
    fn forced_t1_instantiation_on_the_appendix_pattern() {
        let (reg, links) = appendix_pair();
        let mut rng = stream(1, "t", &[]);
        let (g, answers) = instantiate_template(TemplateId::T1, &reg, &links, LinkType::Partial, 10, &mut rng)
            .unwrap()
            .unwrap();
        assert_eq!(g.topics(), vec![reg.resolve("1:dayangbio").unwrap()]);
        assert_eq!(answers, vec![reg.resolve("2:hydrofluoro").unwrap(), reg.resolve("2:cryolite").unwrap()]);
        g.check_structure().unwrap();
        let text = verbalize(&g, &reg).unwrap();
        assert!(text.contains("the downstream of the industry of dayangbio"), "{text}");
        assert_eq!(verbalize(&g, &reg).unwrap(), text);
        // no full link, so no full-link instance
        assert!(instantiate_template(TemplateId::T1, &reg, &links, LinkType::Full, 10, &mut rng)
            .unwrap()
            .is_none());
        // two answers exceed a cap of one
        assert!(instantiate_template(TemplateId::T1, &reg, &links, LinkType::Partial, 1, &mut rng)
            .unwrap()
            .is_none());
    }

    #[test]
    fn plural_type_words() {
        assert_eq!(plural("Industry"), "industries");
        assert_eq!(plural("Product"), "products");
    }
}
