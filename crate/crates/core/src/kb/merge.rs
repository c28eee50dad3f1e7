//! Contraction of linked entities into a single graph (the Merge-KB baseline).

use std::collections::{HashMap, HashSet};

use super::{EntityRef, Kb, KbBuilder, KbId, KbRegistry, LinkSet, LinkType, RelationId};

/// Namespace id of a merged graph.
pub const MERGED_KB_ID: KbId = 0;

/// Where every original entity and relation ended up after merging.
#[derive(Clone, Debug, Default)]
pub struct Provenance {
    pub entities: HashMap<EntityRef, EntityRef>,
    pub relations: HashMap<(KbId, RelationId), RelationId>,
    /// Original members of each merged node, in registry order.
    pub members: Vec<Vec<EntityRef>>,
}

impl Provenance {
    pub fn map(&self, e: EntityRef) -> Option<EntityRef> {
        self.entities.get(&e).copied()
    }
}

#[derive(Clone, Debug)]
pub struct MergedKb {
    pub kb: Kb,
    pub provenance: Provenance,
}

struct UnionFind {
    parent: Vec<usize>,
    rank: Vec<u8>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
            rank: vec![0; n],
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        match self.rank[ra].cmp(&self.rank[rb]) {
            std::cmp::Ordering::Less => self.parent[ra] = rb,
            std::cmp::Ordering::Greater => self.parent[rb] = ra,
            std::cmp::Ordering::Equal => {
                self.parent[rb] = ra;
                self.rank[ra] += 1;
            }
        }
        true
    }
}

fn unique_name(base: &str, tag: &str, used: &mut HashSet<String>) -> String {
    let mut name = base.to_owned();
    let mut n = 0;
    while used.contains(&name) {
        n += 1;
        name = if n == 1 {
            format!("{base}@{tag}")
        } else {
            format!("{base}@{tag}.{n}")
        };
    }
    used.insert(name.clone());
    name
}

/// Fuse all KBs by full links. Partial links are ignored.
pub fn merge_full_links(kbs: &KbRegistry, links: &LinkSet) -> MergedKb {
    merge_links(kbs, links, &[LinkType::Full])
}

/// Fuse all KBs, contracting every link whose type is listed in `contract`.
///
/// Each merged node takes the name and type of its first member in registry
/// order; relation namespaces are concatenated and stay disjoint. Names that
/// would collide get an `@kb` suffix.
pub fn merge_links(kbs: &KbRegistry, links: &LinkSet, contract: &[LinkType]) -> MergedKb {
    merge_with(kbs, links, contract, false)
}

/// As [`merge_links`], but relations with the same name in different KBs
/// become one merged relation, the way a schema-aligning fusion treats them.
pub fn merge_aligned(kbs: &KbRegistry, links: &LinkSet, contract: &[LinkType]) -> MergedKb {
    merge_with(kbs, links, contract, true)
}

fn merge_with(kbs: &KbRegistry, links: &LinkSet, contract: &[LinkType], align_relations: bool) -> MergedKb {
    let mut offsets = HashMap::new();
    let mut flat = Vec::new();
    for kb in kbs.iter() {
        offsets.insert(kb.id(), flat.len());
        flat.extend(kb.entities());
    }
    let global = |e: EntityRef| offsets.get(&e.kb).map(|&o| o + e.local as usize);

    let mut uf = UnionFind::new(flat.len());
    for l in links.links() {
        if !contract.contains(&l.link_type) {
            continue;
        }
        if let (Some(a), Some(b)) = (global(l.e1), global(l.e2)) {
            uf.union(a, b);
        }
    }

    let mut b = KbBuilder::new(MERGED_KB_ID);
    let mut used = HashSet::new();
    let mut root_to_node: HashMap<usize, u32> = HashMap::new();
    let mut prov = Provenance::default();
    for (g, &e) in flat.iter().enumerate() {
        let root = uf.find(g);
        let node = match root_to_node.get(&root) {
            Some(&n) => n,
            None => {
                let kb = kbs.kb(e.kb).expect("registered");
                let name = unique_name(kb.entity_name(e), &e.kb.to_string(), &mut used);
                let n = b.typed_entity(&name, kb.entity_type(e));
                root_to_node.insert(root, n);
                prov.members.push(Vec::new());
                n
            }
        };
        prov.members[node as usize].push(e);
        prov.entities.insert(e, EntityRef::new(MERGED_KB_ID, node));
    }

    let mut used_rel = HashSet::new();
    for kb in kbs.iter() {
        for (r, name) in kb.relation_names().iter().enumerate() {
            let merged = if align_relations {
                b.relation(name)
            } else {
                b.relation(&unique_name(name, &kb.id().to_string(), &mut used_rel))
            };
            prov.relations.insert((kb.id(), r as RelationId), merged);
        }
    }
    for kb in kbs.iter() {
        for t in kb.triples() {
            let s = prov.entities[&t.subject].local;
            let o = prov.entities[&t.object].local;
            b.triple(s, prov.relations[&(kb.id(), t.relation)], o);
        }
    }

    MergedKb {
        kb: b.build(),
        provenance: prov,
    }
}
