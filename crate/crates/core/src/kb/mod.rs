//! Namespaced triple stores.
//!
//! Each knowledge base owns its entity and relation namespaces. An entity is
//! identified by `(kb, local)`; names are only unique inside one KB and may
//! collide across KBs. Triples never cross KB boundaries: cross-KB structure
//! lives exclusively in a [`LinkSet`].

mod io;
mod links;
mod merge;

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{load_kb, load_kb_with_types, save_kb, save_types};
#[cfg(test)]
pub(crate) use io::to_tsv;
pub use links::{load_links, save_links, Link, LinkSet, LinkType};
pub use merge::{merge_aligned, merge_full_links, merge_links, MergedKb, Provenance, MERGED_KB_ID};

pub type KbId = u16;
pub type RelationId = u32;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EntityRef {
    pub kb: KbId,
    pub local: u32,
}

impl EntityRef {
    pub const fn new(kb: KbId, local: u32) -> Self {
        Self { kb, local }
    }
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.kb, self.local)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Triple {
    pub subject: EntityRef,
    pub relation: RelationId,
    pub object: EntityRef,
}

/// An immutable, fully indexed knowledge base.
#[derive(Clone, Debug)]
pub struct Kb {
    id: KbId,
    names: Vec<String>,
    types: Vec<String>,
    name_index: HashMap<String, u32>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelationId>,
    triples: Vec<Triple>,
    // Per entity, sorted by (relation, other endpoint).
    outgoing: Vec<Vec<(RelationId, u32)>>,
    incoming: Vec<Vec<(RelationId, u32)>>,
}

impl Kb {
    pub fn id(&self) -> KbId {
        self.id
    }

    pub fn entity_count(&self) -> usize {
        self.names.len()
    }

    pub fn relation_count(&self) -> usize {
        self.relations.len()
    }

    pub fn triple_count(&self) -> usize {
        self.triples.len()
    }

    /// Triples in insertion order.
    pub fn triples(&self) -> &[Triple] {
        &self.triples
    }

    pub fn entity(&self, local: u32) -> EntityRef {
        EntityRef::new(self.id, local)
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityRef> + '_ {
        (0..self.names.len() as u32).map(move |i| EntityRef::new(self.id, i))
    }

    pub fn entity_name(&self, e: EntityRef) -> &str {
        &self.names[e.local as usize]
    }

    pub fn entity_type(&self, e: EntityRef) -> &str {
        &self.types[e.local as usize]
    }

    pub fn relation_name(&self, r: RelationId) -> &str {
        &self.relations[r as usize]
    }

    pub fn relation_names(&self) -> &[String] {
        &self.relations
    }

    pub fn lookup_entity(&self, name: &str) -> Option<EntityRef> {
        self.name_index.get(name).map(|&i| self.entity(i))
    }

    pub fn lookup_relation(&self, name: &str) -> Option<RelationId> {
        self.relation_index.get(name).copied()
    }

    pub fn owns(&self, e: EntityRef) -> bool {
        e.kb == self.id && (e.local as usize) < self.names.len()
    }

    fn check_owned(&self, e: EntityRef) -> Result<()> {
        if e.kb != self.id {
            return Err(Error::domain(format!(
                "entity {e} does not belong to kb {}",
                self.id
            )));
        }
        if e.local as usize >= self.names.len() {
            return Err(Error::domain(format!(
                "entity {e} out of range (kb {} has {} entities)",
                self.id,
                self.names.len()
            )));
        }
        Ok(())
    }

    /// Objects `o` with `<subject, relation, o>` in this KB, ascending.
    pub fn neighbors(&self, subject: EntityRef, relation: RelationId) -> Result<Vec<EntityRef>> {
        self.check_owned(subject)?;
        Ok(self
            .objects_of(subject.local, relation)
            .iter()
            .map(|&(_, o)| self.entity(o))
            .collect())
    }

    /// Subjects `s` with `<s, relation, object>` in this KB, ascending.
    pub fn inverse_neighbors(
        &self,
        object: EntityRef,
        relation: RelationId,
    ) -> Result<Vec<EntityRef>> {
        self.check_owned(object)?;
        let list = &self.incoming[object.local as usize];
        let lo = list.partition_point(|&(r, _)| r < relation);
        let hi = list.partition_point(|&(r, _)| r <= relation);
        Ok(list[lo..hi].iter().map(|&(_, s)| self.entity(s)).collect())
    }

    pub(crate) fn objects_of(&self, subject: u32, relation: RelationId) -> &[(RelationId, u32)] {
        let list = &self.outgoing[subject as usize];
        let lo = list.partition_point(|&(r, _)| r < relation);
        let hi = list.partition_point(|&(r, _)| r <= relation);
        &list[lo..hi]
    }

    /// Outgoing `(relation, object)` edges of a local entity.
    pub fn outgoing(&self, subject: u32) -> &[(RelationId, u32)] {
        &self.outgoing[subject as usize]
    }

    /// Incoming `(relation, subject)` edges of a local entity.
    pub fn incoming(&self, object: u32) -> &[(RelationId, u32)] {
        &self.incoming[object as usize]
    }

    pub fn contains(&self, subject: u32, relation: RelationId, object: u32) -> bool {
        self.objects_of(subject, relation)
            .binary_search(&(relation, object))
            .is_ok()
    }

    /// Canonical rebuild: the KB obtained by writing and re-reading this one.
    /// Returns the rebuilt KB and the old-local → new-local map.
    pub fn canonicalize(&self) -> (Kb, Vec<u32>) {
        let tsv = io::to_tsv(self);
        let types = io::types_to_tsv(self);
        let kb = io::parse_kb(self.id, &tsv, Some((&types, "<canonical>")), "<canonical>")
            .expect("canonical serialization always parses");
        let remap = self
            .names
            .iter()
            .map(|n| kb.name_index[n.as_str()])
            .collect();
        (kb, remap)
    }
}

/// Incremental constructor; interns names in first-seen order.
#[derive(Debug)]
pub struct KbBuilder {
    id: KbId,
    names: Vec<String>,
    types: Vec<String>,
    name_index: HashMap<String, u32>,
    relations: Vec<String>,
    relation_index: HashMap<String, RelationId>,
    seen: HashSet<(u32, RelationId, u32)>,
    rows: Vec<(u32, RelationId, u32)>,
}

impl KbBuilder {
    pub fn new(id: KbId) -> Self {
        Self {
            id,
            names: Vec::new(),
            types: Vec::new(),
            name_index: HashMap::new(),
            relations: Vec::new(),
            relation_index: HashMap::new(),
            seen: HashSet::new(),
            rows: Vec::new(),
        }
    }

    pub fn entity(&mut self, name: &str) -> u32 {
        if let Some(&i) = self.name_index.get(name) {
            return i;
        }
        let i = self.names.len() as u32;
        self.names.push(name.to_owned());
        self.types.push(String::new());
        self.name_index.insert(name.to_owned(), i);
        i
    }

    pub fn typed_entity(&mut self, name: &str, etype: &str) -> u32 {
        let i = self.entity(name);
        self.types[i as usize] = etype.to_owned();
        i
    }

    pub fn relation(&mut self, name: &str) -> RelationId {
        if let Some(&r) = self.relation_index.get(name) {
            return r;
        }
        let r = self.relations.len() as RelationId;
        self.relations.push(name.to_owned());
        self.relation_index.insert(name.to_owned(), r);
        r
    }

    /// Returns false when the triple was already present.
    pub fn triple(&mut self, s: u32, r: RelationId, o: u32) -> bool {
        if self.seen.insert((s, r, o)) {
            self.rows.push((s, r, o));
            true
        } else {
            false
        }
    }

    pub fn named_triple(&mut self, s: &str, r: &str, o: &str) -> bool {
        let s = self.entity(s);
        let r = self.relation(r);
        let o = self.entity(o);
        self.triple(s, r, o)
    }

    pub fn build(self) -> Kb {
        let n = self.names.len();
        let mut outgoing = vec![Vec::new(); n];
        let mut incoming = vec![Vec::new(); n];
        let id = self.id;
        let triples = self
            .rows
            .iter()
            .map(|&(s, r, o)| {
                outgoing[s as usize].push((r, o));
                incoming[o as usize].push((r, s));
                Triple {
                    subject: EntityRef::new(id, s),
                    relation: r,
                    object: EntityRef::new(id, o),
                }
            })
            .collect();
        for list in outgoing.iter_mut().chain(incoming.iter_mut()) {
            list.sort_unstable();
        }
        Kb {
            id,
            names: self.names,
            types: self.types,
            name_index: self.name_index,
            relations: self.relations,
            relation_index: self.relation_index,
            triples,
            outgoing,
            incoming,
        }
    }
}

/// The set of KBs participating in a run, in registration order.
#[derive(Clone, Debug, Default)]
pub struct KbRegistry {
    kbs: Vec<Kb>,
}

impl KbRegistry {
    pub fn new(kbs: Vec<Kb>) -> Result<Self> {
        let mut reg = Self::default();
        for kb in kbs {
            reg.register(kb)?;
        }
        Ok(reg)
    }

    pub fn register(&mut self, kb: Kb) -> Result<()> {
        if self.get(kb.id()).is_some() {
            return Err(Error::domain(format!("kb {} registered twice", kb.id())));
        }
        self.kbs.push(kb);
        Ok(())
    }

    pub fn get(&self, id: KbId) -> Option<&Kb> {
        self.kbs.iter().find(|kb| kb.id() == id)
    }

    pub fn kb(&self, id: KbId) -> Result<&Kb> {
        self.get(id)
            .ok_or_else(|| Error::domain(format!("kb {id} is not registered")))
    }

    pub fn iter(&self) -> impl Iterator<Item = &Kb> {
        self.kbs.iter()
    }

    pub fn ids(&self) -> Vec<KbId> {
        self.kbs.iter().map(Kb::id).collect()
    }

    pub fn len(&self) -> usize {
        self.kbs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kbs.is_empty()
    }

    pub fn entity_count(&self) -> usize {
        self.kbs.iter().map(Kb::entity_count).sum()
    }

    pub fn triple_count(&self) -> usize {
        self.kbs.iter().map(Kb::triple_count).sum()
    }

    pub fn entities(&self) -> impl Iterator<Item = EntityRef> + '_ {
        self.kbs.iter().flat_map(Kb::entities)
    }

    pub fn owns(&self, e: EntityRef) -> bool {
        self.get(e.kb).is_some_and(|kb| kb.owns(e))
    }

    pub fn entity_name(&self, e: EntityRef) -> Result<&str> {
        let kb = self.kb(e.kb)?;
        if !kb.owns(e) {
            return Err(Error::UnknownEntity(e.to_string()));
        }
        Ok(kb.entity_name(e))
    }

    /// Resolve `"kb:name"` or `"kb:local_id"`; names win over numeric ids.
    /// A bare name is accepted when it is unique across the registry.
    pub fn resolve(&self, spec: &str) -> Result<EntityRef> {
        if let Some((head, rest)) = spec.split_once(':') {
            if let Ok(kb_id) = head.parse::<KbId>() {
                if let Some(kb) = self.get(kb_id) {
                    if let Some(e) = kb.lookup_entity(rest) {
                        return Ok(e);
                    }
                    if let Ok(local) = rest.parse::<u32>() {
                        let e = EntityRef::new(kb_id, local);
                        if kb.owns(e) {
                            return Ok(e);
                        }
                    }
                }
                return Err(Error::UnknownEntity(spec.to_owned()));
            }
        }
        let hits: Vec<EntityRef> = self
            .kbs
            .iter()
            .filter_map(|kb| kb.lookup_entity(spec))
            .collect();
        match hits.as_slice() {
            [e] => Ok(*e),
            [] => Err(Error::UnknownEntity(spec.to_owned())),
            _ => Err(Error::UnknownEntity(format!(
                "{spec} (ambiguous across kbs; qualify as kb:name)"
            ))),
        }
    }

    /// Inverse of [`KbRegistry::resolve`]: `"kb:name"`.
    pub fn qualified_name(&self, e: EntityRef) -> Result<String> {
        Ok(format!("{}:{}", e.kb, self.entity_name(e)?))
    }
}
