use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{EntityRef, Kb};
use crate::error::{Error, Result};

/// Full links identify the same real-world object; partial links join
/// different aspects of one abstract concept.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LinkType {
    Full = 0,
    Partial = 1,
}

impl LinkType {
    pub const ALL: [LinkType; 2] = [LinkType::Full, LinkType::Partial];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            LinkType::Full => "full",
            LinkType::Partial => "partial",
        }
    }
}

impl fmt::Display for LinkType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LinkType {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "full" => Ok(LinkType::Full),
            "partial" => Ok(LinkType::Partial),
            other => Err(Error::domain(format!("unknown link type {other:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Link {
    pub e1: EntityRef,
    pub e2: EntityRef,
    pub link_type: LinkType,
}

impl Link {
    pub fn new(e1: EntityRef, e2: EntityRef, link_type: LinkType) -> Result<Self> {
        if e1.kb == e2.kb {
            return Err(Error::domain(format!(
                "link {e1} - {e2} does not cross knowledge bases"
            )));
        }
        Ok(Self { e1, e2, link_type })
    }

    fn key(&self) -> (EntityRef, EntityRef) {
        if self.e1 <= self.e2 {
            (self.e1, self.e2)
        } else {
            (self.e2, self.e1)
        }
    }
}

/// Generalized links with an endpoint index.
#[derive(Clone, Debug, Default)]
pub struct LinkSet {
    links: Vec<Link>,
    pairs: HashSet<(EntityRef, EntityRef)>,
    index: HashMap<EntityRef, Vec<usize>>,
}

impl LinkSet {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn from_links(links: impl IntoIterator<Item = Link>) -> Self {
        let mut set = Self::new();
        for l in links {
            set.insert(l);
        }
        set
    }

    /// Returns false if the unordered pair is already present (first type wins).
    pub fn insert(&mut self, link: Link) -> bool {
        if !self.pairs.insert(link.key()) {
            return false;
        }
        let i = self.links.len();
        self.links.push(link);
        self.index.entry(link.e1).or_default().push(i);
        self.index.entry(link.e2).or_default().push(i);
        true
    }

    pub fn links(&self) -> &[Link] {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    pub fn contains(&self, a: EntityRef, b: EntityRef, link_type: LinkType) -> bool {
        self.link_partners(a, Some(link_type))
            .iter()
            .any(|&(p, _)| p == b)
    }

    /// Partners of `e` in insertion order, optionally of a single type.
    pub fn link_partners(
        &self,
        e: EntityRef,
        type_filter: Option<LinkType>,
    ) -> Vec<(EntityRef, LinkType)> {
        let Some(ids) = self.index.get(&e) else {
            return Vec::new();
        };
        ids.iter()
            .map(|&i| self.links[i])
            .filter(|l| type_filter.is_none_or(|t| l.link_type == t))
            .map(|l| (if l.e1 == e { l.e2 } else { l.e1 }, l.link_type))
            .collect()
    }

    pub fn filtered(&self, link_type: LinkType) -> LinkSet {
        LinkSet::from_links(self.links.iter().copied().filter(|l| l.link_type == link_type))
    }

    pub fn count(&self, link_type: LinkType) -> usize {
        self.links.iter().filter(|l| l.link_type == link_type).count()
    }
}

/// Reads `kb1_entity<TAB>kb2_entity<TAB>{full|partial}`; names resolve in `kb1` and `kb2`.
pub fn load_links(path: impl AsRef<Path>, kb1: &Kb, kb2: &Kb) -> Result<LinkSet> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_links(&text, kb1, kb2, &path.display().to_string())
}

pub(crate) fn parse_links(text: &str, kb1: &Kb, kb2: &Kb, source_name: &str) -> Result<LinkSet> {
    let parse_err = |line: usize, message: String| Error::Parse {
        source_name: source_name.to_owned(),
        line,
        message,
    };
    let mut set = LinkSet::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.strip_suffix('\r').unwrap_or(line);
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split('\t').collect();
        if cols.len() != 3 {
            return Err(parse_err(
                i + 1,
                format!("expected 3 tab-separated columns, found {}", cols.len()),
            ));
        }
        let e1 = kb1
            .lookup_entity(cols[0])
            .ok_or_else(|| parse_err(i + 1, format!("unknown kb{} entity {:?}", kb1.id(), cols[0])))?;
        let e2 = kb2
            .lookup_entity(cols[1])
            .ok_or_else(|| parse_err(i + 1, format!("unknown kb{} entity {:?}", kb2.id(), cols[1])))?;
        let t: LinkType = cols[2].parse().map_err(|e: Error| parse_err(i + 1, e.to_string()))?;
        set.insert(Link::new(e1, e2, t)?);
    }
    Ok(set)
}

/// Writes links sorted by endpoint names; `kb1` names go in the first column.
pub fn save_links(links: &LinkSet, kb1: &Kb, kb2: &Kb, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, links_to_tsv(links, kb1, kb2)?).map_err(|e| Error::io(path, e))
}

pub(crate) fn links_to_tsv(links: &LinkSet, kb1: &Kb, kb2: &Kb) -> Result<String> {
    let mut rows = Vec::with_capacity(links.len());
    for l in links.links() {
        let (a, b) = if l.e1.kb == kb1.id() && l.e2.kb == kb2.id() {
            (l.e1, l.e2)
        } else if l.e2.kb == kb1.id() && l.e1.kb == kb2.id() {
            (l.e2, l.e1)
        } else {
            return Err(Error::domain(format!(
                "link {} - {} is not between kb {} and kb {}",
                l.e1,
                l.e2,
                kb1.id(),
                kb2.id()
            )));
        };
        rows.push((kb1.entity_name(a), kb2.entity_name(b), l.link_type.as_str()));
    }
    rows.sort_unstable();
    let mut out = String::new();
    for (a, b, t) in rows {
        out.push_str(&format!("{a}\t{b}\t{t}\n"));
    }
    Ok(out)
}
