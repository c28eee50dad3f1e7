use serde::{Deserialize, Serialize};

use crate::kb::{EntityRef, KbId, KbRegistry, LinkSet, LinkType, RelationId};

/// A raw triple whose subject has been swapped for one of its link partners.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ReplacedTriple {
    /// The link partner, from another KB.
    pub new_subject: EntityRef,
    /// The subject it replaced, kept so negatives can be filtered.
    pub subject: EntityRef,
    pub relation: RelationId,
    pub object: EntityRef,
    pub link_type: LinkType,
}

/// Every raw triple whose subject is linked, once per partner and in both
/// directions. Partial-link entries are repeated `k_pl` times.
pub fn build_replace_sets(kbs: &KbRegistry, links: &LinkSet, k_pl: usize) -> Vec<ReplacedTriple> {
    let mut out = Vec::new();
    for kb in kbs.iter() {
        for t in kb.triples() {
            for (partner, link_type) in links.link_partners(t.subject, None) {
                if !kbs.owns(partner) {
                    continue;
                }
                let rt = ReplacedTriple {
                    new_subject: partner,
                    subject: t.subject,
                    relation: t.relation,
                    object: t.object,
                    link_type,
                };
                let copies = match link_type {
                    LinkType::Full => 1,
                    LinkType::Partial => k_pl,
                };
                out.extend(std::iter::repeat_n(rt, copies));
            }
        }
    }
    out
}

/// The entries scored inside `kb`: raw triples of `kb` with a foreign subject.
pub fn replace_set_into(kbs: &KbRegistry, links: &LinkSet, k_pl: usize, kb: KbId) -> Vec<ReplacedTriple> {
    build_replace_sets(kbs, links, k_pl)
        .into_iter()
        .filter(|rt| rt.object.kb == kb)
        .collect()
}
