//! Query graphs and the template table that shapes them.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kb::{EntityRef, KbId, KbRegistry, LinkSet, LinkType, RelationId};
use crate::qa::TemplateId;

/// One edge slot of a template branch.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Step {
    Hop,
    Link,
}

/// A template is one or more branches; their end frontiers are intersected.
/// The first branch never crosses a link when there are two, so the answer
/// lies in the KB where that branch starts.
#[derive(Clone, Copy, Debug)]
pub struct TemplateSpec {
    pub id: TemplateId,
    pub branches: &'static [&'static [Step]],
}

use Step::{Hop, Link as L};

pub const TEMPLATES: &[TemplateSpec] = &[
    TemplateSpec {
        id: TemplateId::T1,
        branches: &[&[Hop, L, Hop]],
    },
    TemplateSpec {
        id: TemplateId::T2,
        branches: &[&[Hop], &[Hop, L]],
    },
    TemplateSpec {
        id: TemplateId::T3,
        branches: &[&[L, Hop, Hop]],
    },
    TemplateSpec {
        id: TemplateId::T4,
        branches: &[&[Hop, L, Hop, Hop]],
    },
    TemplateSpec {
        id: TemplateId::T5,
        branches: &[&[Hop], &[Hop, Hop, L]],
    },
    TemplateSpec {
        id: TemplateId::T6,
        branches: &[&[Hop, Hop, L, Hop]],
    },
    TemplateSpec {
        id: TemplateId::P1,
        branches: &[&[Hop]],
    },
];

pub fn template_spec(id: TemplateId) -> &'static TemplateSpec {
    TEMPLATES.iter().find(|t| t.id == id).expect("every template has a spec")
}

/// A bound edge.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Edge {
    Hop { kb: KbId, relation: RelationId },
    Link { link_type: LinkType, to: KbId },
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Branch {
    pub topic: EntityRef,
    pub edges: Vec<Edge>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct QueryGraph {
    pub template: TemplateId,
    pub link_type: LinkType,
    pub branches: Vec<Branch>,
}

/// A node of the explicit graph view; topics are bound, the rest are variables.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphNode {
    pub kb: KbId,
    pub bound: Option<EntityRef>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct GraphEdge {
    pub from: usize,
    pub to: usize,
    pub edge: Edge,
}

/// Nodes and edges of a query graph, with every branch end merged into the
/// answer node.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GraphView {
    pub nodes: Vec<GraphNode>,
    pub edges: Vec<GraphEdge>,
    pub answer: usize,
}

impl QueryGraph {
    pub fn topics(&self) -> Vec<EntityRef> {
        self.branches.iter().map(|b| b.topic).collect()
    }

    /// Relations in the order they appear, branch by branch.
    pub fn relations(&self) -> Vec<(KbId, RelationId)> {
        self.branches
            .iter()
            .flat_map(|b| &b.edges)
            .filter_map(|e| match *e {
                Edge::Hop { kb, relation } => Some((kb, relation)),
                Edge::Link { .. } => None,
            })
            .collect()
    }

    pub fn view(&self) -> GraphView {
        let answer_kb = self.branches.first().map_or(0, |b| end_kb(b));
        let mut nodes = vec![GraphNode {
            kb: answer_kb,
            bound: None,
        }];
        let mut edges = Vec::new();
        for b in &self.branches {
            let mut cur = nodes.len();
            let mut kb = b.topic.kb;
            nodes.push(GraphNode {
                kb,
                bound: Some(b.topic),
            });
            for (i, e) in b.edges.iter().enumerate() {
                if let Edge::Link { to, .. } = e {
                    kb = *to;
                }
                let next = if i + 1 == b.edges.len() {
                    0
                } else {
                    nodes.push(GraphNode { kb, bound: None });
                    nodes.len() - 1
                };
                edges.push(GraphEdge {
                    from: cur,
                    to: next,
                    edge: *e,
                });
                cur = next;
            }
        }
        GraphView { nodes, edges, answer: 0 }
    }

    /// Check the graph against its template: step pattern, link type, KB
    /// membership of every hop, and the split into exactly one connected
    /// subgraph per KB joined only by link edges.
    pub fn check_structure(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Internal(format!("{} graph: {msg}", self.template)));
        let spec = template_spec(self.template);
        if spec.branches.len() != self.branches.len() {
            return bad(format!("{} branches, expected {}", self.branches.len(), spec.branches.len()));
        }
        let mut links = 0;
        for (b, pattern) in self.branches.iter().zip(spec.branches) {
            if b.edges.len() != pattern.len() {
                return bad("branch length differs from its template".into());
            }
            let mut kb = b.topic.kb;
            for (e, p) in b.edges.iter().zip(pattern.iter()) {
                match (e, p) {
                    (Edge::Hop { kb: hk, .. }, Step::Hop) => {
                        if *hk != kb {
                            return bad(format!("hop in kb {hk} while the path is in kb {kb}"));
                        }
                    }
                    (Edge::Link { link_type, to }, Step::Link) => {
                        if *link_type != self.link_type {
                            return bad("link edge type differs from the graph label".into());
                        }
                        if *to == kb {
                            return bad("link edge does not leave its kb".into());
                        }
                        kb = *to;
                        links += 1;
                    }
                    _ => return bad("edge kinds differ from the template".into()),
                }
            }
        }
        let ends: Vec<KbId> = self.branches.iter().map(end_kb).collect();
        if ends.windows(2).any(|w| w[0] != w[1]) {
            return bad("branches end in different kbs".into());
        }
        let expected_links = spec.branches.iter().flat_map(|b| b.iter()).filter(|s| **s == Step::Link).count();
        if links != expected_links {
            return bad(format!("{links} link edges, expected {expected_links}"));
        }
        if expected_links == 0 {
            return Ok(());
        }

        // components after dropping link edges: one per kb, each single-kb
        let v = self.view();
        let mut parent: Vec<usize> = (0..v.nodes.len()).collect();
        fn find(p: &mut [usize], mut x: usize) -> usize {
            while p[x] != x {
                p[x] = p[p[x]];
                x = p[x];
            }
            x
        }
        for e in &v.edges {
            if let Edge::Hop { .. } = e.edge {
                let (a, b) = (find(&mut parent, e.from), find(&mut parent, e.to));
                parent[a] = b;
            }
        }
        let mut comps: Vec<(usize, KbId)> = Vec::new();
        for (i, n) in v.nodes.iter().enumerate() {
            let root = find(&mut parent, i);
            match comps.iter().find(|(r, _)| *r == root) {
                Some((_, kb)) if *kb != n.kb => return bad("a within-kb subgraph mixes kbs".into()),
                Some(_) => {}
                None => comps.push((root, n.kb)),
            }
        }
        let mut kbs: Vec<KbId> = comps.iter().map(|c| c.1).collect();
        kbs.sort_unstable();
        kbs.dedup();
        if comps.len() != 2 || kbs.len() != 2 {
            return bad(format!("{} within-kb subgraphs over {} kbs", comps.len(), kbs.len()));
        }
        Ok(())
    }
}

fn end_kb(b: &Branch) -> KbId {
    b.edges.iter().fold(b.topic.kb, |kb, e| match e {
        Edge::Link { to, .. } => *to,
        Edge::Hop { .. } => kb,
    })
}

/// Evaluate a graph hop by hop: relations expand the frontier through the
/// KB, link edges replace it with link partners, and branch results are
/// intersected. Sorted and free of duplicates.
pub fn derive_answers(g: &QueryGraph, kbs: &KbRegistry, links: &LinkSet) -> Result<Vec<EntityRef>> {
    let mut result: Option<Vec<EntityRef>> = None;
    for b in &g.branches {
        let mut frontier = vec![b.topic];
        for e in &b.edges {
            let mut next = Vec::new();
            for &x in &frontier {
                match *e {
                    Edge::Hop { kb, relation } => {
                        if x.kb != kb {
                            return Err(Error::Internal(format!("hop in kb {kb} reached from {x}")));
                        }
                        next.extend(kbs.kb(kb)?.neighbors(x, relation)?);
                    }
                    Edge::Link { link_type, to } => next.extend(
                        links
                            .link_partners(x, Some(link_type))
                            .into_iter()
                            .map(|p| p.0)
                            .filter(|p| p.kb == to),
                    ),
                }
            }
            next.sort_unstable();
            next.dedup();
            frontier = next;
        }
        result = Some(match result {
            None => frontier,
            Some(prev) => prev.into_iter().filter(|x| frontier.binary_search(x).is_ok()).collect(),
        });
    }
    Ok(result.unwrap_or_default())
}
