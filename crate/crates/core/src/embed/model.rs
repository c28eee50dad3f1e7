use std::collections::BTreeMap;
use std::ops::Range;

use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use super::complex::{score, sigmoid};
use crate::error::{Error, Result};
use crate::kb::{EntityRef, KbId, KbRegistry, LinkType, RelationId};
use crate::rng::Rng;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct KbShape {
    pub kb: KbId,
    pub entities: usize,
    pub relations: usize,
}

/// Where each parameter block lives inside the flat parameter vector.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Layout {
    pub h: usize,
    pub kbs: Vec<KbShape>,
    pub translator_hidden: Option<usize>,
    #[serde(skip)]
    blocks: BTreeMap<KbId, (usize, usize)>,
    #[serde(skip)]
    link_types: usize,
    #[serde(skip)]
    translator: usize,
    #[serde(skip)]
    len: usize,
}

impl Layout {
    pub fn new(h: usize, mut kbs: Vec<KbShape>, translator_hidden: Option<usize>) -> Self {
        kbs.sort_by_key(|s| s.kb);
        let mut layout = Self {
            h,
            kbs,
            translator_hidden,
            blocks: BTreeMap::new(),
            link_types: 0,
            translator: 0,
            len: 0,
        };
        layout.index();
        layout
    }

    /// Recompute offsets; needed after deserializing.
    pub(crate) fn index(&mut self) {
        let w = 2 * self.h;
        let mut off = 0;
        self.blocks.clear();
        for s in &self.kbs {
            let ent = off;
            off += s.entities * w;
            self.blocks.insert(s.kb, (ent, off));
            off += s.relations * w;
        }
        self.link_types = off;
        off += 2 * w;
        self.translator = off;
        off += self.translator_len();
        self.len = off;
    }

    pub fn dim(&self) -> usize {
        2 * self.h
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn has_kb(&self, kb: KbId) -> bool {
        self.blocks.contains_key(&kb)
    }

    pub fn shape(&self, kb: KbId) -> Option<&KbShape> {
        self.kbs.iter().find(|s| s.kb == kb)
    }

    fn translator_len(&self) -> usize {
        let (i, o) = (2 * self.dim(), self.dim());
        match self.translator_hidden {
            None => o * i + o,
            Some(m) => m * i + m + o * m + o,
        }
    }

    pub(crate) fn entity(&self, e: EntityRef) -> usize {
        self.blocks[&e.kb].0 + e.local as usize * self.dim()
    }

    pub(crate) fn relation(&self, kb: KbId, r: RelationId) -> usize {
        self.blocks[&kb].1 + r as usize * self.dim()
    }

    pub(crate) fn link_type(&self, t: LinkType) -> usize {
        self.link_types + t.index() * self.dim()
    }

    pub fn entity_range(&self, kb: KbId) -> Range<usize> {
        let (ent, rel) = self.blocks[&kb];
        ent..rel
    }

    pub fn relation_range(&self, kb: KbId) -> Range<usize> {
        let s = self.shape(kb).expect("kb in layout");
        let start = self.blocks[&kb].1;
        start..start + s.relations * self.dim()
    }

    pub fn link_type_range(&self) -> Range<usize> {
        self.link_types..self.translator
    }

    pub fn translator_range(&self) -> Range<usize> {
        self.translator..self.len
    }

    pub(crate) fn translator_offset(&self) -> usize {
        self.translator
    }
}

/// Per-KB entity and relation tables, link-type vectors and translator,
/// stored in one flat vector.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingModel {
    pub(crate) layout: Layout,
    pub(crate) params: Vec<f64>,
}

impl EmbeddingModel {
    /// Entity, relation and link-type vectors ~ N(0, 1/h); translator starts
    /// as `[I | 0]` so that at step zero it passes the subject through.
    pub fn init(kbs: &KbRegistry, h: usize, translator_hidden: Option<usize>, rng: &mut Rng) -> Self {
        let shapes = kbs
            .iter()
            .map(|kb| KbShape {
                kb: kb.id(),
                entities: kb.entity_count(),
                relations: kb.relation_count(),
            })
            .collect();
        Self::init_with_layout(Layout::new(h, shapes, translator_hidden), rng)
    }

    pub(crate) fn init_with_layout(layout: Layout, rng: &mut Rng) -> Self {
        let mut params = vec![0.0; layout.len()];
        let normal = Normal::new(0.0, 1.0 / (layout.h as f64).sqrt()).expect("finite std");
        for p in &mut params[..layout.translator_range().start] {
            *p = normal.sample(rng);
        }
        let mut model = Self { layout, params };
        model.reset_translator(rng);
        model
    }

    pub(crate) fn reset_translator(&mut self, rng: &mut Rng) {
        let o = self.layout.dim();
        let i = 2 * o;
        let start = self.layout.translator_offset();
        match self.layout.translator_hidden {
            None => {
                let t = &mut self.params[start..];
                t.fill(0.0);
                for r in 0..o {
                    t[r * i + r] = 1.0;
                }
            }
            Some(m) => {
                let t = &mut self.params[start..];
                let w1 = Normal::new(0.0, 1.0 / (i as f64).sqrt()).expect("finite std");
                let w2 = Normal::new(0.0, 1.0 / (m as f64).sqrt()).expect("finite std");
                for x in &mut t[..m * i] {
                    *x = w1.sample(rng);
                }
                t[m * i..m * i + m].fill(0.0);
                for x in &mut t[m * i + m..m * i + m + o * m] {
                    *x = w2.sample(rng);
                }
                t[m * i + m + o * m..].fill(0.0);
            }
        }
    }

    pub fn from_parts(layout: Layout, params: Vec<f64>) -> Result<Self> {
        let mut layout = layout;
        layout.index();
        if params.len() != layout.len() {
            return Err(Error::domain(format!(
                "parameter count {} does not match layout size {}",
                params.len(),
                layout.len()
            )));
        }
        Ok(Self { layout, params })
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn h(&self) -> usize {
        self.layout.h
    }

    pub fn covers(&self, e: EntityRef) -> bool {
        self.layout
            .shape(e.kb)
            .is_some_and(|s| (e.local as usize) < s.entities)
    }

    fn check_entity(&self, e: EntityRef) -> Result<()> {
        if self.covers(e) {
            Ok(())
        } else {
            Err(Error::UnknownEntity(format!("{e} has no embedding")))
        }
    }

    fn check_relation(&self, kb: KbId, r: RelationId) -> Result<()> {
        match self.layout.shape(kb) {
            Some(s) if (r as usize) < s.relations => Ok(()),
            _ => Err(Error::domain(format!("relation {r} of kb {kb} has no embedding"))),
        }
    }

    pub fn entity_vec(&self, e: EntityRef) -> Result<&[f64]> {
        self.check_entity(e)?;
        Ok(self.entity_unchecked(e))
    }

    pub(crate) fn entity_unchecked(&self, e: EntityRef) -> &[f64] {
        let o = self.layout.entity(e);
        &self.params[o..o + self.layout.dim()]
    }

    pub fn relation_vec(&self, kb: KbId, r: RelationId) -> Result<&[f64]> {
        self.check_relation(kb, r)?;
        Ok(self.relation_unchecked(kb, r))
    }

    pub(crate) fn relation_unchecked(&self, kb: KbId, r: RelationId) -> &[f64] {
        let o = self.layout.relation(kb, r);
        &self.params[o..o + self.layout.dim()]
    }

    pub fn link_type_vec(&self, t: LinkType) -> &[f64] {
        let o = self.layout.link_type(t);
        &self.params[o..o + self.layout.dim()]
    }

    fn translator_params(&self) -> &[f64] {
        &self.params[self.layout.translator_range()]
    }

    /// `Trans(v ++ E_t)`.
    pub fn translate(&self, v: &[f64], t: LinkType) -> Result<Vec<f64>> {
        if v.len() != self.layout.dim() {
            return Err(Error::domain(format!(
                "expected a vector of {} reals, got {}",
                self.layout.dim(),
                v.len()
            )));
        }
        Ok(self.translate_forward(v, t).output)
    }

    pub(crate) fn translate_forward(&self, v: &[f64], t: LinkType) -> TranslatorTrace {
        let o = self.layout.dim();
        let mut input = Vec::with_capacity(2 * o);
        input.extend_from_slice(v);
        input.extend_from_slice(self.link_type_vec(t));
        let p = self.translator_params();
        let i = 2 * o;
        match self.layout.translator_hidden {
            None => {
                let output = affine(&p[..o * i], &p[o * i..], &input);
                TranslatorTrace {
                    input,
                    hidden: Vec::new(),
                    output,
                }
            }
            Some(m) => {
                let mut hidden = affine(&p[..m * i], &p[m * i..m * i + m], &input);
                for x in &mut hidden {
                    *x = x.tanh();
                }
                let w2 = &p[m * i + m..m * i + m + o * m];
                let output = affine(w2, &p[m * i + m + o * m..], &hidden);
                TranslatorTrace {
                    input,
                    hidden,
                    output,
                }
            }
        }
    }

    /// Accumulate `d loss / d params` for one translation given `d loss / d output`.
    pub(crate) fn translate_backward(
        &self,
        trace: &TranslatorTrace,
        t: LinkType,
        g_out: &[f64],
        subject: EntityRef,
        grad: &mut [f64],
    ) {
        let o = self.layout.dim();
        let i = 2 * o;
        let start = self.layout.translator_offset();
        let p = self.translator_params();
        let mut g_in = vec![0.0; i];
        match self.layout.translator_hidden {
            None => {
                let (gw, gb) = grad[start..start + o * i + o].split_at_mut(o * i);
                affine_backward(&p[..o * i], &trace.input, g_out, gw, gb, &mut g_in);
            }
            Some(m) => {
                let w2_off = m * i + m;
                let mut g_hidden = vec![0.0; m];
                {
                    let g = &mut grad[start + w2_off..start + w2_off + o * m + o];
                    let (gw2, gb2) = g.split_at_mut(o * m);
                    affine_backward(
                        &p[w2_off..w2_off + o * m],
                        &trace.hidden,
                        g_out,
                        gw2,
                        gb2,
                        &mut g_hidden,
                    );
                }
                for (g, hv) in g_hidden.iter_mut().zip(&trace.hidden) {
                    *g *= 1.0 - hv * hv;
                }
                let (gw1, gb1) = grad[start..start + m * i + m].split_at_mut(m * i);
                affine_backward(&p[..m * i], &trace.input, &g_hidden, gw1, gb1, &mut g_in);
            }
        }
        let es = self.layout.entity(subject);
        for (g, d) in grad[es..es + o].iter_mut().zip(&g_in[..o]) {
            *g += d;
        }
        let lt = self.layout.link_type(t);
        for (g, d) in grad[lt..lt + o].iter_mut().zip(&g_in[o..]) {
            *g += d;
        }
    }

    /// Raw ComplEx score of a within-KB triple.
    pub fn score_triple(&self, s: EntityRef, r: RelationId, o: EntityRef) -> Result<f64> {
        if s.kb != o.kb {
            return Err(Error::domain(format!(
                "{s} and {o} live in different kbs; score the replaced triple instead"
            )));
        }
        self.check_entity(s)?;
        self.check_entity(o)?;
        self.check_relation(s.kb, r)?;
        Ok(score(
            self.entity_unchecked(s),
            self.relation_unchecked(s.kb, r),
            self.entity_unchecked(o),
        ))
    }

    /// `sigmoid(ComplEx(s, r, o))`.
    pub fn triple_likelihood(&self, s: EntityRef, r: RelationId, o: EntityRef) -> Result<f64> {
        Ok(sigmoid(self.score_triple(s, r, o)?))
    }

    /// Scores of `(s, r, e)` for every entity `e` of the object KB, in local-id order.
    pub fn object_scores(&self, s: &[f64], kb: KbId, r: RelationId) -> Result<Vec<f64>> {
        self.check_relation(kb, r)?;
        let d = self.layout.dim();
        let mut sr = vec![0.0; d];
        super::complex::product(s, self.relation_unchecked(kb, r), &mut sr);
        let range = self.layout.entity_range(kb);
        Ok(self.params[range]
            .chunks_exact(d)
            .map(|e| super::complex::dot(&sr, e))
            .collect())
    }
}

pub(crate) struct TranslatorTrace {
    pub input: Vec<f64>,
    pub hidden: Vec<f64>,
    pub output: Vec<f64>,
}

/// `w x + b` with `w` row-major of shape `b.len() x x.len()`.
fn affine(w: &[f64], b: &[f64], x: &[f64]) -> Vec<f64> {
    let n = x.len();
    b.iter()
        .enumerate()
        .map(|(r, bias)| bias + w[r * n..(r + 1) * n].iter().zip(x).map(|(a, c)| a * c).sum::<f64>())
        .collect()
}

fn affine_backward(w: &[f64], x: &[f64], g_out: &[f64], gw: &mut [f64], gb: &mut [f64], g_in: &mut [f64]) {
    let n = x.len();
    for (r, &g) in g_out.iter().enumerate() {
        if g == 0.0 {
            continue;
        }
        gb[r] += g;
        let row = &w[r * n..(r + 1) * n];
        for c in 0..n {
            gw[r * n + c] += g * x[c];
            g_in[c] += g * row[c];
        }
    }
}
