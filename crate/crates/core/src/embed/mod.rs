//! Link-aware ComplEx embeddings.
//!
//! Every KB gets its own entity and relation tables. Links are encoded by
//! scoring replaced triples, whose foreign subject is first mapped through a
//! translator conditioned on a learned link-type vector.

mod checkpoint;
mod complex;
mod loss;
mod model;
mod replace;
mod train;

pub use checkpoint::{load_manifest, load_model, save_model, sha256_hex, ModelManifest, MANIFEST_FILE, PARAMS_FILE};
pub use complex::{complex_score, conj, sigmoid};
pub use loss::{
    contrastive_loss, loss_link, loss_link_with_grad, loss_raw, loss_raw_with_grad, sample_negatives, Example,
    Subject,
};
pub use model::{EmbeddingModel, KbShape, Layout};
pub use replace::{build_replace_sets, replace_set_into, ReplacedTriple};
pub use train::{train_embedding, train_plug_in, training_mrr, PlugInReport, TrainReport};

pub(crate) use checkpoint::{encode as encode_params, read_params};
pub(crate) use complex::{bce_logit, grad_first, product};

use crate::error::Result;

impl EmbeddingModel {
    /// `sigmoid(ComplEx(Trans(h_new_subject ++ E_t), h_r, h_o))`.
    pub fn score_replaced(&self, rt: &ReplacedTriple) -> Result<f64> {
        let s = self.translate(self.entity_vec(rt.new_subject)?, rt.link_type)?;
        let r = self.relation_vec(rt.object.kb, rt.relation)?;
        Ok(sigmoid(complex_score(&s, r, self.entity_vec(rt.object)?)?))
    }
}
