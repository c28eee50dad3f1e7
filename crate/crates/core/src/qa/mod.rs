//! Question encoding and answer ranking over a frozen embedding.
//!
//! A question is encoded as the mean of its token embeddings, projected into
//! the embedding's complex space and used as the relation of a ComplEx
//! triple `(topic, question, answer)`. Scores are averaged over topic
//! entities.

mod model;
mod record;
mod store;
mod text;
mod train;

pub use model::{rank_with_vector, QaExample, QaModel};
pub use record::{QuestionRecord, TemplateId};
pub use store::{load_qa, save_qa, QaManifest, QA_MANIFEST_FILE, QA_PARAMS_FILE};
pub use text::{tokenize, Vocab, UNK, UNK_ID};
pub use train::{gold_ranks, sample_answer_negatives, train_qa, QaReport};
