//! Ranking metrics and the end-to-end system variants.

mod metrics;
mod variant;

pub use metrics::{gold_rank, hits_at_1, mean_std, mrr};
pub use variant::{
    breakdown, evaluate, prepare, run_once, run_variant, run_variant_on, score_questions, CellScore, EvalReport,
    EvalSettings, Prepared, QuestionResult, RunReport, Scores, Split, Variant,
};
