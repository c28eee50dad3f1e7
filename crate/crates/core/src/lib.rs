//! Question answering over several separately stored knowledge bases joined
//! by full and partial links.
//!
//! The crate is organised as a pipeline:
//!
//! - [`kb`]: triple stores, link sets and the full-link fusion used by the
//!   merged baseline.
//! - [`linkmine`]: edit-distance link discovery.
//! - [`embed`]: link-aware ComplEx embeddings with a link-type conditioned
//!   translator, joint and plug-in training.
//! - [`qa`]: question encoding and answer ranking over a frozen embedding.
//! - [`bench`]: synthetic KB pairs and template-driven question generation.
//! - [`eval`]: MRR / Hits@1 and the four system variants.

pub mod bench;
pub mod config;
pub mod embed;
pub mod error;
pub mod eval;
pub mod kb;
pub mod linkmine;
pub mod optim;
pub mod qa;
pub mod rng;

pub use error::{Error, Result};
