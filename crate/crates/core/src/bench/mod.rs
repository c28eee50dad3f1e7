//! Synthetic benchmarks: typed KB pairs with planted links, template-driven
//! questions with derived answers, and their on-disk form.

mod dataset;
mod graph;
mod io;
mod names;
mod synth;
mod template;
pub mod toy;

pub use dataset::{generate_benchmark, generate_dataset, split_sizes, Benchmark, Dataset, Question, Shortfall, CELLS};
pub use graph::{
    derive_answers, template_spec, Branch, Edge, GraphEdge, GraphNode, GraphView, QueryGraph, Step, TemplateSpec,
    TEMPLATES,
};
pub use io::{
    load_bench_kbs, load_benchmark, load_questions, parse_questions, questions_to_jsonl, save_benchmark,
    BenchManifest, CellCount, BENCH_MANIFEST,
};
pub use synth::{generate_synthetic_kbs, PlantedPair, SyntheticPair, KB1, KB2, UPSTREAM};
pub use template::{instantiate_template, verbalize};
