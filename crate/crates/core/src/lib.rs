//! Ranks the attributes of product categories by how often customers ask
//! about them.
//!
//! The pipeline turns raw enquiry text into clean tokenized sentences,
//! trains character n-gram word embeddings on them, matches sentences
//! against the attributes of a category schema by cosine similarity, and
//! aggregates the matches into a per-category attribute ranking. Two
//! baselines (keyword extraction over a co-occurrence graph, and matching
//! with externally trained word vectors) and an evaluator against labelled
//! ground truth round out the crate.

pub mod embedding;
pub mod error;
pub mod evaluator;
pub mod kg_store;
pub mod matcher;
pub mod pipeline;
pub mod preprocess;
pub mod ranker;
pub mod textrank;

pub use error::{Error, Result};
