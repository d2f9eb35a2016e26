//! Supervised term weighting for embedding-based text classification.
//!
//! Documents become weighted means of word embeddings. Category-level
//! schemes produce one mean per category and concatenate them.

pub mod classify;
pub mod cli;
pub mod corpus;
pub mod embeddings;
pub mod error;
pub mod eval;
pub mod stats;
pub mod synthetic;
pub mod vectorize;
pub mod weighting;

pub use error::{Error, Result};
