//! Document vectors built from word embeddings and optional term weights.
//!
//! Every representation is a weighted mean of the embeddings of the tokens
//! found in the model; tokens missing from the model are skipped and tokens
//! missing from the training statistics weigh 0. Category-level schemes
//! produce one mean per category, concatenated in category order (`N × d`
//! features). A zero vector is returned whenever the weights sum to 0.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::Document;
use crate::embeddings::{EmbeddingModel, LookupConfig};
use crate::error::{Error, Result};
use crate::weighting::{log_tf, Scheme, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Layout {
    Plain { dim: usize },
    Concat { categories: usize, dim: usize },
}

impl Layout {
    pub fn len(&self) -> usize {
        match *self {
            Layout::Plain { dim } => dim,
            Layout::Concat { categories, dim } => categories * dim,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn for_scheme(scheme: Scheme, categories: usize, dim: usize) -> Layout {
        if scheme.is_category_level() {
            Layout::Concat { categories, dim }
        } else {
            Layout::Plain { dim }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DocVector {
    pub values: Vec<f64>,
    pub layout: Layout,
    /// Tokens (with multiplicity) found in the embedding model.
    pub known_tokens: usize,
}

/// Distinct tokens found in the model, in first-appearance order.
struct FoundTokens<'a> {
    entries: Vec<(&'a str, u64, &'a [f64])>,
    known: usize,
}

impl<'a> FoundTokens<'a> {
    fn collect(tokens: &'a [String], model: &'a EmbeddingModel, lookup: &LookupConfig) -> Self {
        let mut entries: Vec<(&'a str, u64, &'a [f64])> = Vec::new();
        let mut position = std::collections::HashMap::new();
        let mut known = 0;
        for token in tokens {
            if let Some(&i) = position.get(token.as_str()) {
                let e: &mut (&str, u64, &[f64]) = &mut entries[i];
                e.1 += 1;
                known += 1;
            } else if let Some(vector) = model.lookup(token, lookup) {
                position.insert(token.as_str(), entries.len());
                entries.push((token.as_str(), 1, vector));
                known += 1;
            }
        }
        FoundTokens { entries, known }
    }

    /// `Σ w·emb / Σ w`, where `weight(token, tf)` gives the total weight of a
    /// distinct token.
    fn weighted_mean(&self, dim: usize, mut weight: impl FnMut(&str, u64) -> f64) -> Vec<f64> {
        let mut acc = vec![0.0; dim];
        let mut denom = 0.0;
        for &(token, tf, vector) in &self.entries {
            let w = weight(token, tf);
            if w == 0.0 {
                continue;
            }
            denom += w;
            for (a, &v) in acc.iter_mut().zip(vector) {
                *a += w * v;
            }
        }
        if denom == 0.0 {
            return vec![0.0; dim];
        }
        acc.iter_mut().for_each(|a| *a /= denom);
        if acc.iter().any(|a| !a.is_finite()) {
            return vec![0.0; dim];
        }
        acc
    }
}

/// Arithmetic mean of the embeddings of known tokens, multiplicity respected.
pub fn vectorize_unweighted(
    tokens: &[String],
    model: &EmbeddingModel,
    lookup: &LookupConfig,
) -> DocVector {
    let found = FoundTokens::collect(tokens, model, lookup);
    DocVector {
        values: found.weighted_mean(model.dim(), |_, tf| tf as f64),
        layout: Layout::Plain { dim: model.dim() },
        known_tokens: found.known,
    }
}

fn category_weight_fn<'t>(
    table: &'t WeightTable,
    category: usize,
) -> impl FnMut(&str, u64) -> f64 + 't {
    move |token, tf| match table.word_id(token) {
        None => 0.0,
        Some(id) => {
            let w = table.weight_by_id(id, category);
            if table.scheme() == Scheme::TfTrr {
                log_tf(tf) * w
            } else {
                tf as f64 * w
            }
        }
    }
}

/// Weighted mean for one category of a category-level table.
pub fn vectorize_weighted_category(
    tokens: &[String],
    model: &EmbeddingModel,
    table: &WeightTable,
    category: usize,
    lookup: &LookupConfig,
) -> Vec<f64> {
    let found = FoundTokens::collect(tokens, model, lookup);
    found.weighted_mean(model.dim(), category_weight_fn(table, category))
}

/// Concatenation of the per-category weighted means, in category order.
pub fn vectorize_concat(
    tokens: &[String],
    model: &EmbeddingModel,
    table: &WeightTable,
    lookup: &LookupConfig,
) -> DocVector {
    let found = FoundTokens::collect(tokens, model, lookup);
    let n = table.num_categories();
    let dim = model.dim();
    let mut values = Vec::with_capacity(n * dim);
    for c in 0..n {
        values.extend(found.weighted_mean(dim, category_weight_fn(table, c)));
    }
    DocVector {
        values,
        layout: Layout::Concat { categories: n, dim },
        known_tokens: found.known,
    }
}

/// TF-IDF weighted mean over distinct known tokens (`d` features).
pub fn vectorize_tfidf(
    tokens: &[String],
    model: &EmbeddingModel,
    table: &WeightTable,
    lookup: &LookupConfig,
) -> DocVector {
    let found = FoundTokens::collect(tokens, model, lookup);
    DocVector {
        values: found.weighted_mean(model.dim(), |token, tf| tf as f64 * table.idf(token)),
        layout: Layout::Plain { dim: model.dim() },
        known_tokens: found.known,
    }
}

/// Picks the representation matching the table's scheme.
pub fn vectorize(
    tokens: &[String],
    model: &EmbeddingModel,
    table: &WeightTable,
    lookup: &LookupConfig,
) -> DocVector {
    match table.scheme() {
        Scheme::None => vectorize_unweighted(tokens, model, lookup),
        Scheme::TfIdf => vectorize_tfidf(tokens, model, table, lookup),
        Scheme::Kld | Scheme::TfTrr | Scheme::TfCr => vectorize_concat(tokens, model, table, lookup),
    }
}

/// Vectorizes `documents` in order, in parallel.
pub fn vectorize_documents(
    documents: &[&Document],
    model: &EmbeddingModel,
    table: &WeightTable,
    lookup: &LookupConfig,
) -> Vec<Vec<f64>> {
    documents
        .par_iter()
        .map(|d| vectorize(&d.tokens, model, table, lookup).values)
        .collect()
}

/// Per-dimension standardization fitted on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScalerParams {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Dimensions with a standard deviation below this are only centered.
pub const MIN_STD: f64 = 1e-12;

impl ScalerParams {
    pub fn fit(vectors: &[Vec<f64>]) -> Result<ScalerParams> {
        if vectors.len() < 2 {
            return Err(Error::InvalidInput(
                "standardization needs at least 2 training vectors".into(),
            ));
        }
        let dim = vectors[0].len();
        if vectors.iter().any(|v| v.len() != dim) {
            return Err(Error::InvalidInput("vectors differ in length".into()));
        }
        let n = vectors.len() as f64;
        let mut mean = vec![0.0; dim];
        for v in vectors {
            mean.iter_mut().zip(v).for_each(|(m, x)| *m += x);
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for v in vectors {
            for ((s, x), m) in var.iter_mut().zip(v).zip(&mean) {
                *s += (x - m) * (x - m);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt()).collect();
        Ok(ScalerParams { mean, std })
    }

    pub fn apply(&self, vector: &mut [f64]) {
        for ((x, m), s) in vector.iter_mut().zip(&self.mean).zip(&self.std) {
            *x -= m;
            if *s >= MIN_STD {
                *x /= s;
            }
        }
    }

    pub fn apply_all(&self, vectors: &mut [Vec<f64>]) {
        vectors.iter_mut().for_each(|v| self.apply(v));
    }
}
