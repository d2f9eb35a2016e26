//! Generated corpora with a known answer.
//!
//! Every category owns a set of exclusive keywords; the rest of each document
//! is drawn from a vocabulary shared by all categories. Exclusive keywords
//! have a category ratio of 1, so a category-aware weighting should single
//! them out.

use rand::seq::SliceRandom;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::{Document, LabeledCorpus};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KeywordCorpusSpec {
    pub documents: usize,
    pub categories: usize,
    pub keywords_per_category: usize,
    pub shared_vocabulary: usize,
    /// Keyword tokens per document.
    pub keyword_tokens: usize,
    /// Shared-vocabulary tokens per document.
    pub shared_tokens: usize,
    pub seed: u64,
}

impl Default for KeywordCorpusSpec {
    fn default() -> Self {
        KeywordCorpusSpec {
            documents: 1000,
            categories: 4,
            keywords_per_category: 20,
            shared_vocabulary: 200,
            keyword_tokens: 10,
            shared_tokens: 30,
            seed: 0,
        }
    }
}

pub fn keyword(category: usize, index: usize) -> String {
    format!("kw{category}x{index}")
}

pub fn shared_word(index: usize) -> String {
    format!("common{index}")
}

/// Document `i` belongs to category `i % categories`; its tokens are shuffled
/// keyword and shared draws (uniform, with replacement).
pub fn keyword_corpus(spec: &KeywordCorpusSpec) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let categories: Vec<String> = (0..spec.categories).map(|c| format!("cat{c}")).collect();
    let documents = (0..spec.documents)
        .map(|i| {
            let label = i % spec.categories;
            let mut tokens: Vec<String> = (0..spec.keyword_tokens)
                .map(|_| keyword(label, rng.gen_range(0..spec.keywords_per_category)))
                .collect();
            for _ in 0..spec.shared_tokens {
                tokens.push(shared_word(rng.gen_range(0..spec.shared_vocabulary)));
            }
            tokens.shuffle(&mut rng);
            Document::new(tokens, Some(label), format!("doc{i}"))
        })
        .collect();
    LabeledCorpus {
        documents,
        categories,
        seed: None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn shape_and_exclusivity() {
        let spec = KeywordCorpusSpec {
            documents: 40,
            ..Default::default()
        };
        let c = keyword_corpus(&spec);
        assert_eq!(c.len(), 40);
        assert_eq!(c.class_counts(), vec![10; 4]);
        for doc in &c.documents {
            assert_eq!(doc.tokens.len(), 40);
            let own = format!("kw{}x", doc.label.unwrap());
            let kws = doc.tokens.iter().filter(|t| t.starts_with("kw")).count();
            assert_eq!(kws, 10);
            assert!(doc.tokens.iter().filter(|t| t.starts_with("kw")).all(|t| t.starts_with(&own)));
        }
        assert_eq!(keyword_corpus(&spec), c);
    }
}
