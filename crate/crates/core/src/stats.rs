//! Count aggregates over a training partition.
//!
//! Token-level counts (`|w_c|`, `N_c`, `|w|`) and the document frequency used
//! by TF-IDF are gathered in a single pass. Word × category occurrences are
//! stored sparsely: each word keeps a short category-sorted list.

use std::collections::HashMap;

use serde::Serialize;

use crate::corpus::LabeledCorpus;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    words: Vec<String>,
    index: HashMap<String, usize>,
    occurrences: Vec<Vec<(usize, u64)>>,
    category_tokens: Vec<u64>,
    word_totals: Vec<u64>,
    doc_freq: Vec<u64>,
    num_docs: u64,
}

/// Diagnostic export of a stats structure.
#[derive(Debug, Clone, Serialize)]
pub struct StatsSummary {
    pub num_docs: u64,
    pub vocab_size: usize,
    pub total_tokens: u64,
    pub category_tokens: Vec<CategoryTokens>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CategoryTokens {
    pub category: String,
    pub tokens: u64,
}

impl CorpusStats {
    fn empty(num_categories: usize) -> Self {
        CorpusStats {
            words: Vec::new(),
            index: HashMap::new(),
            occurrences: Vec::new(),
            category_tokens: vec![0; num_categories],
            word_totals: Vec::new(),
            doc_freq: Vec::new(),
            num_docs: 0,
        }
    }

    fn intern(&mut self, word: &str) -> usize {
        if let Some(&id) = self.index.get(word) {
            return id;
        }
        let id = self.words.len();
        self.words.push(word.to_owned());
        self.index.insert(word.to_owned(), id);
        self.occurrences.push(Vec::new());
        self.word_totals.push(0);
        self.doc_freq.push(0);
        id
    }

    fn add_occurrences(&mut self, id: usize, category: usize, count: u64) {
        let row = &mut self.occurrences[id];
        match row.binary_search_by_key(&category, |e| e.0) {
            Ok(i) => row[i].1 += count,
            Err(i) => row.insert(i, (category, count)),
        }
    }

    /// Counts the documents at `subset` (indices into `corpus`).
    pub fn build(corpus: &LabeledCorpus, subset: &[usize]) -> Result<Self> {
        if subset.is_empty() {
            return Err(Error::InvalidInput(
                "cannot build statistics from an empty document subset".into(),
            ));
        }
        let mut stats = CorpusStats::empty(corpus.num_categories());
        // Position (1-based) of the last document that bumped each word's df.
        let mut last_seen: Vec<usize> = Vec::new();
        for (pos, &doc_idx) in subset.iter().enumerate() {
            let doc = corpus.documents.get(doc_idx).ok_or_else(|| {
                Error::InvalidInput(format!("document index {doc_idx} out of range"))
            })?;
            let category = match doc.label {
                Some(l) if l < corpus.num_categories() => l,
                Some(l) => {
                    return Err(Error::InvalidInput(format!(
                        "document {} has out-of-range label {l}",
                        doc.source_id
                    )))
                }
                None => {
                    return Err(Error::InvalidInput(format!(
                        "document {} in the training subset is unlabeled",
                        doc.source_id
                    )))
                }
            };
            stats.num_docs += 1;
            for token in &doc.tokens {
                let id = stats.intern(token);
                if id == last_seen.len() {
                    last_seen.push(0);
                }
                stats.add_occurrences(id, category, 1);
                stats.word_totals[id] += 1;
                stats.category_tokens[category] += 1;
                if last_seen[id] != pos + 1 {
                    last_seen[id] = pos + 1;
                    stats.doc_freq[id] += 1;
                }
            }
        }
        Ok(stats)
    }

    /// Counts every document of `corpus`.
    pub fn build_all(corpus: &LabeledCorpus) -> Result<Self> {
        let all: Vec<usize> = (0..corpus.len()).collect();
        Self::build(corpus, &all)
    }

    /// Field-wise sum of two stats built from disjoint subsets.
    pub fn merge(&self, other: &CorpusStats) -> Result<CorpusStats> {
        if self.num_categories() != other.num_categories() {
            return Err(Error::InvalidInput(format!(
                "cannot merge stats over {} and {} categories",
                self.num_categories(),
                other.num_categories()
            )));
        }
        let mut out = self.clone();
        for (oid, word) in other.words.iter().enumerate() {
            let id = out.intern(word);
            for &(c, n) in &other.occurrences[oid] {
                out.add_occurrences(id, c, n);
            }
            out.word_totals[id] += other.word_totals[oid];
            out.doc_freq[id] += other.doc_freq[oid];
        }
        for (mine, theirs) in out.category_tokens.iter_mut().zip(&other.category_tokens) {
            *mine += theirs;
        }
        out.num_docs += other.num_docs;
        Ok(out)
    }

    /// Drops words whose total count is below `min_count`; category token
    /// totals are recomputed so the denominators match the pruned vocabulary.
    pub fn with_min_count(&self, min_count: u64) -> CorpusStats {
        let mut out = CorpusStats::empty(self.num_categories());
        out.num_docs = self.num_docs;
        for (id, word) in self.words.iter().enumerate() {
            if self.word_totals[id] < min_count {
                continue;
            }
            let nid = out.intern(word);
            out.occurrences[nid] = self.occurrences[id].clone();
            out.word_totals[nid] = self.word_totals[id];
            out.doc_freq[nid] = self.doc_freq[id];
            for &(c, n) in &self.occurrences[id] {
                out.category_tokens[c] += n;
            }
        }
        out
    }

    pub fn num_categories(&self) -> usize {
        self.category_tokens.len()
    }

    pub fn num_docs(&self) -> u64 {
        self.num_docs
    }

    pub fn vocab_size(&self) -> usize {
        self.words.len()
    }

    /// Vocabulary in first-appearance order; position is the word id.
    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Nonzero `(category, |w_c|)` pairs for a word id, sorted by category.
    pub fn occurrences_of(&self, id: usize) -> &[(usize, u64)] {
        &self.occurrences[id]
    }

    /// `|w_c|`.
    pub fn count(&self, word: &str, category: usize) -> u64 {
        self.word_id(word)
            .and_then(|id| {
                self.occurrences[id]
                    .binary_search_by_key(&category, |e| e.0)
                    .ok()
                    .map(|i| self.occurrences[id][i].1)
            })
            .unwrap_or(0)
    }

    /// `|w|`.
    pub fn word_total(&self, word: &str) -> u64 {
        self.word_id(word).map_or(0, |id| self.word_totals[id])
    }

    pub fn doc_freq(&self, word: &str) -> u64 {
        self.word_id(word).map_or(0, |id| self.doc_freq[id])
    }

    pub fn word_totals(&self) -> &[u64] {
        &self.word_totals
    }

    pub fn doc_freqs(&self) -> &[u64] {
        &self.doc_freq
    }

    /// `N_c`.
    pub fn category_tokens(&self, category: usize) -> u64 {
        self.category_tokens[category]
    }

    pub fn total_tokens(&self) -> u64 {
        self.category_tokens.iter().sum()
    }

    /// Token total of every category except `category`.
    pub fn remainder_tokens(&self, category: usize) -> u64 {
        self.total_tokens() - self.category_tokens[category]
    }

    /// Share of category `c`'s tokens that are `word`: `|w_c| / N_c`.
    pub fn category_prob(&self, word: &str, category: usize) -> f64 {
        let n_c = self.category_tokens[category];
        if n_c == 0 {
            return 0.0;
        }
        self.count(word, category) as f64 / n_c as f64
    }

    /// Share of the pooled remaining categories' tokens that are `word`.
    pub fn remainder_prob(&self, word: &str, category: usize) -> f64 {
        let numerator = self.word_total(word) - self.count(word, category);
        if numerator == 0 {
            return 0.0;
        }
        numerator as f64 / self.remainder_tokens(category) as f64
    }

    pub fn summary(&self, categories: &[String]) -> StatsSummary {
        StatsSummary {
            num_docs: self.num_docs,
            vocab_size: self.words.len(),
            total_tokens: self.total_tokens(),
            category_tokens: self
                .category_tokens
                .iter()
                .enumerate()
                .map(|(c, &tokens)| CategoryTokens {
                    category: categories.get(c).cloned().unwrap_or_else(|| c.to_string()),
                    tokens,
                })
                .collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, TokenizerConfig};

    fn two_doc() -> LabeledCorpus {
        LabeledCorpus::from_texts([("x x y", "A"), ("y z", "B")], &TokenizerConfig::default())
    }

    #[test]
    fn hand_counted_two_documents() {
        let s = CorpusStats::build_all(&two_doc()).unwrap();
        assert_eq!(s.count("x", 0), 2);
        assert_eq!(s.category_tokens(0), 3);
        assert_eq!(s.word_total("y"), 2);
        assert_eq!(s.doc_freq("y"), 2);
        assert_eq!(s.doc_freq("x"), 1);
        assert_eq!(s.num_docs(), 2);
        assert_eq!(s.category_prob("x", 0), 2.0 / 3.0);
        assert_eq!(s.category_prob("q", 0), 0.0);
        assert_eq!(s.remainder_prob("x", 0), 0.0);
        assert_eq!(s.remainder_prob("y", 0), 0.5);
    }

    #[test]
    fn empty_document_counts_only_toward_num_docs() {
        let mut c = two_doc();
        c.documents.push(Document::new(vec![], Some(0), "empty"));
        let s = CorpusStats::build_all(&c).unwrap();
        assert_eq!(s.num_docs(), 3);
        assert_eq!(s.total_tokens(), 5);
        assert_eq!(s.vocab_size(), 3);
    }

    #[test]
    fn unlabeled_and_empty_subsets_rejected() {
        let mut c = two_doc();
        c.documents.push(Document::new(vec!["q".into()], None, "orphan"));
        let err = CorpusStats::build(&c, &[0, 2]).unwrap_err();
        assert!(err.to_string().contains("orphan"));
        assert!(CorpusStats::build(&c, &[]).is_err());
    }

    #[test]
    fn remainder_prob_hand_count() {
        // |w| = 5, |w_c| = 4, remainder tokens = 20.
        let mut texts = vec![("w w w w", "c".to_string())];
        texts.push(("w", "r".into()));
        texts.push(("f f f f f f f f f f f f f f f f f f f", "r".into()));
        let c = LabeledCorpus::from_texts(texts, &TokenizerConfig::default());
        let s = CorpusStats::build_all(&c).unwrap();
        assert_eq!(s.remainder_tokens(0), 20);
        assert_eq!(s.remainder_prob("w", 0), 1.0 / 20.0);
    }

    #[test]
    fn identical_categories_are_symmetric() {
        let c = LabeledCorpus::from_texts(
            [("a b b", "p"), ("a b b", "q")],
            &TokenizerConfig::default(),
        );
        let s = CorpusStats::build_all(&c).unwrap();
        for w in ["a", "b"] {
            assert_eq!(s.category_prob(w, 0), s.remainder_prob(w, 0));
        }
        assert_eq!(s.category_prob("a", 0), 1.0 / 3.0);
    }

    #[test]
    fn single_word_category_prob_is_one() {
        let c = LabeledCorpus::from_texts([("z z z", "p"), ("q", "r")], &TokenizerConfig::default());
        let s = CorpusStats::build_all(&c).unwrap();
        assert_eq!(s.category_prob("z", 0), 1.0);
    }

    #[test]
    fn min_count_pruning_recomputes_denominators() {
        let s = CorpusStats::build_all(&two_doc()).unwrap().with_min_count(2);
        assert_eq!(s.words(), ["x", "y"]);
        assert_eq!(s.category_tokens(1), 1);
        assert_eq!(s.total_tokens(), 4);
    }
}
