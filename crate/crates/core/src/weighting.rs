//! Term-weighting schemes computed from training-partition counts.
//!
//! Four schemes are supported next to the unweighted baseline:
//!
//! * **TF-CR**: `|w_c|² / (N_c · |w|)`, the share of category `c`'s tokens
//!   that are `w`, times the share of `w`'s occurrences that fall in `c`.
//!   High for frequent words that are exclusive to a category.
//! * **KLD**: `P(w_c) · ln(P(w_c) / Q(w_r))`, the pointwise Kullback-Leibler
//!   contribution of `w` in `c` against the pooled remaining categories.
//! * **TF-TRR**: `(ln tf + 1) · ln(P(w|c) / P(w|r) + α)`, with `α = 1.2`.
//!   The table stores the category-level relevance-ratio factor; the
//!   document-level `tf` part is applied at vectorization time.
//! * **TF-IDF**: `tf · ln(|D| / df)`; category-agnostic, so the table only
//!   carries per-word IDF values.
//!
//! All logarithms are natural. Words never seen in training weigh 0 under every
//! scheme.

use std::collections::HashMap;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::stats::CorpusStats;

/// TF-TRR smoothing constant.
pub const DEFAULT_ALPHA: f64 = 1.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Scheme {
    None,
    TfIdf,
    Kld,
    TfTrr,
    TfCr,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::None,
        Scheme::TfIdf,
        Scheme::Kld,
        Scheme::TfTrr,
        Scheme::TfCr,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::None => "none",
            Scheme::TfIdf => "tfidf",
            Scheme::Kld => "kld",
            Scheme::TfTrr => "tftrr",
            Scheme::TfCr => "tfcr",
        }
    }

    /// Schemes with one weight per (word, category) pair.
    pub fn is_category_level(self) -> bool {
        matches!(self, Scheme::Kld | Scheme::TfTrr | Scheme::TfCr)
    }

    /// Parses a comma-separated list; `all` expands to every scheme.
    pub fn parse_list(s: &str) -> Result<Vec<Scheme>> {
        let mut out = Vec::new();
        for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
            if part.eq_ignore_ascii_case("all") {
                out.extend(Scheme::ALL);
            } else {
                out.push(part.parse()?);
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no weighting scheme given".into()));
        }
        out.dedup();
        Ok(out)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == lower)
            .ok_or_else(|| {
                Error::Config(format!(
                    "unknown scheme '{s}'; valid schemes: none, tfidf, kld, tftrr, tfcr, all"
                ))
            })
    }
}

/// `|w_c|² / (N_c · |w|)`; 0 when the word is absent from `c` or unseen.
pub fn tfcr(stats: &CorpusStats, word: &str, category: usize) -> f64 {
    let Some(id) = stats.word_id(word) else {
        return 0.0;
    };
    tfcr_counts(
        stats.count(word, category),
        stats.category_tokens(category),
        stats.word_totals()[id],
    )
}

fn tfcr_counts(in_category: u64, category_tokens: u64, word_total: u64) -> f64 {
    if in_category == 0 || word_total == 0 {
        return 0.0;
    }
    (in_category * in_category) as f64 / (category_tokens * word_total) as f64
}

/// Remainder probability with the zero-denominator substitution `1 / (N_r + 1)`.
fn smoothed_remainder(stats: &CorpusStats, word: &str, category: usize) -> f64 {
    let q = stats.remainder_prob(word, category);
    if q == 0.0 {
        1.0 / (stats.remainder_tokens(category) + 1) as f64
    } else {
        q
    }
}

/// Unclamped KLD contribution; may be negative for words under-represented in `c`.
pub fn kld_raw(stats: &CorpusStats, word: &str, category: usize) -> f64 {
    let p = stats.category_prob(word, category);
    if p == 0.0 {
        return 0.0;
    }
    let q = smoothed_remainder(stats, word, category);
    p * (p / q).ln()
}

/// KLD contribution clamped at 0.
pub fn kld(stats: &CorpusStats, word: &str, category: usize) -> f64 {
    kld_raw(stats, word, category).max(0.0)
}

/// `ln(P(w|c) / P(w|r) + α)`; `ln α` when the word is absent from `c`.
pub fn trr_factor(stats: &CorpusStats, word: &str, category: usize, alpha: f64) -> f64 {
    let p_c = stats.category_prob(word, category);
    if p_c == 0.0 {
        return alpha.ln();
    }
    let p_r = smoothed_remainder(stats, word, category);
    (p_c / p_r + alpha).ln()
}

/// Log-scaled term frequency times the relevance-ratio factor. `tf_in_doc` must be >= 1.
pub fn tftrr(stats: &CorpusStats, word: &str, category: usize, tf_in_doc: u64, alpha: f64) -> f64 {
    assert!(tf_in_doc >= 1, "tftrr needs a term present in the document");
    log_tf(tf_in_doc) * trr_factor(stats, word, category, alpha)
}

pub(crate) fn log_tf(tf: u64) -> f64 {
    (tf as f64).ln() + 1.0
}

/// `ln(|D| / df)`; 0 for words unseen in training.
pub fn idf(stats: &CorpusStats, word: &str) -> f64 {
    idf_counts(stats.num_docs(), stats.doc_freq(word))
}

fn idf_counts(num_docs: u64, df: u64) -> f64 {
    if df == 0 {
        return 0.0;
    }
    (num_docs as f64 / df as f64).ln()
}

pub fn tfidf(stats: &CorpusStats, word: &str, tf_in_doc: u64) -> f64 {
    tf_in_doc as f64 * idf(stats, word)
}

/// Materialized weights of one scheme over a training vocabulary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(from = "TableData", into = "TableData")]
pub struct WeightTable {
    scheme: Scheme,
    alpha: f64,
    kld_raw: bool,
    num_categories: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    /// Explicit `(category, weight)` entries for pairs with nonzero `|w_c|`.
    category_weights: Vec<Vec<(usize, f64)>>,
    idf: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct TableData {
    scheme: Scheme,
    alpha: f64,
    kld_raw: bool,
    num_categories: usize,
    words: Vec<String>,
    category_weights: Vec<Vec<(usize, f64)>>,
    idf: Vec<f64>,
}

impl From<TableData> for WeightTable {
    fn from(d: TableData) -> Self {
        let index = d
            .words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        WeightTable {
            scheme: d.scheme,
            alpha: d.alpha,
            kld_raw: d.kld_raw,
            num_categories: d.num_categories,
            words: d.words,
            index,
            category_weights: d.category_weights,
            idf: d.idf,
        }
    }
}

impl From<WeightTable> for TableData {
    fn from(t: WeightTable) -> Self {
        TableData {
            scheme: t.scheme,
            alpha: t.alpha,
            kld_raw: t.kld_raw,
            num_categories: t.num_categories,
            words: t.words,
            category_weights: t.category_weights,
            idf: t.idf,
        }
    }
}

/// Scheme plus its tunables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightingConfig {
    pub scheme: Scheme,
    pub alpha: f64,
    /// Keep negative KLD values instead of clamping them to 0.
    pub kld_raw: bool,
}

impl WeightingConfig {
    pub fn new(scheme: Scheme) -> Self {
        WeightingConfig {
            scheme,
            alpha: DEFAULT_ALPHA,
            kld_raw: false,
        }
    }
}

/// Anything that can turn training counts into a weight table.
///
/// Evaluation code is generic over this so that every fold re-fits its own
/// table from its own training partition.
pub trait TableFactory: Sync {
    fn label(&self) -> String;
    fn build(&self, stats: &CorpusStats) -> WeightTable;
}

impl TableFactory for WeightingConfig {
    fn label(&self) -> String {
        self.scheme.name().to_owned()
    }

    fn build(&self, stats: &CorpusStats) -> WeightTable {
        build_table_with(stats, self)
    }
}

/// Factory for [`WeightTable::with_constant_idf`] with value 1: every
/// training word weighs its in-document count.
#[derive(Debug, Clone, Copy, Default)]
pub struct UniformTable;

impl TableFactory for UniformTable {
    fn label(&self) -> String {
        "uniform".to_owned()
    }

    fn build(&self, stats: &CorpusStats) -> WeightTable {
        WeightTable::with_constant_idf(stats, 1.0)
    }
}

pub fn build_table(stats: &CorpusStats, scheme: Scheme) -> WeightTable {
    build_table_with(stats, &WeightingConfig::new(scheme))
}

pub fn build_table_with(stats: &CorpusStats, config: &WeightingConfig) -> WeightTable {
    let words = stats.words().to_vec();
    let index = words.iter().enumerate().map(|(i, w)| (w.clone(), i)).collect();
    let mut table = WeightTable {
        scheme: config.scheme,
        alpha: config.alpha,
        kld_raw: config.kld_raw,
        num_categories: stats.num_categories(),
        words,
        index,
        category_weights: Vec::new(),
        idf: Vec::new(),
    };
    match config.scheme {
        Scheme::None => {
            table.words.clear();
            table.index.clear();
        }
        Scheme::TfIdf => {
            table.idf = stats
                .doc_freqs()
                .iter()
                .map(|&df| idf_counts(stats.num_docs(), df))
                .collect();
        }
        scheme => {
            table.category_weights = (0..stats.vocab_size())
                .into_par_iter()
                .map(|id| {
                    let word = &stats.words()[id];
                    stats
                        .occurrences_of(id)
                        .iter()
                        .map(|&(c, n)| {
                            let w = match scheme {
                                Scheme::TfCr => tfcr_counts(
                                    n,
                                    stats.category_tokens(c),
                                    stats.word_totals()[id],
                                ),
                                Scheme::Kld if config.kld_raw => kld_raw(stats, word, c),
                                Scheme::Kld => kld(stats, word, c),
                                Scheme::TfTrr => trr_factor(stats, word, c, config.alpha),
                                Scheme::None | Scheme::TfIdf => unreachable!(),
                            };
                            (c, w)
                        })
                        .collect()
                })
                .collect();
        }
    }
    table
}

impl WeightTable {
    /// The table of the unweighted baseline, which needs no statistics.
    pub fn unweighted() -> WeightTable {
        WeightTable {
            scheme: Scheme::None,
            alpha: DEFAULT_ALPHA,
            kld_raw: false,
            num_categories: 0,
            words: Vec::new(),
            index: HashMap::new(),
            category_weights: Vec::new(),
            idf: Vec::new(),
        }
    }

    /// A word-level table assigning `value` as the IDF of every training word.
    ///
    /// With `value = 1` the TF-IDF vectorizer reduces to the token-multiplicity
    /// weighted mean, i.e. the unweighted representation.
    pub fn with_constant_idf(stats: &CorpusStats, value: f64) -> WeightTable {
        let mut table = build_table(stats, Scheme::TfIdf);
        table.idf.iter_mut().for_each(|v| *v = value);
        table
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn num_categories(&self) -> usize {
        self.num_categories
    }

    pub fn is_empty(&self) -> bool {
        self.scheme == Scheme::None
    }

    pub fn is_category_level(&self) -> bool {
        self.scheme.is_category_level()
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    pub fn word_id(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    /// Number of explicitly stored (word, category) entries.
    pub fn explicit_entries(&self) -> usize {
        self.category_weights.iter().map(Vec::len).sum()
    }

    /// Category-level weight by word id.
    ///
    /// For TF-TRR this is the relevance-ratio factor, which is `ln α` (not 0)
    /// for a training word absent from `category`.
    pub fn weight_by_id(&self, id: usize, category: usize) -> f64 {
        let row = &self.category_weights[id];
        match row.binary_search_by_key(&category, |e| e.0) {
            Ok(i) => row[i].1,
            Err(_) if self.scheme == Scheme::TfTrr => self.alpha.ln(),
            Err(_) => 0.0,
        }
    }

    /// Category-level weight of `word` in `category` (0 for unseen words).
    pub fn weight(&self, word: &str, category: usize) -> f64 {
        if !self.is_category_level() {
            return 0.0;
        }
        self.word_id(word)
            .map_or(0.0, |id| self.weight_by_id(id, category))
    }

    pub fn idf_by_id(&self, id: usize) -> f64 {
        self.idf.get(id).copied().unwrap_or(0.0)
    }

    pub fn idf(&self, word: &str) -> f64 {
        self.word_id(word).map_or(0.0, |id| self.idf_by_id(id))
    }

    /// Weight of a token occurring `tf` times in a document, for `category`.
    ///
    /// KLD and TF-CR return the per-occurrence weight; TF-TRR and TF-IDF
    /// return the whole-document weight of the distinct token.
    pub fn token_weight(&self, word: &str, category: usize, tf: u64) -> f64 {
        match self.scheme {
            Scheme::None => 1.0,
            Scheme::TfIdf => tf as f64 * self.idf(word),
            Scheme::Kld | Scheme::TfCr => self.weight(word, category),
            Scheme::TfTrr => match self.word_id(word) {
                Some(id) => log_tf(tf) * self.weight_by_id(id, category),
                None => 0.0,
            },
        }
    }

    fn check_category(&self, category: usize) -> Result<()> {
        if category >= self.num_categories {
            return Err(Error::InvalidInput(format!(
                "category {category} out of range (table has {})",
                self.num_categories
            )));
        }
        Ok(())
    }

    /// The `k` highest-weight words for `category`, descending, ties broken
    /// lexicographically. TF-IDF tables rank by IDF.
    pub fn top_k(&self, category: usize, k: usize) -> Result<Vec<(String, f64)>> {
        self.check_category(category)?;
        let mut scored: Vec<(String, f64)> = match self.scheme {
            Scheme::None => Vec::new(),
            Scheme::TfIdf => self
                .words
                .iter()
                .cloned()
                .zip(self.idf.iter().copied())
                .collect(),
            _ => self
                .words
                .iter()
                .enumerate()
                .map(|(id, w)| (w.clone(), self.weight_by_id(id, category)))
                .collect(),
        };
        scored.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        scored.truncate(k);
        Ok(scored)
    }

    /// Export rows sorted by category, then descending weight, then word.
    ///
    /// Category-level tables list their explicit entries (or the top `k` per
    /// category); TF-IDF tables list one `(word, idf)` row per word.
    pub fn export_rows(&self, top_k: Option<usize>) -> Vec<ExportRow> {
        match self.scheme {
            Scheme::None => Vec::new(),
            Scheme::TfIdf => {
                let mut rows: Vec<ExportRow> = self
                    .words
                    .iter()
                    .zip(&self.idf)
                    .map(|(w, &v)| ExportRow {
                        word: w.clone(),
                        category: None,
                        weight: v,
                    })
                    .collect();
                rows.sort_by(|a, b| b.weight.total_cmp(&a.weight).then_with(|| a.word.cmp(&b.word)));
                if let Some(k) = top_k {
                    rows.truncate(k);
                }
                rows
            }
            _ => {
                let mut rows = Vec::new();
                for c in 0..self.num_categories {
                    let mut per: Vec<ExportRow> = match top_k {
                        Some(k) => self
                            .top_k(c, k)
                            .expect("category in range")
                            .into_iter()
                            .map(|(word, weight)| ExportRow {
                                word,
                                category: Some(c),
                                weight,
                            })
                            .collect(),
                        None => self
                            .category_weights
                            .iter()
                            .enumerate()
                            .filter_map(|(id, row)| {
                                row.iter().find(|e| e.0 == c).map(|&(_, weight)| ExportRow {
                                    word: self.words[id].clone(),
                                    category: Some(c),
                                    weight,
                                })
                            })
                            .collect(),
                    };
                    per.sort_by(|a, b| {
                        b.weight.total_cmp(&a.weight).then_with(|| a.word.cmp(&b.word))
                    });
                    rows.extend(per);
                }
                rows
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExportRow {
    pub word: String,
    pub category: Option<usize>,
    pub weight: f64,
}

/// Float formatting with 17 significant digits.
pub fn format_weight(v: f64) -> String {
    format!("{v:.16e}")
}

fn category_name(categories: &[String], c: usize) -> String {
    categories.get(c).cloned().unwrap_or_else(|| c.to_string())
}

pub fn write_tsv<W: Write>(
    out: &mut W,
    rows: &[ExportRow],
    categories: &[String],
) -> std::io::Result<()> {
    let word_level = rows.first().is_some_and(|r| r.category.is_none());
    if word_level {
        writeln!(out, "word\tidf")?;
    } else {
        writeln!(out, "word\tcategory\tweight")?;
    }
    for r in rows {
        match r.category {
            Some(c) => writeln!(
                out,
                "{}\t{}\t{}",
                r.word,
                category_name(categories, c),
                format_weight(r.weight)
            )?,
            None => writeln!(out, "{}\t{}", r.word, format_weight(r.weight))?,
        }
    }
    Ok(())
}

pub fn write_json<W: Write>(
    out: &mut W,
    scheme: Scheme,
    rows: &[ExportRow],
    categories: &[String],
) -> std::io::Result<()> {
    // Written by hand so weights keep their 17 significant digits.
    let quote = |s: &str| serde_json::to_string(s).expect("string serialization");
    writeln!(out, "{{\"scheme\": {}, \"entries\": [", quote(scheme.name()))?;
    for (i, r) in rows.iter().enumerate() {
        let sep = if i + 1 == rows.len() { "" } else { "," };
        match r.category {
            Some(c) => writeln!(
                out,
                "  {{\"word\": {}, \"category\": {}, \"weight\": {}}}{sep}",
                quote(&r.word),
                quote(&category_name(categories, c)),
                format_weight(r.weight)
            )?,
            None => writeln!(
                out,
                "  {{\"word\": {}, \"idf\": {}}}{sep}",
                quote(&r.word),
                format_weight(r.weight)
            )?,
        }
    }
    writeln!(out, "]}}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{LabeledCorpus, TokenizerConfig};

    /// N_A = 10, N_B = 20; "win" occurs 4 times in A and once in B.
    fn toy_stats() -> CorpusStats {
        let a = "win win win win a1 a2 a3 a4 a5 a6";
        let b = "win b1 b2 b3 b4 b5 b6 b7 b8 b9 b10 b11 b12 b13 b14 b15 b16 b17 b18 b19";
        let c = LabeledCorpus::from_texts([(a, "A"), (b, "B")], &TokenizerConfig::default());
        CorpusStats::build_all(&c).unwrap()
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn tfcr_hand_values() {
        let s = toy_stats();
        assert!(close(tfcr(&s, "win", 0), 0.32, 1e-15));
        assert!(close(tfcr(&s, "win", 1), 0.01, 1e-15));
        assert_eq!(tfcr(&s, "a1", 1), 0.0);
        assert_eq!(tfcr(&s, "nowhere", 0), 0.0);
    }

    #[test]
    fn tfcr_identity_case() {
        let c = LabeledCorpus::from_texts([("z z z z", "only")], &TokenizerConfig::default());
        let s = CorpusStats::build_all(&c).unwrap();
        assert_eq!(tfcr(&s, "z", 0), 1.0);
    }

    #[test]
    fn kld_hand_values() {
        // P = 0.4 in A (4 of 10 tokens), Q = 0.05 in B (1 of 20 tokens).
        let s = toy_stats();
        assert!(close(kld(&s, "win", 0), 0.4 * 8f64.ln(), 1e-15));
        assert!(close(kld(&s, "win", 0), 0.83178, 1e-5));
        assert_eq!(kld(&s, "a1", 1), 0.0);
        // P = 0.05 against Q = 0.4 is negative before clamping.
        assert!(kld_raw(&s, "win", 1) < 0.0);
        assert_eq!(kld(&s, "win", 1), 0.0);
    }

    #[test]
    fn kld_equal_probabilities_is_zero() {
        let c = LabeledCorpus::from_texts([("a b", "p"), ("a b", "q")], &TokenizerConfig::default());
        let s = CorpusStats::build_all(&c).unwrap();
        assert_eq!(kld(&s, "a", 0), 0.0);
    }

    #[test]
    fn kld_exclusive_word_uses_substitution() {
        let s = toy_stats();
        // "a1": P = 0.1, Q = 1 / (20 + 1).
        let expected = 0.1 * (0.1 * 21.0f64).ln();
        assert!(close(kld(&s, "a1", 0), expected, 1e-15));
    }

    #[test]
    fn trr_hand_values() {
        let s = toy_stats();
        assert!(close(trr_factor(&s, "win", 0, DEFAULT_ALPHA), 2.21920, 1e-5));
        assert!(close(trr_factor(&s, "a1", 1, DEFAULT_ALPHA), 0.18232, 1e-5));
        let c = LabeledCorpus::from_texts([("a b", "p"), ("a b", "q")], &TokenizerConfig::default());
        let eq = CorpusStats::build_all(&c).unwrap();
        assert!(close(trr_factor(&eq, "a", 0, DEFAULT_ALPHA), 0.78846, 1e-5));
        // (ln 3 + 1) * ln 2.2
        assert!(close(tftrr(&eq, "a", 0, 3, DEFAULT_ALPHA), 1.654666, 1e-6));
        assert!(close(tftrr(&s, "win", 0, 1, DEFAULT_ALPHA), 2.21920, 1e-5));
        assert!(close(tftrr(&s, "a1", 1, 1, DEFAULT_ALPHA), 0.18232, 1e-5));
    }

    #[test]
    #[should_panic]
    fn tftrr_rejects_zero_tf() {
        tftrr(&toy_stats(), "win", 0, 0, DEFAULT_ALPHA);
    }

    #[test]
    fn idf_hand_values() {
        let texts: Vec<(String, &str)> = (0..10)
            .map(|i| {
                let t = if i < 2 { format!("rare common d{i}") } else { format!("common d{i}") };
                (t, if i % 2 == 0 { "a" } else { "b" })
            })
            .collect();
        let c = LabeledCorpus::from_texts(texts, &TokenizerConfig::default());
        let s = CorpusStats::build_all(&c).unwrap();
        assert!(close(tfidf(&s, "rare", 3), 4.82831, 1e-5));
        assert_eq!(idf(&s, "common"), 0.0);
        assert_eq!(idf(&s, "unseen"), 0.0);
    }

    #[test]
    fn table_matches_pointwise() {
        let c = LabeledCorpus::from_texts(
            [("x y y", "A"), ("x x y", "B")],
            &TokenizerConfig::default(),
        );
        let s = CorpusStats::build_all(&c).unwrap();
        let t = build_table(&s, Scheme::TfCr);
        assert_eq!(t.explicit_entries(), 4);
        for w in ["x", "y"] {
            for cat in 0..2 {
                assert_eq!(t.weight(w, cat), tfcr(&s, w, cat));
            }
        }
        assert_eq!(t, build_table(&s, Scheme::TfCr));
        assert!(build_table(&s, Scheme::None).is_empty());
    }

    #[test]
    fn top_k_rules() {
        let s = toy_stats();
        let t = build_table(&s, Scheme::TfCr);
        let top = t.top_k(0, 3).unwrap();
        assert_eq!(top[0].0, "win");
        assert!(close(top[0].1, 0.32, 1e-15));
        // a1..a6 tie at 0.1; lexicographic order.
        assert_eq!(top[1].0, "a1");
        assert_eq!(top[2].0, "a2");
        assert_eq!(t.top_k(0, 1000).unwrap().len(), s.vocab_size());
        assert!(t.top_k(2, 1).is_err());
    }

    #[test]
    fn scheme_parsing() {
        assert_eq!(Scheme::parse_list("all").unwrap(), Scheme::ALL.to_vec());
        assert_eq!(
            Scheme::parse_list("tfcr, kld").unwrap(),
            vec![Scheme::TfCr, Scheme::Kld]
        );
        let err = Scheme::parse_list("bm25").unwrap_err().to_string();
        assert!(err.contains("tfcr") && err.contains("none"));
    }

    #[test]
    fn export_is_sorted_and_round_trips_floats() {
        let t = build_table(&toy_stats(), Scheme::TfCr);
        let rows = t.export_rows(None);
        assert_eq!(rows.len(), t.explicit_entries());
        assert_eq!(rows[0].word, "win");
        let mut buf = Vec::new();
        let cats = vec!["A".to_string(), "B".to_string()];
        write_tsv(&mut buf, &rows, &cats).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let line = text.lines().nth(1).unwrap();
        let parsed: f64 = line.split('\t').nth(2).unwrap().parse().unwrap();
        assert_eq!(parsed, rows[0].weight);

        let mut json = Vec::new();
        write_json(&mut json, Scheme::TfCr, &rows, &cats).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&json).unwrap();
        assert_eq!(v["entries"][0]["weight"].as_f64().unwrap(), rows[0].weight);
    }

    #[test]
    fn table_serde_round_trip() {
        let t = build_table(&toy_stats(), Scheme::TfTrr);
        let back: WeightTable = serde_json::from_str(&serde_json::to_string(&t).unwrap()).unwrap();
        assert_eq!(back, t);
        assert_eq!(back.weight("a1", 1), DEFAULT_ALPHA.ln());
    }
}
