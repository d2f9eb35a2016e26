//! Labeled corpus ingestion, tokenization, sampling and split planning.
//!
//! Everything here is immutable once built. A [`LabeledCorpus`] can be shared
//! across worker threads; only the loaders touch the filesystem.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default cap applied by [`sample`] when reproducing the large-dataset protocol.
pub const DEFAULT_SAMPLE_CAP: usize = 100_000;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    /// Keep the original casing (for cased vocabularies such as the Google News vectors).
    #[serde(default)]
    pub preserve_case: bool,
}

impl TokenizerConfig {
    pub fn preserving_case() -> Self {
        TokenizerConfig {
            preserve_case: true,
        }
    }
}

/// Splits `text` on every maximal run of non-alphanumeric characters.
///
/// Lowercasing happens before splitting so that case mappings which expand
/// into combining marks are split the same way on a second pass.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let normalized;
    let text = if config.preserve_case {
        text
    } else {
        normalized = text.to_lowercase();
        normalized.as_str()
    };
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_owned)
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub tokens: Vec<String>,
    /// Index into [`LabeledCorpus::categories`]; `None` for unlabeled input.
    pub label: Option<usize>,
    pub source_id: String,
}

impl Document {
    pub fn new(tokens: Vec<String>, label: Option<usize>, source_id: impl Into<String>) -> Self {
        Document {
            tokens,
            label,
            source_id: source_id.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledCorpus {
    pub documents: Vec<Document>,
    pub categories: Vec<String>,
    /// Seed of the last sampling step applied, if any.
    pub seed: Option<u64>,
}

impl LabeledCorpus {
    /// Builds a corpus from `(text, label)` pairs, indexing labels by first appearance.
    pub fn from_texts<I, S, L>(items: I, config: &TokenizerConfig) -> Self
    where
        I: IntoIterator<Item = (S, L)>,
        S: AsRef<str>,
        L: AsRef<str>,
    {
        let mut builder = CorpusBuilder::default();
        for (i, (text, label)) in items.into_iter().enumerate() {
            builder.push(
                tokenize(text.as_ref(), config),
                Some(label.as_ref()),
                format!("{i}"),
            );
        }
        builder.finish()
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn num_categories(&self) -> usize {
        self.categories.len()
    }

    pub fn labels(&self) -> Vec<Option<usize>> {
        self.documents.iter().map(|d| d.label).collect()
    }

    /// Per-category document counts.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.categories.len()];
        for label in self.documents.iter().filter_map(|d| d.label) {
            counts[label] += 1;
        }
        counts
    }

    /// Distinct tokens in first-appearance order.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut seen = std::collections::HashSet::new();
        let mut vocab = Vec::new();
        for token in self.documents.iter().flat_map(|d| d.tokens.iter()) {
            if seen.insert(token.as_str()) {
                vocab.push(token.clone());
            }
        }
        vocab
    }

    /// Checks the invariants required before any training step.
    pub fn validate_for_training(&self) -> Result<()> {
        if self.categories.len() < 2 {
            return Err(Error::InvalidInput(format!(
                "training needs at least 2 categories, corpus has {}",
                self.categories.len()
            )));
        }
        for doc in &self.documents {
            match doc.label {
                None => {
                    return Err(Error::InvalidInput(format!(
                        "document {} has no label",
                        doc.source_id
                    )))
                }
                Some(l) if l >= self.categories.len() => {
                    return Err(Error::InvalidInput(format!(
                        "document {} has label {l} but only {} categories exist",
                        doc.source_id,
                        self.categories.len()
                    )))
                }
                Some(_) => {}
            }
        }
        Ok(())
    }

    /// Appends `other`, re-indexing its labels by category name.
    pub fn concat(mut self, other: LabeledCorpus) -> LabeledCorpus {
        let mut index: HashMap<String, usize> = self
            .categories
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let remap: Vec<usize> = other
            .categories
            .iter()
            .map(|name| {
                *index.entry(name.clone()).or_insert_with(|| {
                    self.categories.push(name.clone());
                    self.categories.len() - 1
                })
            })
            .collect();
        self.documents
            .extend(other.documents.into_iter().map(|mut d| {
                d.label = d.label.map(|l| remap[l]);
                d
            }));
        self
    }

    /// Returns the documents at `indices`, in the given order.
    pub fn subset(&self, indices: &[usize]) -> LabeledCorpus {
        LabeledCorpus {
            documents: indices.iter().map(|&i| self.documents[i].clone()).collect(),
            categories: self.categories.clone(),
            seed: self.seed,
        }
    }
}

#[derive(Default)]
struct CorpusBuilder {
    documents: Vec<Document>,
    categories: Vec<String>,
    index: HashMap<String, usize>,
}

impl CorpusBuilder {
    fn label_index(&mut self, label: &str) -> usize {
        if let Some(&i) = self.index.get(label) {
            return i;
        }
        let i = self.categories.len();
        self.categories.push(label.to_owned());
        self.index.insert(label.to_owned(), i);
        i
    }

    fn push(&mut self, tokens: Vec<String>, label: Option<&str>, source_id: String) {
        let label = label.map(|l| self.label_index(l));
        self.documents.push(Document::new(tokens, label, source_id));
    }

    fn finish(self) -> LabeledCorpus {
        LabeledCorpus {
            documents: self.documents,
            categories: self.categories,
            seed: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CsvOptions {
    pub text_column: String,
    pub label_column: String,
    pub delimiter: u8,
}

impl Default for CsvOptions {
    fn default() -> Self {
        CsvOptions {
            text_column: "text".into(),
            label_column: "label".into(),
            delimiter: b',',
        }
    }
}

impl CsvOptions {
    pub fn tsv() -> Self {
        CsvOptions {
            delimiter: b'\t',
            ..Default::default()
        }
    }
}

fn column_position(headers: &csv::ByteRecord, name: &str) -> Option<usize> {
    headers
        .iter()
        .position(|h| String::from_utf8_lossy(h).trim() == name)
}

/// Loads a delimited file with a header row. An empty label cell yields an unlabeled document.
pub fn load_csv(
    path: impl AsRef<Path>,
    options: &CsvOptions,
    tokenizer: &TokenizerConfig,
) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .delimiter(options.delimiter)
        .has_headers(true)
        .from_reader(file);
    let headers = reader
        .byte_headers()
        .map_err(|e| Error::ingest(path, format!("cannot read header row: {e}")))?
        .clone();
    let text_col = column_position(&headers, &options.text_column)
        .ok_or_else(|| Error::ingest(path, format!("missing column '{}'", options.text_column)))?;
    let label_col = column_position(&headers, &options.label_column).ok_or_else(|| {
        Error::ingest(path, format!("missing column '{}'", options.label_column))
    })?;

    let mut builder = CorpusBuilder::default();
    for (i, record) in reader.byte_records().enumerate() {
        // Header is row 1.
        let row = i + 2;
        let record =
            record.map_err(|e| Error::ingest(path, format!("unreadable row {row}: {e}")))?;
        let field = |col: usize| {
            record
                .get(col)
                .map(|b| String::from_utf8_lossy(b).into_owned())
                .ok_or_else(|| Error::ingest(path, format!("unreadable row {row}: too few fields")))
        };
        let text = field(text_col)?;
        let label = field(label_col)?;
        let label = label.trim();
        builder.push(
            tokenize(&text, tokenizer),
            (!label.is_empty()).then_some(label),
            format!("row{row}"),
        );
    }
    Ok(builder.finish())
}

/// Loads one JSON object per line. Blank lines are skipped.
pub fn load_jsonl(
    path: impl AsRef<Path>,
    text_key: &str,
    label_key: &str,
    tokenizer: &TokenizerConfig,
) -> Result<LabeledCorpus> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let content = String::from_utf8_lossy(&bytes);
    let mut builder = CorpusBuilder::default();
    for (i, line) in content.lines().enumerate() {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let value: serde_json::Value = serde_json::from_str(line)
            .map_err(|e| Error::ingest(path, format!("unreadable line {line_no}: {e}")))?;
        let text = match value.get(text_key) {
            Some(serde_json::Value::String(s)) => s.clone(),
            Some(_) => {
                return Err(Error::ingest(
                    path,
                    format!("line {line_no}: key '{text_key}' is not a string"),
                ))
            }
            None => {
                return Err(Error::ingest(
                    path,
                    format!("line {line_no}: missing key '{text_key}'"),
                ))
            }
        };
        let label = match value.get(label_key) {
            None | Some(serde_json::Value::Null) => None,
            Some(serde_json::Value::String(s)) => Some(s.clone()),
            Some(other) => Some(other.to_string()),
        };
        builder.push(
            tokenize(&text, tokenizer),
            label.as_deref(),
            format!("line{line_no}"),
        );
    }
    Ok(builder.finish())
}

fn sorted_entries(dir: &Path) -> Result<Vec<PathBuf>> {
    let mut entries = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .map(|e| e.map(|e| e.path()).map_err(|err| Error::io(dir, err)))
        .collect::<Result<Vec<_>>>()?;
    entries.sort();
    Ok(entries)
}

/// Loads a directory-per-category layout such as the 20 Newsgroups distribution.
///
/// Categories are the subdirectory names in sorted order; every regular file
/// inside a category directory is one document. Invalid UTF-8 is replaced with
/// U+FFFD, which the tokenizer then treats as a separator.
pub fn load_20ng(root: impl AsRef<Path>, tokenizer: &TokenizerConfig) -> Result<LabeledCorpus> {
    let root = root.as_ref();
    let mut builder = CorpusBuilder::default();
    for dir in sorted_entries(root)?.into_iter().filter(|p| p.is_dir()) {
        let category = dir
            .file_name()
            .map(|n| n.to_string_lossy().into_owned())
            .unwrap_or_default();
        for file in sorted_entries(&dir)?.into_iter().filter(|p| p.is_file()) {
            let bytes = fs::read(&file).map_err(|e| Error::io(&file, e))?;
            let text = String::from_utf8_lossy(&bytes);
            let name = file
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default();
            builder.push(
                tokenize(&text, tokenizer),
                Some(&category),
                format!("{category}/{name}"),
            );
        }
    }
    if builder.documents.is_empty() {
        return Err(Error::ingest(
            root,
            "no documents found (expected one subdirectory per category)",
        ));
    }
    Ok(builder.finish())
}

/// Uniform sample without replacement of `min(cap, len)` documents, original order kept.
pub fn sample(corpus: &LabeledCorpus, cap: usize, seed: u64) -> LabeledCorpus {
    let n = corpus.len();
    if cap >= n {
        let mut out = corpus.clone();
        out.seed = Some(seed);
        return out;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut picked = index::sample(&mut rng, n, cap).into_vec();
    picked.sort_unstable();
    let mut out = corpus.subset(&picked);
    out.seed = Some(seed);
    out
}

/// Fold assignment plus the nested training-size ladder used for learning curves.
///
/// Fold 0 doubles as the fixed held-out partition for learning curves; the
/// ladder samples are prefixes of one shuffled ordering of the remaining
/// documents, so every smaller sample is contained in every larger one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitPlan {
    pub fold_assignments: Vec<usize>,
    pub k: usize,
    pub size_ladder: Vec<usize>,
    pub seed: u64,
    pub stratified: bool,
    training_order: Vec<usize>,
}

impl SplitPlan {
    pub fn num_docs(&self) -> usize {
        self.fold_assignments.len()
    }

    /// Documents in `fold`, ascending.
    pub fn fold_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f == fold)
            .map(|(i, _)| i)
            .collect()
    }

    /// Documents outside `fold`, ascending.
    pub fn training_indices(&self, fold: usize) -> Vec<usize> {
        self.fold_assignments
            .iter()
            .enumerate()
            .filter(|&(_, &f)| f != fold)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &f in &self.fold_assignments {
            sizes[f] += 1;
        }
        sizes
    }

    /// The fixed held-out partition used for learning curves.
    pub fn holdout_indices(&self) -> Vec<usize> {
        self.fold_indices(0)
    }

    pub fn training_pool_size(&self) -> usize {
        self.training_order.len()
    }

    /// The nested training sample of the given size, ascending.
    pub fn ladder_sample(&self, size: usize) -> Result<Vec<usize>> {
        if size > self.training_order.len() {
            return Err(Error::InvalidInput(format!(
                "training size {size} exceeds the {} available training documents",
                self.training_order.len()
            )));
        }
        let mut picked = self.training_order[..size].to_vec();
        picked.sort_unstable();
        Ok(picked)
    }
}

/// Reorders `order` so that every prefix holds each label in close to its
/// overall proportion: the `r`-th of `n_l` documents with label `l` is keyed
/// `(r + 0.5) / n_l` and documents are sorted by key. Within a label the
/// incoming order is kept.
fn spread_labels(corpus: &LabeledCorpus, order: &[usize]) -> Vec<usize> {
    let slot = |i: usize| corpus.documents[i].label.unwrap_or(corpus.num_categories());
    let mut totals = vec![0usize; corpus.num_categories() + 1];
    order.iter().for_each(|&i| totals[slot(i)] += 1);
    let mut seen = vec![0usize; totals.len()];
    let mut keyed: Vec<(f64, usize, usize)> = order
        .iter()
        .map(|&i| {
            let l = slot(i);
            let r = seen[l];
            seen[l] += 1;
            ((r as f64 + 0.5) / totals[l] as f64, l, i)
        })
        .collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().map(|(_, _, i)| i).collect()
}

/// Plans `k` folds and a nested ladder of training sizes.
pub fn make_splits(
    corpus: &LabeledCorpus,
    k: usize,
    ladder: &[usize],
    seed: u64,
    stratified: bool,
) -> Result<SplitPlan> {
    let n = corpus.len();
    if k < 2 {
        return Err(Error::InvalidInput(format!("fold count must be >= 2, got {k}")));
    }
    if k > n {
        return Err(Error::InvalidInput(format!(
            "cannot split {n} documents into {k} folds"
        )));
    }
    if let Some(w) = ladder.windows(2).find(|w| w[0] >= w[1]) {
        return Err(Error::InvalidInput(format!(
            "training-size ladder must be strictly ascending ({} then {})",
            w[0], w[1]
        )));
    }
    if ladder.first() == Some(&0) {
        return Err(Error::InvalidInput("training sizes must be >= 1".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let order: Vec<usize> = if stratified {
        let mut groups: Vec<Vec<usize>> = vec![Vec::new(); corpus.num_categories() + 1];
        for (i, doc) in corpus.documents.iter().enumerate() {
            groups[doc.label.unwrap_or(corpus.num_categories())].push(i);
        }
        groups
            .into_iter()
            .flat_map(|mut g| {
                g.shuffle(&mut rng);
                g
            })
            .collect()
    } else {
        let mut all: Vec<usize> = (0..n).collect();
        all.shuffle(&mut rng);
        all
    };

    let mut fold_assignments = vec![0; n];
    for (pos, &doc) in order.iter().enumerate() {
        fold_assignments[doc] = pos % k;
    }

    let mut training_order: Vec<usize> = (0..n).filter(|&i| fold_assignments[i] != 0).collect();
    training_order.shuffle(&mut rng);
    if stratified {
        training_order = spread_labels(corpus, &training_order);
    }

    if let Some(&too_big) = ladder.iter().find(|&&s| s > training_order.len()) {
        return Err(Error::InvalidInput(format!(
            "training size {too_big} exceeds the {} documents available outside the held-out fold",
            training_order.len()
        )));
    }

    Ok(SplitPlan {
        fold_assignments,
        k,
        size_ladder: ladder.to_vec(),
        seed,
        stratified,
        training_order,
    })
}
