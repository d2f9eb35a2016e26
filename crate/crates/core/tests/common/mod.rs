//! Shared fixtures: random labeled corpora and a brute-force recount of the
//! weighting formulas straight from the documents.

#![allow(dead_code)]

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tfcr::classify::LinearParams;
use tfcr::corpus::{Document, LabeledCorpus};

/// Up to 100 documents over up to 50 words and 2 to 5 categories.
pub fn random_corpus(seed: u64) -> LabeledCorpus {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let categories = rng.gen_range(2..=5);
    let vocab = rng.gen_range(1..=50);
    let docs = rng.gen_range(1..=100);
    let documents = (0..docs)
        .map(|i| {
            let len = rng.gen_range(0..=30);
            let tokens = (0..len)
                .map(|_| format!("w{}", rng.gen_range(0..vocab)))
                .collect();
            Document::new(tokens, Some(rng.gen_range(0..categories)), format!("d{i}"))
        })
        .collect();
    LabeledCorpus {
        documents,
        categories: (0..categories).map(|c| format!("c{c}")).collect(),
        seed: None,
    }
}

/// Raw counts tallied by a plain scan over every token, kept in ordered maps.
pub struct Recount<'a> {
    pub corpus: &'a LabeledCorpus,
    pair: BTreeMap<(String, usize), u64>,
    word: BTreeMap<String, u64>,
    docs_with: BTreeMap<String, u64>,
    per_category: Vec<u64>,
}

impl<'a> Recount<'a> {
    pub fn new(corpus: &'a LabeledCorpus) -> Self {
        let mut pair = BTreeMap::new();
        let mut word = BTreeMap::new();
        let mut docs_with = BTreeMap::new();
        let mut per_category = vec![0; corpus.num_categories()];
        for d in &corpus.documents {
            let c = d.label.unwrap();
            let mut distinct: Vec<&String> = d.tokens.iter().collect();
            distinct.sort();
            distinct.dedup();
            for t in distinct {
                *docs_with.entry(t.clone()).or_insert(0) += 1;
            }
            for t in &d.tokens {
                *pair.entry((t.clone(), c)).or_insert(0) += 1;
                *word.entry(t.clone()).or_insert(0) += 1;
                per_category[c] += 1;
            }
        }
        Recount { corpus, pair, word, docs_with, per_category }
    }

    pub fn in_category(&self, word: &str, c: usize) -> u64 {
        self.pair.get(&(word.to_owned(), c)).copied().unwrap_or(0)
    }

    pub fn category_tokens(&self, c: usize) -> u64 {
        self.per_category[c]
    }

    pub fn total(&self, word: &str) -> u64 {
        self.word.get(word).copied().unwrap_or(0)
    }

    pub fn all_tokens(&self) -> u64 {
        self.per_category.iter().sum()
    }

    pub fn doc_freq(&self, word: &str) -> u64 {
        self.docs_with.get(word).copied().unwrap_or(0)
    }

    pub fn words(&self) -> impl Iterator<Item = &String> {
        self.word.keys()
    }

    pub fn tfcr(&self, word: &str, c: usize) -> f64 {
        let wc = self.in_category(word, c) as f64;
        let w = self.total(word) as f64;
        if wc == 0.0 {
            return 0.0;
        }
        (wc / self.category_tokens(c) as f64) * (wc / w)
    }

    fn remainder(&self, word: &str, c: usize) -> f64 {
        let rest_tokens = self.all_tokens() - self.category_tokens(c);
        let rest_count = self.total(word) - self.in_category(word, c);
        if rest_count == 0 {
            1.0 / (rest_tokens as f64 + 1.0)
        } else {
            rest_count as f64 / rest_tokens as f64
        }
    }

    pub fn kld(&self, word: &str, c: usize) -> f64 {
        let wc = self.in_category(word, c);
        if wc == 0 {
            return 0.0;
        }
        let p = wc as f64 / self.category_tokens(c) as f64;
        let q = self.remainder(word, c);
        let v = p * (p / q).ln();
        if v < 0.0 {
            0.0
        } else {
            v
        }
    }

    pub fn trr_factor(&self, word: &str, c: usize, alpha: f64) -> f64 {
        let wc = self.in_category(word, c);
        if wc == 0 {
            return alpha.ln();
        }
        let p = wc as f64 / self.category_tokens(c) as f64;
        (p / self.remainder(word, c) + alpha).ln()
    }

    pub fn idf(&self, word: &str) -> f64 {
        let df = self.doc_freq(word);
        if df == 0 {
            return 0.0;
        }
        (self.corpus.len() as f64 / df as f64).ln()
    }
}

/// `|a - b| <= tol * max(1, |b|)`.
pub fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * b.abs().max(1.0)
}

/// A random `n × f` instance with `classes` classes (every class present when `n >= classes`).
pub fn random_instance(
    rng: &mut ChaCha8Rng,
    n: usize,
    f: usize,
    classes: usize,
) -> (Vec<Vec<f64>>, Vec<usize>, LinearParams) {
    let xs = (0..n)
        .map(|_| (0..f).map(|_| rng.gen_range(-1.0..1.0)).collect())
        .collect();
    let ys = (0..n).map(|i| i % classes).collect();
    let mut params = LinearParams::zeros(classes, f);
    params.weights.iter_mut().for_each(|w| *w = rng.gen_range(-1.0..1.0));
    params.biases.iter_mut().for_each(|b| *b = rng.gen_range(-0.5..0.5));
    (xs, ys, params)
}

/// Largest relative gap between an analytic gradient and central differences
/// (step `h`) of `objective`. Gaps are divided by `max(|analytic|, |numeric|, 1e-4)`.
pub fn max_gradient_error(
    params: &LinearParams,
    analytic: &LinearParams,
    h: f64,
    objective: impl Fn(&LinearParams) -> f64,
) -> f64 {
    let mut worst: f64 = 0.0;
    let nw = params.weights.len();
    for i in 0..nw + params.biases.len() {
        let mut plus = params.clone();
        let mut minus = params.clone();
        let (a, p, m) = if i < nw {
            plus.weights[i] += h;
            minus.weights[i] -= h;
            (analytic.weights[i], &plus, &minus)
        } else {
            plus.biases[i - nw] += h;
            minus.biases[i - nw] -= h;
            (analytic.biases[i - nw], &plus, &minus)
        };
        let numeric = (objective(p) - objective(m)) / (2.0 * h);
        let denom = a.abs().max(numeric.abs()).max(1e-4);
        worst = worst.max((a - numeric).abs() / denom);
    }
    worst
}

/// True when no hinge term is within `gap` of its kink.
pub fn away_from_kinks(params: &LinearParams, xs: &[Vec<f64>], ys: &[usize], gap: f64) -> bool {
    xs.iter().zip(ys).all(|(x, &y)| {
        params
            .scores(x)
            .iter()
            .enumerate()
            .all(|(k, s)| {
                let sign = if k == y { 1.0 } else { -1.0 };
                (1.0 - sign * s).abs() > gap
            })
    })
}
