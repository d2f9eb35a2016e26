//! Macro-F1 against training size on the generated keyword corpus.
//!
//!     cargo run --release --example learning_curve

use tfcr::classify::ClassifierKind;
use tfcr::corpus::make_splits;
use tfcr::embeddings::synthetic_model;
use tfcr::eval::{learning_curve, write_curve_csv, PipelineConfig};
use tfcr::synthetic::{keyword_corpus, KeywordCorpusSpec};
use tfcr::weighting::{Scheme, TableFactory, WeightingConfig};

fn main() -> tfcr::Result<()> {
    let corpus = keyword_corpus(&KeywordCorpusSpec::default());
    let embeddings = synthetic_model(&corpus.vocabulary(), 16, 7);
    let ladder: Vec<usize> = (1..=9).map(|i| i * 100).collect();
    let plan = make_splits(&corpus, 10, &ladder, 11, true)?;

    let schemes = [Scheme::None, Scheme::TfIdf, Scheme::TfCr].map(WeightingConfig::new);
    let factories: Vec<&dyn TableFactory> = schemes.iter().map(|s| s as &dyn TableFactory).collect();
    let points = learning_curve(
        &corpus,
        &plan,
        &factories,
        &embeddings,
        &PipelineConfig::new(ClassifierKind::LogReg),
    )?;
    write_curve_csv(std::io::stdout().lock(), &points)
}
