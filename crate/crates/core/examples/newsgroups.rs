//! Ten-fold comparison of all schemes on 20 Newsgroups with pretrained vectors.
//!
//!     TFCR_20NG_DIR=~/data/20news-bydate-train \
//!     TFCR_GLOVE_PATH=~/data/glove.6B.50d.txt \
//!     cargo run --release --example newsgroups [sample-cap]
//!
//! The optional argument caps the corpus with a seeded sample, which makes
//! a quick run feasible.

use tfcr::classify::ClassifierKind;
use tfcr::corpus::{load_20ng, make_splits, sample, TokenizerConfig};
use tfcr::embeddings::load_auto;
use tfcr::eval::{format_summary, grid_run, PipelineConfig};
use tfcr::weighting::{Scheme, TableFactory, WeightingConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (Ok(data), Ok(glove)) = (std::env::var("TFCR_20NG_DIR"), std::env::var("TFCR_GLOVE_PATH")) else {
        eprintln!("set TFCR_20NG_DIR and TFCR_GLOVE_PATH");
        std::process::exit(2);
    };
    let mut corpus = load_20ng(&data, &TokenizerConfig::default())?;
    if let Some(cap) = std::env::args().nth(1) {
        corpus = sample(&corpus, cap.parse()?, 7);
    }
    let embeddings = load_auto(&glove)?;
    eprintln!(
        "{} documents, {} categories, {} vectors of dim {}",
        corpus.len(),
        corpus.num_categories(),
        embeddings.len(),
        embeddings.dim()
    );
    let plan = make_splits(&corpus, 10, &[], 7, true)?;
    let schemes: Vec<WeightingConfig> = Scheme::ALL.into_iter().map(WeightingConfig::new).collect();
    let factories: Vec<&dyn TableFactory> = schemes.iter().map(|s| s as &dyn TableFactory).collect();
    let cells = grid_run(
        &corpus,
        &plan,
        &factories,
        &[&embeddings],
        &[PipelineConfig::new(ClassifierKind::LogReg)],
    );
    print!("{}", format_summary("20ng", &cells));
    Ok(())
}
