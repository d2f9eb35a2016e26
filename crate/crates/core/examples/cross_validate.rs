//! Ten-fold cross-validation of every scheme on the generated keyword corpus,
//! printed as the results CSV and a summary grid.
//!
//!     cargo run --release --example cross_validate

use tfcr::classify::ClassifierKind;
use tfcr::corpus::make_splits;
use tfcr::embeddings::synthetic_model;
use tfcr::eval::{format_summary, grid_run, write_results_csv, PipelineConfig};
use tfcr::synthetic::{keyword_corpus, KeywordCorpusSpec};
use tfcr::weighting::{Scheme, TableFactory, WeightingConfig};

fn main() -> tfcr::Result<()> {
    let corpus = keyword_corpus(&KeywordCorpusSpec {
        documents: 400,
        ..Default::default()
    });
    let embeddings = synthetic_model(&corpus.vocabulary(), 16, 7).with_name("synthetic:16:7");
    let plan = make_splits(&corpus, 10, &[], 3, true)?;

    let schemes: Vec<WeightingConfig> = Scheme::ALL.into_iter().map(WeightingConfig::new).collect();
    let factories: Vec<&dyn TableFactory> = schemes.iter().map(|s| s as &dyn TableFactory).collect();
    let configs: Vec<PipelineConfig> = ClassifierKind::ALL.into_iter().map(PipelineConfig::new).collect();

    let cells = grid_run(&corpus, &plan, &factories, &[&embeddings], &configs);
    write_results_csv(std::io::stdout().lock(), "keywords", &cells)?;
    println!();
    print!("{}", format_summary("keywords", &cells));
    Ok(())
}
