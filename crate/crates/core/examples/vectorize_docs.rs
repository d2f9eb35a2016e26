//! Shows how the representation changes with the scheme: category-level
//! schemes concatenate one weighted mean per category.
//!
//!     cargo run --example vectorize_docs

use tfcr::corpus::{tokenize, LabeledCorpus, TokenizerConfig};
use tfcr::embeddings::{synthetic_model, LookupConfig};
use tfcr::stats::CorpusStats;
use tfcr::vectorize::vectorize;
use tfcr::weighting::{build_table, Scheme, WeightTable};

fn main() -> tfcr::Result<()> {
    let tokenizer = TokenizerConfig::default();
    let corpus = LabeledCorpus::from_texts(
        [
            ("rain and wind tonight", "weather"),
            ("sunny with light wind", "weather"),
            ("shares fell on weak earnings", "markets"),
            ("earnings lifted shares", "markets"),
        ],
        &tokenizer,
    );
    let embeddings = synthetic_model(&corpus.vocabulary(), 3, 1);
    let stats = CorpusStats::build_all(&corpus)?;
    let doc = tokenize("Wind and weak shares", &tokenizer);
    let lookup = LookupConfig::default();

    for scheme in Scheme::ALL {
        let table = match scheme {
            Scheme::None => WeightTable::unweighted(),
            s => build_table(&stats, s),
        };
        let v = vectorize(&doc, &embeddings, &table, &lookup);
        let shown: Vec<String> = v.values.iter().map(|x| format!("{x:+.3}")).collect();
        println!("{:<6} ({} features) [{}]", scheme.name(), v.values.len(), shown.join(" "));
    }
    Ok(())
}
