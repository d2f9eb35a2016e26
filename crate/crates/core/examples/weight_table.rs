//! Builds every weighting scheme over a tiny corpus and prints the top words
//! per category.
//!
//!     cargo run --example weight_table

use tfcr::corpus::{LabeledCorpus, TokenizerConfig};
use tfcr::stats::CorpusStats;
use tfcr::weighting::{build_table, Scheme};

fn main() -> tfcr::Result<()> {
    let corpus = LabeledCorpus::from_texts(
        [
            ("the team won the match", "sport"),
            ("a late goal won the cup", "sport"),
            ("the senate passed the bill", "politics"),
            ("voters rejected the bill", "politics"),
        ],
        &TokenizerConfig::default(),
    );
    let stats = CorpusStats::build_all(&corpus)?;
    for scheme in [Scheme::TfCr, Scheme::Kld, Scheme::TfTrr] {
        println!("== {scheme}");
        let table = build_table(&stats, scheme);
        for (c, name) in corpus.categories.iter().enumerate() {
            let top: Vec<String> = table
                .top_k(c, 3)?
                .into_iter()
                .map(|(w, v)| format!("{w}={v:.3}"))
                .collect();
            println!("  {name:<9} {}", top.join("  "));
        }
    }
    let tfidf = build_table(&stats, Scheme::TfIdf);
    println!("== tfidf\n  idf(the)={:.3} idf(bill)={:.3}", tfidf.idf("the"), tfidf.idf("bill"));
    Ok(())
}
