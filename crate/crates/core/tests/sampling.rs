use tfcr::corpus::{sample, Document, LabeledCorpus};

fn numbered(n: usize) -> LabeledCorpus {
    LabeledCorpus {
        documents: (0..n)
            .map(|i| Document::new(vec![format!("t{i}")], Some(i % 2), format!("d{i}")))
            .collect(),
        categories: vec!["a".into(), "b".into()],
        seed: None,
    }
}

/// Half-size samples over 100 seeds. Any single document's inclusion rate
/// has a standard deviation of 0.05 over 100 draws, so the 0.02 band is
/// checked on blocks of 1,000 documents, where it is about 0.0016.
#[test]
fn half_samples_include_each_block_about_half_the_time() {
    let n = 100_000;
    let corpus = numbered(n);
    let mut hits = vec![0u32; n];
    for seed in 0..100 {
        let s = sample(&corpus, n / 2, seed);
        assert_eq!(s.len(), n / 2);
        for d in &s.documents {
            hits[d.source_id[1..].parse::<usize>().unwrap()] += 1;
        }
    }
    for block in hits.chunks(1000) {
        let rate = block.iter().map(|&h| h as f64).sum::<f64>() / (block.len() as f64 * 100.0);
        assert!((rate - 0.5).abs() <= 0.02, "block rate {rate}");
    }
    let overall = hits.iter().map(|&h| h as f64).sum::<f64>() / (n as f64 * 100.0);
    assert_eq!(overall, 0.5);
}

#[test]
fn samples_keep_corpus_order_and_repeat_per_seed() {
    let corpus = numbered(500);
    let a = sample(&corpus, 100, 3);
    assert_eq!(a, sample(&corpus, 100, 3));
    assert_ne!(a.documents, sample(&corpus, 100, 4).documents);
    let ids: Vec<usize> = a.documents.iter().map(|d| d.source_id[1..].parse().unwrap()).collect();
    assert!(ids.windows(2).all(|w| w[0] < w[1]));
}
