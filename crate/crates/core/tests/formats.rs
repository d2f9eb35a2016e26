use proptest::prelude::*;
use tfcr::embeddings::{
    load, write_glove_text, write_word2vec_binary, write_word2vec_text, EmbeddingFormat,
    EmbeddingModel,
};

fn model_strategy(f32_exact: bool) -> impl Strategy<Value = EmbeddingModel> {
    (1usize..8, prop::collection::btree_set("[a-zA-Z0-9_']{1,12}", 1..20)).prop_flat_map(
        move |(dim, words)| {
            let words: Vec<String> = words.into_iter().collect();
            let n = words.len();
            prop::collection::vec(-1e3f64..1e3, n * dim).prop_map(move |values| {
                let mut m = EmbeddingModel::new(dim);
                for (i, w) in words.iter().enumerate() {
                    let row: Vec<f64> = values[i * dim..(i + 1) * dim]
                        .iter()
                        .map(|&v| if f32_exact { v as f32 as f64 } else { v })
                        .collect();
                    m.push(w, &row);
                }
                m
            })
        },
    )
}

fn write_and_load(
    model: &EmbeddingModel,
    format: EmbeddingFormat,
) -> EmbeddingModel {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("vectors");
    let mut buf = Vec::new();
    match format {
        EmbeddingFormat::GloveText => write_glove_text(model, &mut buf),
        EmbeddingFormat::Word2VecText => write_word2vec_text(model, &mut buf),
        EmbeddingFormat::Word2VecBinary => write_word2vec_binary(model, &mut buf),
    }
    .unwrap();
    std::fs::write(&path, buf).unwrap();
    load(&path, format).unwrap()
}

fn same_vectors(a: &EmbeddingModel, b: &EmbeddingModel) -> bool {
    a.dim() == b.dim()
        && a.words() == b.words()
        && a.iter().zip(b.iter()).all(|((wa, va), (wb, vb))| {
            wa == wb && va.iter().zip(vb).all(|(x, y)| x.to_bits() == y.to_bits())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn text_formats_round_trip_exactly(model in model_strategy(false)) {
        prop_assert!(same_vectors(&write_and_load(&model, EmbeddingFormat::GloveText), &model));
        prop_assert!(same_vectors(&write_and_load(&model, EmbeddingFormat::Word2VecText), &model));
    }

    #[test]
    fn binary_round_trips_f32_values_exactly(model in model_strategy(true)) {
        prop_assert!(same_vectors(&write_and_load(&model, EmbeddingFormat::Word2VecBinary), &model));
    }

    #[test]
    fn binary_and_text_agree_to_f32_precision(model in model_strategy(false)) {
        let bin = write_and_load(&model, EmbeddingFormat::Word2VecBinary);
        let text = write_and_load(&model, EmbeddingFormat::Word2VecText);
        prop_assert_eq!(bin.words(), text.words());
        for ((_, a), (_, b)) in bin.iter().zip(text.iter()) {
            for (x, y) in a.iter().zip(b) {
                prop_assert!((x - y).abs() <= y.abs() * f32::EPSILON as f64);
            }
        }
    }
}
