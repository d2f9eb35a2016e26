use tfcr::classify::ClassifierKind;
use tfcr::corpus::{make_splits, LabeledCorpus};
use tfcr::embeddings::{synthetic_model, EmbeddingModel};
use tfcr::eval::{
    cross_validate, grid_run, learning_curve, train_and_evaluate, FittedPipeline, PipelineConfig,
};
use tfcr::stats::CorpusStats;
use tfcr::synthetic::{keyword_corpus, KeywordCorpusSpec};
use tfcr::weighting::{Scheme, TableFactory, UniformTable, WeightingConfig};

fn fixture(documents: usize) -> (LabeledCorpus, EmbeddingModel) {
    let corpus = keyword_corpus(&KeywordCorpusSpec {
        documents,
        // Small shared vocabulary so every shared word reaches every training split.
        shared_vocabulary: 30,
        seed: 4,
        ..Default::default()
    });
    let model = synthetic_model(&corpus.vocabulary(), 8, 2);
    (corpus, model)
}

fn quick(kind: ClassifierKind) -> PipelineConfig {
    let mut cfg = PipelineConfig::new(kind);
    cfg.train.epochs = 20;
    cfg.train.seed = 1;
    cfg
}

#[test]
fn uniform_table_matches_unweighted() {
    let (corpus, model) = fixture(120);
    // Every token must appear in each training split for the two to coincide.
    let plan = make_splits(&corpus, 5, &[], 3, true).unwrap();
    for f in 0..plan.k {
        let stats = CorpusStats::build(&corpus, &plan.training_indices(f)).unwrap();
        for d in &corpus.documents {
            assert!(d.tokens.iter().all(|t| stats.word_id(t).is_some()));
        }
    }
    let cfg = quick(ClassifierKind::LogReg);
    let none = cross_validate(&corpus, &plan, &WeightingConfig::new(Scheme::None), &model, &cfg).unwrap();
    let uniform = cross_validate(&corpus, &plan, &UniformTable, &model, &cfg).unwrap();
    assert!((none.mean_macro_f1 - uniform.mean_macro_f1).abs() < 1e-12);
    assert_eq!(none.fold_scores(), uniform.fold_scores());
}

#[test]
fn cross_validation_is_reproducible_and_consistent() {
    let (corpus, model) = fixture(100);
    let plan = make_splits(&corpus, 4, &[], 9, true).unwrap();
    let cfg = quick(ClassifierKind::Svm);
    let table = WeightingConfig::new(Scheme::TfCr);
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let a = pool.install(|| cross_validate(&corpus, &plan, &table, &model, &cfg).unwrap());
    let b = cross_validate(&corpus, &plan, &table, &model, &cfg).unwrap();
    assert_eq!(a, b);
    let mean = a.fold_scores().iter().sum::<f64>() / a.folds.len() as f64;
    assert!((a.mean_macro_f1 - mean).abs() < 1e-12);
    for (fold, report) in a.folds.iter().enumerate() {
        let total: u64 = report.confusion.iter().flatten().sum();
        assert_eq!(total as usize, plan.fold_indices(fold).len());
        for (c, row) in report.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<u64>(), report.per_class[c].support);
        }
        let recomputed = tfcr::eval::report_from_confusion(report.confusion.clone());
        assert_eq!(recomputed.macro_f1, report.macro_f1);
        assert!((0.0..=1.0).contains(&report.macro_f1));
    }
}

#[test]
fn test_fold_documents_never_touch_the_fitted_pipeline() {
    let (corpus, model) = fixture(80);
    let plan = make_splits(&corpus, 4, &[], 1, true).unwrap();
    let train = plan.training_indices(0);
    let cfg = quick(ClassifierKind::LogReg);
    let table = WeightingConfig::new(Scheme::TfCr);
    let full = FittedPipeline::fit(&corpus, &train, &table, &model, &cfg).unwrap();

    // Drop one held-out document and refit on the same training documents.
    let dropped = plan.fold_indices(0)[0];
    let keep: Vec<usize> = (0..corpus.len()).filter(|&i| i != dropped).collect();
    let smaller = corpus.subset(&keep);
    let remapped: Vec<usize> = train.iter().map(|&i| if i > dropped { i - 1 } else { i }).collect();
    let refit = FittedPipeline::fit(&smaller, &remapped, &table, &model, &cfg).unwrap();

    assert_eq!(
        serde_json::to_string(&full.table).unwrap(),
        serde_json::to_string(&refit.table).unwrap()
    );
    assert_eq!(full.model.params, refit.model.params);
}

#[test]
fn logreg_fold_missing_a_class_is_reported() {
    let (mut corpus, model) = fixture(40);
    // Class 3 keeps a single document, which will sit in exactly one fold.
    let keep: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.documents[i].label != Some(3) || i == 3)
        .collect();
    corpus = corpus.subset(&keep);
    let plan = make_splits(&corpus, 3, &[], 2, true).unwrap();
    let err = cross_validate(
        &corpus,
        &plan,
        &WeightingConfig::new(Scheme::None),
        &model,
        &quick(ClassifierKind::LogReg),
    )
    .unwrap_err();
    assert!(err.to_string().contains("stratified"), "{err}");
    // The SVM tolerates it.
    cross_validate(
        &corpus,
        &plan,
        &WeightingConfig::new(Scheme::None),
        &model,
        &quick(ClassifierKind::Svm),
    )
    .unwrap();
}

#[test]
fn learning_curve_uses_nested_samples_and_improves() {
    let (corpus, model) = fixture(400);
    let plan = make_splits(&corpus, 10, &[20, 40, 80, 160, 320], 5, true).unwrap();
    let small = plan.ladder_sample(20).unwrap();
    let large = plan.ladder_sample(40).unwrap();
    assert!(small.iter().all(|i| large.contains(i)));

    let tfcr = WeightingConfig::new(Scheme::TfCr);
    let none = WeightingConfig::new(Scheme::None);
    let cfg = PipelineConfig::new(ClassifierKind::LogReg);
    let both = learning_curve(&corpus, &plan, &[&none, &tfcr], &model, &cfg).unwrap();
    let alone = learning_curve(&corpus, &plan, &[&none], &model, &cfg).unwrap();
    for (b, a) in both.iter().zip(&alone) {
        assert_eq!(b.training_size, a.training_size);
        assert_eq!(b.scores[0], a.scores[0]);
    }
    let first = both.first().unwrap().scores[1].1;
    let last = both.last().unwrap().scores[1].1;
    assert!(last >= first, "tfcr {first} at 20 docs, {last} at 320");
    assert!(both.windows(2).all(|w| w[0].training_size < w[1].training_size));
}

#[test]
fn grid_cells_match_direct_runs_in_any_order() {
    let (corpus, model) = fixture(60);
    let plan = make_splits(&corpus, 3, &[], 8, true).unwrap();
    let configs: Vec<WeightingConfig> = Scheme::ALL.iter().map(|&s| WeightingConfig::new(s)).collect();
    let factories: Vec<&dyn TableFactory> = configs.iter().map(|c| c as &dyn TableFactory).collect();
    let pipelines = [quick(ClassifierKind::Svm), quick(ClassifierKind::LogReg)];
    let cells = grid_run(&corpus, &plan, &factories, &[&model], &pipelines);
    assert_eq!(cells.len(), 10);

    let reversed: Vec<&dyn TableFactory> = factories.iter().rev().copied().collect();
    let again = grid_run(&corpus, &plan, &reversed, &[&model], &pipelines);
    for cell in &cells {
        let twin = again
            .iter()
            .find(|c| c.scheme == cell.scheme && c.classifier == cell.classifier)
            .unwrap();
        assert_eq!(cell.outcome, twin.outcome);
    }

    let single = grid_run(&corpus, &plan, &factories[4..], &[&model], &pipelines[..1]);
    let direct = cross_validate(&corpus, &plan, &configs[4], &model, &pipelines[0]).unwrap();
    assert_eq!(single.len(), 1);
    assert_eq!(single[0].outcome.as_ref().unwrap(), &direct);
}

#[test]
fn training_fold_scores_at_least_held_out() {
    let (corpus, model) = fixture(200);
    let plan = make_splits(&corpus, 5, &[], 6, true).unwrap();
    let cfg = quick(ClassifierKind::LogReg);
    for scheme in Scheme::ALL {
        let table = WeightingConfig::new(scheme);
        let train = plan.training_indices(0);
        let on_train = train_and_evaluate(&corpus, &train, &train, &table, &model, &cfg).unwrap();
        let held_out = train_and_evaluate(&corpus, &train, &plan.fold_indices(0), &table, &model, &cfg).unwrap();
        assert!(
            on_train.macro_f1 >= held_out.macro_f1,
            "{scheme}: train {} < held-out {}",
            on_train.macro_f1,
            held_out.macro_f1
        );
    }
}
