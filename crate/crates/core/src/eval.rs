//! Metrics and experiment orchestration.
//!
//! Every train/evaluate step rebuilds statistics, the weight table and the
//! optional scaler from the training indices alone, so nothing about a test
//! document can leak into its own prediction.

use std::fmt::Write as _;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classify::{self, ClassifierKind, LinearModel, Prediction, TrainConfig};
use crate::corpus::{LabeledCorpus, SplitPlan};
use crate::embeddings::{EmbeddingModel, LookupConfig};
use crate::error::{Error, Result};
use crate::stats::CorpusStats;
use crate::vectorize::{vectorize, ScalerParams};
use crate::weighting::{TableFactory, WeightTable};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

/// Identifies the run an evaluation belongs to.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Fingerprint {
    pub scheme: String,
    pub embedding: String,
    pub classifier: String,
    pub seed: u64,
    pub train_size: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// `confusion[gold][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub fingerprint: Fingerprint,
}

/// Per-class and macro-averaged scores. A class whose precision or recall has
/// a zero denominator gets 0 for it, and every class counts toward the macro
/// mean whether or not it occurs.
pub fn macro_f1(predictions: &[usize], gold: &[usize], num_classes: usize) -> Result<EvalReport> {
    if predictions.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions for {} gold labels",
            predictions.len(),
            gold.len()
        )));
    }
    if num_classes == 0 {
        return Err(Error::InvalidInput("no classes to score".into()));
    }
    let mut confusion = vec![vec![0u64; num_classes]; num_classes];
    for (&p, &g) in predictions.iter().zip(gold) {
        if p >= num_classes || g >= num_classes {
            return Err(Error::InvalidInput(format!(
                "label {} out of range for {num_classes} classes",
                p.max(g)
            )));
        }
        confusion[g][p] += 1;
    }
    Ok(report_from_confusion(confusion))
}

/// Recomputes every metric from a confusion matrix.
pub fn report_from_confusion(confusion: Vec<Vec<u64>>) -> EvalReport {
    let n = confusion.len();
    let ratio = |num: u64, den: u64| if den == 0 { 0.0 } else { num as f64 / den as f64 };
    let per_class: Vec<ClassMetrics> = (0..n)
        .map(|c| {
            let tp = confusion[c][c];
            let support: u64 = confusion[c].iter().sum();
            let predicted: u64 = confusion.iter().map(|row| row[c]).sum();
            let precision = ratio(tp, predicted);
            let recall = ratio(tp, support);
            let f1 = if precision + recall == 0.0 {
                0.0
            } else {
                2.0 * precision * recall / (precision + recall)
            };
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            }
        })
        .collect();
    let total: u64 = confusion.iter().flatten().sum();
    let correct: u64 = (0..n).map(|c| confusion[c][c]).sum();
    EvalReport {
        macro_f1: per_class.iter().map(|m| m.f1).sum::<f64>() / n as f64,
        accuracy: ratio(correct, total),
        per_class,
        confusion,
        fingerprint: Fingerprint::default(),
    }
}

/// Classifier choice plus everything needed to turn tokens into features.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub classifier: ClassifierKind,
    pub train: TrainConfig,
    /// Standardize features with statistics of the training vectors.
    pub standardize: bool,
    pub lookup: LookupConfig,
}

impl PipelineConfig {
    pub fn new(classifier: ClassifierKind) -> Self {
        PipelineConfig {
            classifier,
            train: TrainConfig::default(),
            standardize: true,
            lookup: LookupConfig::default(),
        }
    }
}

/// Weight table, scaler and classifier fitted on one training partition.
#[derive(Debug, Clone)]
pub struct FittedPipeline {
    pub table: WeightTable,
    pub scaler: Option<ScalerParams>,
    pub model: LinearModel,
    pub lookup: LookupConfig,
    pub training_size: usize,
}

impl FittedPipeline {
    pub fn fit(
        corpus: &LabeledCorpus,
        train_indices: &[usize],
        factory: &dyn TableFactory,
        embeddings: &EmbeddingModel,
        config: &PipelineConfig,
    ) -> Result<FittedPipeline> {
        let stats = CorpusStats::build(corpus, train_indices)?;
        let labels: Vec<usize> = train_indices
            .iter()
            .map(|&i| corpus.documents[i].label.expect("stats build rejects unlabeled documents"))
            .collect();
        if config.classifier == ClassifierKind::LogReg {
            let mut seen = vec![false; corpus.num_categories()];
            labels.iter().for_each(|&l| seen[l] = true);
            if let Some(missing) = seen.iter().position(|s| !s) {
                return Err(Error::Training(format!(
                    "training partition has no document of class '{}'; use stratified folds",
                    corpus.categories[missing]
                )));
            }
        }
        let table = factory.build(&stats);
        let mut vectors: Vec<Vec<f64>> = train_indices
            .par_iter()
            .map(|&i| vectorize(&corpus.documents[i].tokens, embeddings, &table, &config.lookup).values)
            .collect();
        let scaler = if config.standardize {
            let scaler = ScalerParams::fit(&vectors)?;
            scaler.apply_all(&mut vectors);
            Some(scaler)
        } else {
            None
        };
        let model = classify::train(
            config.classifier,
            &vectors,
            &labels,
            corpus.num_categories(),
            &config.train,
        )?;
        Ok(FittedPipeline {
            table,
            scaler,
            model,
            lookup: config.lookup,
            training_size: train_indices.len(),
        })
    }

    pub fn features(&self, tokens: &[String], embeddings: &EmbeddingModel) -> Vec<f64> {
        let mut v = vectorize(tokens, embeddings, &self.table, &self.lookup).values;
        if let Some(scaler) = &self.scaler {
            scaler.apply(&mut v);
        }
        v
    }

    pub fn predict(&self, tokens: &[String], embeddings: &EmbeddingModel) -> Result<Prediction> {
        self.model.predict(&self.features(tokens, embeddings))
    }

    /// Scores the documents at `indices` of `corpus`.
    pub fn evaluate(
        &self,
        corpus: &LabeledCorpus,
        indices: &[usize],
        embeddings: &EmbeddingModel,
    ) -> Result<EvalReport> {
        let predicted: Vec<usize> = indices
            .par_iter()
            .map(|&i| {
                self.predict(&corpus.documents[i].tokens, embeddings)
                    .map(|p| p.label)
            })
            .collect::<Result<_>>()?;
        let gold: Vec<usize> = indices
            .iter()
            .map(|&i| {
                corpus.documents[i].label.ok_or_else(|| {
                    Error::InvalidInput(format!(
                        "evaluation document {} is unlabeled",
                        corpus.documents[i].source_id
                    ))
                })
            })
            .collect::<Result<_>>()?;
        macro_f1(&predicted, &gold, corpus.num_categories())
    }
}

fn fingerprint(
    factory: &dyn TableFactory,
    embeddings: &EmbeddingModel,
    config: &PipelineConfig,
    train_size: usize,
) -> Fingerprint {
    Fingerprint {
        scheme: factory.label(),
        embedding: embeddings.name().to_owned(),
        classifier: config.classifier.name().to_owned(),
        seed: config.train.seed,
        train_size,
    }
}

/// Fits on `train` and scores on `test`.
pub fn train_and_evaluate(
    corpus: &LabeledCorpus,
    train: &[usize],
    test: &[usize],
    factory: &dyn TableFactory,
    embeddings: &EmbeddingModel,
    config: &PipelineConfig,
) -> Result<EvalReport> {
    let fitted = FittedPipeline::fit(corpus, train, factory, embeddings, config)?;
    let mut report = fitted.evaluate(corpus, test, embeddings)?;
    report.fingerprint = fingerprint(factory, embeddings, config, train.len());
    Ok(report)
}

/// Fold reports of a k-fold run and their means.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvReport {
    pub folds: Vec<EvalReport>,
    pub mean_macro_f1: f64,
    pub mean_accuracy: f64,
    pub fingerprint: Fingerprint,
}

impl CvReport {
    pub fn fold_scores(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.macro_f1).collect()
    }
}

pub fn cross_validate(
    corpus: &LabeledCorpus,
    plan: &SplitPlan,
    factory: &dyn TableFactory,
    embeddings: &EmbeddingModel,
    config: &PipelineConfig,
) -> Result<CvReport> {
    if plan.num_docs() != corpus.len() {
        return Err(Error::InvalidInput(format!(
            "split plan covers {} documents, corpus has {}",
            plan.num_docs(),
            corpus.len()
        )));
    }
    let folds: Vec<EvalReport> = (0..plan.k)
        .into_par_iter()
        .map(|fold| {
            train_and_evaluate(
                corpus,
                &plan.training_indices(fold),
                &plan.fold_indices(fold),
                factory,
                embeddings,
                config,
            )
            .map_err(|e| match e {
                Error::Training(m) => Error::Training(format!("fold {fold}: {m}")),
                other => other,
            })
        })
        .collect::<Result<_>>()?;
    let k = folds.len() as f64;
    let mean_train = folds.iter().map(|f| f.fingerprint.train_size).sum::<usize>() as f64 / k;
    Ok(CvReport {
        mean_macro_f1: folds.iter().map(|f| f.macro_f1).sum::<f64>() / k,
        mean_accuracy: folds.iter().map(|f| f.accuracy).sum::<f64>() / k,
        fingerprint: fingerprint(factory, embeddings, config, mean_train.round() as usize),
        folds,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CurvePoint {
    pub training_size: usize,
    /// `(scheme label, macro-F1 on the held-out fold)` in the order requested.
    pub scores: Vec<(String, f64)>,
}

/// Trains on each nested ladder sample and scores on the plan's held-out fold.
pub fn learning_curve(
    corpus: &LabeledCorpus,
    plan: &SplitPlan,
    factories: &[&dyn TableFactory],
    embeddings: &EmbeddingModel,
    config: &PipelineConfig,
) -> Result<Vec<CurvePoint>> {
    if plan.size_ladder.is_empty() {
        return Err(Error::Config("learning curve needs a non-empty size ladder".into()));
    }
    let holdout = plan.holdout_indices();
    let cells: Vec<(usize, usize)> = plan
        .size_ladder
        .iter()
        .flat_map(|&size| (0..factories.len()).map(move |f| (size, f)))
        .collect();
    let scores: Vec<f64> = cells
        .par_iter()
        .map(|&(size, f)| {
            let train = plan.ladder_sample(size)?;
            train_and_evaluate(corpus, &train, &holdout, factories[f], embeddings, config)
                .map(|r| r.macro_f1)
                .map_err(|e| match e {
                    Error::Training(m) => Error::Training(format!("training size {size}: {m}")),
                    other => other,
                })
        })
        .collect::<Result<_>>()?;
    Ok(plan
        .size_ladder
        .iter()
        .zip(scores.chunks(factories.len()))
        .map(|(&training_size, row)| CurvePoint {
            training_size,
            scores: factories
                .iter()
                .zip(row)
                .map(|(f, &s)| (f.label(), s))
                .collect(),
        })
        .collect())
}

pub fn write_curve_csv<W: Write>(out: W, points: &[CurvePoint]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["train_size".to_owned()];
    if let Some(first) = points.first() {
        header.extend(first.scores.iter().map(|(label, _)| label.clone()));
    }
    w.write_record(&header)?;
    for p in points {
        let mut row = vec![p.training_size.to_string()];
        row.extend(p.scores.iter().map(|(_, s)| s.to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<curve csv>", e))?;
    Ok(())
}

/// One `(scheme, embedding, classifier)` combination of a grid.
#[derive(Debug, Clone)]
pub struct GridCell {
    pub scheme: String,
    pub embedding: String,
    pub classifier: ClassifierKind,
    /// The error message when the cell failed.
    pub outcome: std::result::Result<CvReport, String>,
}

/// Cross-validates every combination. Cells are enumerated embedding-major,
/// then classifier, then scheme; a failing cell is recorded, not propagated.
pub fn grid_run(
    corpus: &LabeledCorpus,
    plan: &SplitPlan,
    factories: &[&dyn TableFactory],
    embeddings: &[&EmbeddingModel],
    configs: &[PipelineConfig],
) -> Vec<GridCell> {
    let mut cells = Vec::new();
    for e in 0..embeddings.len() {
        for c in 0..configs.len() {
            for f in 0..factories.len() {
                cells.push((e, c, f));
            }
        }
    }
    cells
        .into_par_iter()
        .map(|(e, c, f)| {
            let outcome = cross_validate(corpus, plan, factories[f], embeddings[e], &configs[c]);
            if let Err(err) = &outcome {
                log::warn!(
                    "cell {}/{}/{} failed: {err}",
                    factories[f].label(),
                    embeddings[e].name(),
                    configs[c].classifier
                );
            }
            GridCell {
                scheme: factories[f].label(),
                embedding: embeddings[e].name().to_owned(),
                classifier: configs[c].classifier,
                outcome: outcome.map_err(|e| e.to_string()),
            }
        })
        .collect()
}

pub const RESULTS_HEADER: [&str; 8] = [
    "dataset",
    "scheme",
    "embedding",
    "classifier",
    "train_size",
    "fold",
    "macro_f1",
    "accuracy",
];

/// One row per fold plus a `mean` row per cell; failed cells get a single
/// `failed` row with empty metrics.
pub fn write_results_csv<W: Write>(out: W, dataset: &str, cells: &[GridCell]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(RESULTS_HEADER)?;
    for cell in cells {
        let prefix = [
            dataset.to_owned(),
            cell.scheme.clone(),
            cell.embedding.clone(),
            cell.classifier.name().to_owned(),
        ];
        match &cell.outcome {
            Ok(cv) => {
                for (i, fold) in cv.folds.iter().enumerate() {
                    let mut row = prefix.to_vec();
                    row.extend([
                        fold.fingerprint.train_size.to_string(),
                        i.to_string(),
                        fold.macro_f1.to_string(),
                        fold.accuracy.to_string(),
                    ]);
                    w.write_record(&row)?;
                }
                let mut row = prefix.to_vec();
                row.extend([
                    cv.fingerprint.train_size.to_string(),
                    "mean".to_owned(),
                    cv.mean_macro_f1.to_string(),
                    cv.mean_accuracy.to_string(),
                ]);
                w.write_record(&row)?;
            }
            Err(_) => {
                let mut row = prefix.to_vec();
                row.extend([String::new(), "failed".to_owned(), String::new(), String::new()]);
                w.write_record(&row)?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<results csv>", e))?;
    Ok(())
}

/// Mean macro-F1 table: one row per (dataset, embedding), one column per
/// classifier and scheme.
pub fn format_summary(dataset: &str, cells: &[GridCell]) -> String {
    let mut columns: Vec<(ClassifierKind, String)> = Vec::new();
    let mut rows: Vec<String> = Vec::new();
    for cell in cells {
        let col = (cell.classifier, cell.scheme.clone());
        if !columns.contains(&col) {
            columns.push(col);
        }
        if !rows.contains(&cell.embedding) {
            rows.push(cell.embedding.clone());
        }
    }
    let headers: Vec<String> = columns
        .iter()
        .map(|(k, s)| format!("{k}/{s}"))
        .collect();
    let first_width = rows
        .iter()
        .map(|r| dataset.len() + 1 + r.len())
        .max()
        .unwrap_or(0)
        .max("dataset/embedding".len());
    let widths: Vec<usize> = headers.iter().map(|h| h.len().max(6)).collect();

    let mut out = String::new();
    let _ = write!(out, "{:<first_width$}", "dataset/embedding");
    for (h, w) in headers.iter().zip(&widths) {
        let _ = write!(out, "  {h:>w$}");
    }
    out.push('\n');
    for row in &rows {
        let _ = write!(out, "{:<first_width$}", format!("{dataset}/{row}"));
        for ((k, s), w) in columns.iter().zip(&widths) {
            let value = cells
                .iter()
                .find(|c| &c.embedding == row && c.classifier == *k && &c.scheme == s)
                .map(|c| match &c.outcome {
                    Ok(cv) => format!("{:.3}", cv.mean_macro_f1),
                    Err(_) => "failed".to_owned(),
                })
                .unwrap_or_else(|| "-".to_owned());
            let _ = write!(out, "  {value:>w$}");
        }
        out.push('\n');
    }
    out
}
