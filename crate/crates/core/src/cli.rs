//! Command-line front end: `cv`, `curve`, `weights`, `vectorize`, `train`, `predict`.
//!
//! Settings come from flags, then from `--config` (a JSON [`RunConfig`] or a
//! run manifest), then from defaults. Runs that write to `--output` also write
//! `<output>.manifest.json`, which can be fed back through `--config`.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 configuration error.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

use crate::classify::{ClassifierKind, LinearModel, TrainConfig};
use crate::corpus::{
    self, load_20ng, load_csv, load_jsonl, make_splits, tokenize, CsvOptions, LabeledCorpus,
    TokenizerConfig,
};
use crate::embeddings::{self, EmbeddingFormat, EmbeddingModel, LookupConfig};
use crate::error::{Error, Result};
use crate::eval::{self, FittedPipeline, PipelineConfig};
use crate::stats::CorpusStats;
use crate::vectorize::{vectorize, ScalerParams};
use crate::weighting::{self, Scheme, TableFactory, WeightTable, WeightingConfig, DEFAULT_ALPHA};

const DEFAULT_FOLDS: usize = 10;

#[derive(Debug, Parser)]
#[command(name = "tfcr", version, about = "Supervised term weighting over word embeddings")]
pub struct Cli {
    /// Worker threads (1 = fully deterministic scheduling; default: all cores).
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// JSON run configuration or manifest; flags take precedence over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// k-fold cross-validation over schemes × embeddings × classifiers.
    Cv(ExperimentArgs),
    /// Learning curve over nested training sizes on a fixed held-out fold.
    Curve(CurveArgs),
    /// Export a weight table.
    Weights(WeightsArgs),
    /// Write document vectors as TSV.
    Vectorize(VectorizeArgs),
    /// Train a classifier on the whole dataset.
    Train(TrainArgs),
    /// Classify raw text lines with a trained model.
    Predict(PredictArgs),
}

#[derive(Debug, Args, Default)]
struct DataArgs {
    /// Dataset file or 20 Newsgroups directory.
    #[arg(long)]
    data: Option<PathBuf>,
    /// csv, tsv, jsonl or 20ng (default: from the path).
    #[arg(long)]
    format: Option<String>,
    #[arg(long)]
    text_column: Option<String>,
    #[arg(long)]
    label_column: Option<String>,
    /// Name written to the dataset column of result files.
    #[arg(long)]
    dataset_name: Option<String>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    preserve_case: Option<bool>,
    /// Uniformly subsample datasets larger than this.
    #[arg(long)]
    sample_cap: Option<usize>,
}

#[derive(Debug, Args, Default)]
struct EmbeddingArgs {
    /// Embedding file, or `synthetic:<dim>:<seed>`. Repeatable for grids.
    #[arg(long = "embedding")]
    embeddings: Vec<String>,
    /// glove, w2v-text or w2v-bin (default: detected).
    #[arg(long)]
    embedding_format: Option<String>,
    /// Retry tokens missing from the embeddings in lowercase.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    case_fallback: Option<bool>,
}

#[derive(Debug, Args, Default)]
struct SchemeArgs {
    /// Comma-separated schemes: none, tfidf, kld, tftrr, tfcr, or all.
    #[arg(long)]
    scheme: Option<String>,
    /// TF-TRR smoothing constant.
    #[arg(long)]
    alpha: Option<f64>,
    /// Keep negative KLD values.
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    kld_raw: Option<bool>,
}

#[derive(Debug, Args, Default)]
struct ClassifierArgs {
    /// Comma-separated classifiers: logreg, svm.
    #[arg(long)]
    classifier: Option<String>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    decay: Option<f64>,
    #[arg(long)]
    l2: Option<f64>,
    /// Mini-batch size; 0 means full batch.
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    tolerance: Option<f64>,
    /// Standardize features with training statistics (default true).
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    standardize: Option<bool>,
}

#[derive(Debug, Args, Default)]
struct ExperimentArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of folds.
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, num_args = 0..=1, default_missing_value = "true")]
    stratified: Option<bool>,
    /// Results file (default: standard output).
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct CurveArgs {
    #[command(flatten)]
    experiment: ExperimentArgs,
    #[arg(long)]
    min: Option<usize>,
    #[arg(long)]
    max: Option<usize>,
    #[arg(long)]
    step: Option<usize>,
    /// Explicit comma-separated training sizes.
    #[arg(long, value_delimiter = ',')]
    sizes: Option<Vec<usize>>,
}

#[derive(Debug, Args, Default)]
struct WeightsArgs {
    /// Optional `export` verb, accepted for readability.
    #[arg(hide = true, value_parser = ["export"])]
    action: Option<String>,
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Keep only the k highest weights per category.
    #[arg(long)]
    top_k: Option<usize>,
    /// tsv or json.
    #[arg(long)]
    output_format: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct VectorizeArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct TrainArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    embedding: EmbeddingArgs,
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    classifier: ClassifierArgs,
    #[arg(long)]
    seed: Option<u64>,
    /// Model file to write; the manifest goes next to it.
    #[arg(long)]
    model: Option<PathBuf>,
}

#[derive(Debug, Args, Default)]
struct PredictArgs {
    #[arg(long)]
    model: Option<PathBuf>,
    /// Embeddings to use instead of the ones recorded at training time.
    #[arg(long)]
    embedding: Option<String>,
    #[arg(long)]
    embedding_format: Option<String>,
    /// One document per line (default: standard input).
    #[arg(long)]
    input: Option<PathBuf>,
    /// A single document given inline.
    #[arg(long)]
    text: Option<String>,
    #[arg(long)]
    output: Option<PathBuf>,
}

/// Every setting of a run. Unset fields fall back to the config file, then
/// to defaults; manifests store the fully resolved form.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub data: Option<PathBuf>,
    pub format: Option<String>,
    pub text_column: Option<String>,
    pub label_column: Option<String>,
    pub dataset_name: Option<String>,
    pub preserve_case: Option<bool>,
    pub sample_cap: Option<usize>,
    pub embeddings: Option<Vec<String>>,
    pub embedding_format: Option<String>,
    pub case_fallback: Option<bool>,
    pub scheme: Option<String>,
    pub alpha: Option<f64>,
    pub kld_raw: Option<bool>,
    pub classifier: Option<String>,
    pub epochs: Option<usize>,
    pub learning_rate: Option<f64>,
    pub decay: Option<f64>,
    pub l2: Option<f64>,
    pub batch_size: Option<usize>,
    pub tolerance: Option<f64>,
    pub standardize: Option<bool>,
    pub seed: Option<u64>,
    pub k: Option<usize>,
    pub stratified: Option<bool>,
    pub ladder: Option<Vec<usize>>,
    pub top_k: Option<usize>,
    pub output_format: Option<String>,
    pub output: Option<PathBuf>,
}

macro_rules! fill_from {
    ($hi:expr, $lo:expr; $($field:ident),* $(,)?) => {
        $( if $hi.$field.is_none() { $hi.$field = $lo.$field.clone(); } )*
    };
}

impl RunConfig {
    /// Fields unset here are taken from `lower`.
    pub fn or(mut self, lower: &RunConfig) -> RunConfig {
        fill_from!(self, lower;
            data, format, text_column, label_column, dataset_name, preserve_case,
            sample_cap, embeddings, embedding_format, case_fallback, scheme, alpha,
            kld_raw, classifier, epochs, learning_rate, decay, l2, batch_size,
            tolerance, standardize, seed, k, stratified, ladder, top_k,
            output_format, output);
        self
    }

    /// Reads a bare config or the `config` member of a manifest.
    pub fn from_json_file(path: &Path) -> Result<RunConfig> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let value: serde_json::Value = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let inner = match value.get("config") {
            Some(c) if value.get("tool").is_some() => c.clone(),
            _ => value,
        };
        serde_json::from_value(inner).map_err(|e| Error::Config(format!("{}: {e}", path.display())))
    }

    fn with_data(self, a: &DataArgs) -> RunConfig {
        RunConfig {
            data: a.data.clone(),
            format: a.format.clone(),
            text_column: a.text_column.clone(),
            label_column: a.label_column.clone(),
            dataset_name: a.dataset_name.clone(),
            preserve_case: a.preserve_case,
            sample_cap: a.sample_cap,
            ..self
        }
    }

    fn with_embedding(self, a: &EmbeddingArgs) -> RunConfig {
        RunConfig {
            embeddings: (!a.embeddings.is_empty()).then(|| a.embeddings.clone()),
            embedding_format: a.embedding_format.clone(),
            case_fallback: a.case_fallback,
            ..self
        }
    }

    fn with_scheme(self, a: &SchemeArgs) -> RunConfig {
        RunConfig {
            scheme: a.scheme.clone(),
            alpha: a.alpha,
            kld_raw: a.kld_raw,
            ..self
        }
    }

    fn with_classifier(self, a: &ClassifierArgs) -> RunConfig {
        RunConfig {
            classifier: a.classifier.clone(),
            epochs: a.epochs,
            learning_rate: a.learning_rate,
            decay: a.decay,
            l2: a.l2,
            batch_size: a.batch_size,
            tolerance: a.tolerance,
            standardize: a.standardize,
            ..self
        }
    }

    fn with_experiment(self, a: &ExperimentArgs) -> RunConfig {
        RunConfig {
            seed: a.seed,
            k: a.k,
            stratified: a.stratified,
            output: a.output.clone(),
            ..self
        }
        .with_data(&a.data)
        .with_embedding(&a.embedding)
        .with_scheme(&a.scheme)
        .with_classifier(&a.classifier)
    }

    /// Fills every field that has a default.
    fn with_defaults(mut self) -> Result<RunConfig> {
        let train = TrainConfig::default();
        if self.format.is_none() {
            if let Some(data) = &self.data {
                self.format = Some(infer_format(data).to_owned());
            }
        }
        let defaults = RunConfig {
            text_column: Some("text".into()),
            label_column: Some("label".into()),
            preserve_case: Some(false),
            sample_cap: Some(corpus::DEFAULT_SAMPLE_CAP),
            case_fallback: Some(false),
            scheme: Some("tfcr".into()),
            alpha: Some(DEFAULT_ALPHA),
            kld_raw: Some(false),
            classifier: Some("logreg".into()),
            epochs: Some(train.epochs),
            learning_rate: Some(train.learning_rate),
            decay: Some(train.decay),
            l2: Some(train.l2),
            batch_size: Some(train.batch_size),
            tolerance: Some(train.tolerance),
            standardize: Some(true),
            k: Some(DEFAULT_FOLDS),
            stratified: Some(true),
            output_format: Some("tsv".into()),
            ..RunConfig::default()
        };
        let mut out = self.or(&defaults);
        if out.dataset_name.is_none() {
            out.dataset_name = out.data.as_ref().map(|d| {
                d.file_stem()
                    .map(|s| s.to_string_lossy().into_owned())
                    .unwrap_or_else(|| d.display().to_string())
            });
        }
        // Canonical list forms, so manifests spell out what ran.
        let schemes = out.schemes()?;
        out.scheme = Some(join(schemes.iter().map(|s| s.name())));
        let kinds = out.classifiers()?;
        out.classifier = Some(join(kinds.iter().map(|k| k.name())));
        Ok(out)
    }

    fn seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| Error::Config("--seed is required (there is no clock-based default)".into()))
    }

    fn schemes(&self) -> Result<Vec<Scheme>> {
        Scheme::parse_list(self.scheme.as_deref().unwrap_or("tfcr"))
    }

    fn classifiers(&self) -> Result<Vec<ClassifierKind>> {
        let mut out = Vec::new();
        for part in self.classifier.as_deref().unwrap_or("logreg").split(',') {
            let part = part.trim();
            if !part.is_empty() {
                let kind: ClassifierKind = part.parse()?;
                if !out.contains(&kind) {
                    out.push(kind);
                }
            }
        }
        if out.is_empty() {
            return Err(Error::Config("no classifier given".into()));
        }
        Ok(out)
    }

    fn tokenizer(&self) -> TokenizerConfig {
        TokenizerConfig {
            preserve_case: self.preserve_case.unwrap_or(false),
        }
    }

    fn lookup(&self) -> LookupConfig {
        LookupConfig {
            case_fallback: self.case_fallback.unwrap_or(false),
        }
    }

    fn weighting(&self, scheme: Scheme) -> WeightingConfig {
        WeightingConfig {
            scheme,
            alpha: self.alpha.unwrap_or(DEFAULT_ALPHA),
            kld_raw: self.kld_raw.unwrap_or(false),
        }
    }

    fn pipeline(&self, classifier: ClassifierKind) -> Result<PipelineConfig> {
        let d = TrainConfig::default();
        let train = TrainConfig {
            epochs: self.epochs.unwrap_or(d.epochs),
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            decay: self.decay.unwrap_or(d.decay),
            l2: self.l2.unwrap_or(d.l2),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed: self.seed()?,
            tolerance: self.tolerance.unwrap_or(d.tolerance),
        };
        train.validate()?;
        Ok(PipelineConfig {
            classifier,
            train,
            standardize: self.standardize.unwrap_or(true),
            lookup: self.lookup(),
        })
    }
}

fn join<'a>(parts: impl Iterator<Item = &'a str>) -> String {
    parts.collect::<Vec<_>>().join(",")
}

fn infer_format(path: &Path) -> &'static str {
    if path.is_dir() {
        return "20ng";
    }
    match path
        .extension()
        .map(|e| e.to_string_lossy().to_ascii_lowercase())
        .as_deref()
    {
        Some("tsv") | Some("tab") => "tsv",
        Some("jsonl") | Some("json") | Some("ndjson") => "jsonl",
        _ => "csv",
    }
}

/// Loads the dataset, subsamples it past the cap, and (when `labeled_only`)
/// drops documents without a label.
fn load_dataset(cfg: &RunConfig, labeled_only: bool) -> Result<LabeledCorpus> {
    let path = cfg
        .data
        .as_ref()
        .ok_or_else(|| Error::Config("--data is required".into()))?;
    let tok = cfg.tokenizer();
    let text_column = cfg.text_column.clone().unwrap_or_else(|| "text".into());
    let label_column = cfg.label_column.clone().unwrap_or_else(|| "label".into());
    let mut corpus = match cfg.format.as_deref().unwrap_or_else(|| infer_format(path)) {
        "csv" => load_csv(
            path,
            &CsvOptions {
                text_column,
                label_column,
                delimiter: b',',
            },
            &tok,
        )?,
        "tsv" => load_csv(
            path,
            &CsvOptions {
                text_column,
                label_column,
                delimiter: b'\t',
            },
            &tok,
        )?,
        "jsonl" => load_jsonl(path, &text_column, &label_column, &tok)?,
        "20ng" => load_20ng(path, &tok)?,
        other => {
            return Err(Error::Config(format!(
                "unknown data format '{other}'; valid formats: csv, tsv, jsonl, 20ng"
            )))
        }
    };
    if labeled_only {
        let keep: Vec<usize> = (0..corpus.len())
            .filter(|&i| corpus.documents[i].label.is_some())
            .collect();
        if keep.len() < corpus.len() {
            log::warn!(
                "ignoring {} unlabeled documents",
                corpus.len() - keep.len()
            );
            corpus = corpus.subset(&keep);
        }
        corpus.validate_for_training()?;
    }
    let cap = cfg.sample_cap.unwrap_or(corpus::DEFAULT_SAMPLE_CAP);
    if corpus.len() > cap {
        let seed = cfg.seed()?;
        log::warn!("sampling {cap} of {} documents", corpus.len());
        corpus = corpus::sample(&corpus, cap, seed);
    }
    Ok(corpus)
}

/// Resolves an embedding spec: a file path or `synthetic:<dim>:<seed>`.
/// Synthetic models cover `vocabulary`.
fn load_embedding(spec: &str, format: Option<&str>, vocabulary: &[String]) -> Result<EmbeddingModel> {
    if let Some(rest) = spec.strip_prefix("synthetic:") {
        let parts: Vec<&str> = rest.split(':').collect();
        let parsed = match parts.as_slice() {
            [d, s] => d.parse::<usize>().ok().zip(s.parse::<u64>().ok()),
            _ => None,
        };
        let Some((dim, seed)) = parsed.filter(|(d, _)| *d > 0) else {
            return Err(Error::Config(format!(
                "bad synthetic embedding spec '{spec}'; expected synthetic:<dim>:<seed>"
            )));
        };
        return Ok(embeddings::synthetic_model(vocabulary, dim, seed).with_name(spec));
    }
    let path = Path::new(spec);
    let model = match format {
        Some(f) => embeddings::load(path, f.parse::<EmbeddingFormat>()?)?,
        None => embeddings::load_auto(path)?,
    };
    if model.warnings() > 0 {
        log::warn!("{spec}: skipped {} malformed or duplicate entries", model.warnings());
    }
    Ok(model.with_name(spec))
}

fn load_embeddings(cfg: &RunConfig, corpus: &LabeledCorpus) -> Result<Vec<EmbeddingModel>> {
    let specs = cfg
        .embeddings
        .as_ref()
        .filter(|e| !e.is_empty())
        .ok_or_else(|| Error::Config("--embedding is required".into()))?;
    let vocab = corpus.vocabulary();
    specs
        .iter()
        .map(|s| load_embedding(s, cfg.embedding_format.as_deref(), &vocab))
        .collect()
}

#[derive(Serialize)]
struct RunManifest<'a> {
    tool: &'static str,
    version: &'static str,
    command: &'static str,
    config: &'a RunConfig,
}

fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

fn write_manifest(output: &Path, command: &'static str, cfg: &RunConfig) -> Result<()> {
    let manifest = RunManifest {
        tool: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        command,
        config: cfg,
    };
    let path = manifest_path(output);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, &manifest)?;
    writeln!(w).map_err(|e| Error::io(&path, e))?;
    w.flush().map_err(|e| Error::io(&path, e))
}

/// Buffered writer to `path`, or standard output.
fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p).map_err(|e| Error::io(p, e))?)),
        None => Box::new(BufWriter::new(std::io::stdout())),
    })
}

fn stdout_error(e: std::io::Error) -> Error {
    Error::io("<output>", e)
}

fn factories(cfg: &RunConfig) -> Result<Vec<WeightingConfig>> {
    Ok(cfg.schemes()?.into_iter().map(|s| cfg.weighting(s)).collect())
}

fn cmd_cv(cfg: RunConfig) -> Result<()> {
    let seed = cfg.seed()?;
    let corpus = load_dataset(&cfg, true)?;
    let weightings = factories(&cfg)?;
    let pipelines: Vec<PipelineConfig> = cfg
        .classifiers()?
        .into_iter()
        .map(|k| cfg.pipeline(k))
        .collect::<Result<_>>()?;
    let models = load_embeddings(&cfg, &corpus)?;
    let k = cfg.k.unwrap_or(DEFAULT_FOLDS);
    let plan = make_splits(&corpus, k, &[], seed, cfg.stratified.unwrap_or(true))?;
    let dyn_factories: Vec<&dyn TableFactory> =
        weightings.iter().map(|w| w as &dyn TableFactory).collect();
    let model_refs: Vec<&EmbeddingModel> = models.iter().collect();
    let cells = eval::grid_run(&corpus, &plan, &dyn_factories, &model_refs, &pipelines);
    let dataset = cfg.dataset_name.clone().unwrap_or_else(|| "dataset".into());

    let mut out = sink(cfg.output.as_deref())?;
    eval::write_results_csv(&mut out, &dataset, &cells)?;
    out.flush().map_err(stdout_error)?;
    drop(out);
    if let Some(path) = &cfg.output {
        write_manifest(path, "cv", &cfg)?;
    }
    let mut stdout = std::io::stdout().lock();
    write!(stdout, "{}", eval::format_summary(&dataset, &cells)).map_err(stdout_error)?;
    let failed: Vec<String> = cells
        .iter()
        .filter_map(|c| c.outcome.as_ref().err().map(|e| format!("{}/{}/{}: {e}", c.scheme, c.embedding, c.classifier)))
        .collect();
    if !failed.is_empty() {
        return Err(Error::Training(format!(
            "{} of {} cells failed: {}",
            failed.len(),
            cells.len(),
            failed.join("; ")
        )));
    }
    Ok(())
}

/// Builds the ladder from `--sizes` or `--min/--max/--step`.
fn ladder_from(args: &CurveArgs) -> Result<Option<Vec<usize>>> {
    if let Some(sizes) = &args.sizes {
        return Ok(Some(sizes.clone()));
    }
    match (args.min, args.max, args.step) {
        (None, None, None) => Ok(None),
        (Some(min), Some(max), step) => {
            let step = step.unwrap_or(min);
            if min == 0 || step == 0 || max < min {
                return Err(Error::Config(
                    "ladder needs 1 <= --min <= --max and --step >= 1".into(),
                ));
            }
            Ok(Some((min..=max).step_by(step).collect()))
        }
        _ => Err(Error::Config("give both --min and --max (and optionally --step)".into())),
    }
}

fn cmd_curve(cfg: RunConfig) -> Result<()> {
    let seed = cfg.seed()?;
    let requested = cfg
        .ladder
        .clone()
        .filter(|l| !l.is_empty())
        .ok_or_else(|| Error::Config("a ladder is required: --min/--max/--step or --sizes".into()))?;
    let corpus = load_dataset(&cfg, true)?;
    let weightings = factories(&cfg)?;
    let kinds = cfg.classifiers()?;
    if kinds.len() != 1 {
        return Err(Error::Config("curve takes exactly one classifier".into()));
    }
    let pipeline = cfg.pipeline(kinds[0])?;
    let models = load_embeddings(&cfg, &corpus)?;
    if models.len() != 1 {
        return Err(Error::Config("curve takes exactly one embedding".into()));
    }
    let k = cfg.k.unwrap_or(DEFAULT_FOLDS);
    let stratified = cfg.stratified.unwrap_or(true);
    let pool = make_splits(&corpus, k, &[], seed, stratified)?.training_pool_size();
    let ladder: Vec<usize> = requested.iter().copied().filter(|&s| s <= pool).collect();
    if ladder.len() < requested.len() {
        log::warn!(
            "dropping {} training sizes above the {pool} available training documents",
            requested.len() - ladder.len()
        );
    }
    if ladder.is_empty() {
        return Err(Error::Config(format!(
            "every requested training size exceeds the {pool} available training documents"
        )));
    }
    let plan = make_splits(&corpus, k, &ladder, seed, stratified)
        .map_err(|e| Error::Config(e.to_string()))?;
    let dyn_factories: Vec<&dyn TableFactory> =
        weightings.iter().map(|w| w as &dyn TableFactory).collect();
    let points = eval::learning_curve(&corpus, &plan, &dyn_factories, &models[0], &pipeline)?;

    let mut out = sink(cfg.output.as_deref())?;
    eval::write_curve_csv(&mut out, &points)?;
    out.flush().map_err(stdout_error)?;
    drop(out);
    if let Some(path) = &cfg.output {
        write_manifest(path, "curve", &cfg)?;
    }
    Ok(())
}

fn single_scheme(cfg: &RunConfig) -> Result<Scheme> {
    match cfg.schemes()?.as_slice() {
        [s] => Ok(*s),
        _ => Err(Error::Config("this command takes exactly one scheme".into())),
    }
}

fn cmd_weights(cfg: RunConfig) -> Result<()> {
    let scheme = single_scheme(&cfg)?;
    if scheme == Scheme::None {
        return Err(Error::Config(
            "weights needs a scheme other than none; valid schemes: tfidf, kld, tftrr, tfcr".into(),
        ));
    }
    let corpus = load_dataset(&cfg, true)?;
    let stats = CorpusStats::build_all(&corpus)?;
    let table = weighting::build_table_with(&stats, &cfg.weighting(scheme));
    let rows = table.export_rows(cfg.top_k);
    let mut out = sink(cfg.output.as_deref())?;
    match cfg.output_format.as_deref().unwrap_or("tsv") {
        "tsv" => weighting::write_tsv(&mut out, &rows, &corpus.categories),
        "json" => weighting::write_json(&mut out, scheme, &rows, &corpus.categories),
        other => {
            return Err(Error::Config(format!(
                "unknown output format '{other}'; valid formats: tsv, json"
            )))
        }
    }
    .map_err(stdout_error)?;
    out.flush().map_err(stdout_error)?;
    drop(out);
    if let Some(path) = &cfg.output {
        write_manifest(path, "weights", &cfg)?;
    }
    Ok(())
}

fn cmd_vectorize(cfg: RunConfig) -> Result<()> {
    let scheme = single_scheme(&cfg)?;
    let corpus = load_dataset(&cfg, false)?;
    let labeled: Vec<usize> = (0..corpus.len())
        .filter(|&i| corpus.documents[i].label.is_some())
        .collect();
    let table = if labeled.is_empty() {
        if scheme != Scheme::None {
            return Err(Error::Config(format!(
                "scheme {scheme} needs labeled documents"
            )));
        }
        WeightTable::unweighted()
    } else {
        cfg.weighting(scheme).build(&CorpusStats::build(&corpus, &labeled)?)
    };
    let models = load_embeddings(&cfg, &corpus)?;
    if models.len() != 1 {
        return Err(Error::Config("vectorize takes exactly one embedding".into()));
    }
    let lookup = cfg.lookup();
    let mut out = sink(cfg.output.as_deref())?;
    let width = crate::vectorize::Layout::for_scheme(scheme, corpus.num_categories(), models[0].dim()).len();
    let mut header = vec!["id".to_owned(), "label".to_owned()];
    header.extend((0..width).map(|i| format!("x{i}")));
    writeln!(out, "{}", header.join("\t")).map_err(stdout_error)?;
    for doc in &corpus.documents {
        let v = vectorize(&doc.tokens, &models[0], &table, &lookup);
        let label = doc
            .label
            .map(|l| corpus.categories[l].clone())
            .unwrap_or_default();
        let values: Vec<String> = v.values.iter().map(|x| x.to_string()).collect();
        writeln!(out, "{}\t{}\t{}", doc.source_id, label, values.join("\t")).map_err(stdout_error)?;
    }
    out.flush().map_err(stdout_error)?;
    drop(out);
    if let Some(path) = &cfg.output {
        write_manifest(path, "vectorize", &cfg)?;
    }
    Ok(())
}

/// Everything `predict` needs besides the weights file.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelManifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
    pub categories: Vec<String>,
    pub tokenizer: TokenizerConfig,
    pub lookup: LookupConfig,
    pub embedding: EmbeddingInfo,
    pub scaler: Option<ScalerParams>,
    pub table: WeightTable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingInfo {
    pub spec: String,
    pub dim: usize,
    pub vocab_size: usize,
}

fn cmd_train(cfg: RunConfig, model_path: PathBuf) -> Result<()> {
    cfg.seed()?;
    let scheme = single_scheme(&cfg)?;
    let kinds = cfg.classifiers()?;
    if kinds.len() != 1 {
        return Err(Error::Config("train takes exactly one classifier".into()));
    }
    let pipeline = cfg.pipeline(kinds[0])?;
    let corpus = load_dataset(&cfg, true)?;
    let models = load_embeddings(&cfg, &corpus)?;
    if models.len() != 1 {
        return Err(Error::Config("train takes exactly one embedding".into()));
    }
    let embedding = &models[0];
    let all: Vec<usize> = (0..corpus.len()).collect();
    let fitted = FittedPipeline::fit(&corpus, &all, &cfg.weighting(scheme), embedding, &pipeline)?;

    let file = File::create(&model_path).map_err(|e| Error::io(&model_path, e))?;
    let mut w = BufWriter::new(file);
    fitted
        .model
        .write_to(&mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(&model_path, e))?;
    let manifest = ModelManifest {
        tool: env!("CARGO_PKG_NAME").into(),
        version: env!("CARGO_PKG_VERSION").into(),
        config: cfg.clone(),
        categories: corpus.categories.clone(),
        tokenizer: cfg.tokenizer(),
        lookup: fitted.lookup,
        embedding: EmbeddingInfo {
            spec: embedding.name().to_owned(),
            dim: embedding.dim(),
            vocab_size: embedding.len(),
        },
        scaler: fitted.scaler.clone(),
        table: fitted.table.clone(),
    };
    let path = manifest_path(&model_path);
    let file = File::create(&path).map_err(|e| Error::io(&path, e))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer(&mut w, &manifest)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    log::info!(
        "trained {} on {} documents; final objective {:?}",
        fitted.model.kind,
        corpus.len(),
        fitted.model.training_log.last()
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let model_path = args
        .model
        .ok_or_else(|| Error::Config("--model is required".into()))?;
    let mut reader = BufReader::new(File::open(&model_path).map_err(|e| Error::io(&model_path, e))?);
    let model = LinearModel::read_from(&mut reader)?;
    let manifest_file = manifest_path(&model_path);
    let text = std::fs::read_to_string(&manifest_file).map_err(|e| Error::io(&manifest_file, e))?;
    let manifest: ModelManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", manifest_file.display())))?;

    let lines: Vec<String> = match (&args.text, &args.input) {
        (Some(t), _) => vec![t.clone()],
        (None, Some(p)) => read_lines(BufReader::new(File::open(p).map_err(|e| Error::io(p, e))?), p)?,
        (None, None) => read_lines(std::io::stdin().lock(), Path::new("<stdin>"))?,
    };
    let docs: Vec<Vec<String>> = lines.iter().map(|l| tokenize(l, &manifest.tokenizer)).collect();
    let mut vocab: Vec<String> = docs.iter().flatten().cloned().collect();
    vocab.sort();
    vocab.dedup();

    let spec = args.embedding.unwrap_or_else(|| manifest.embedding.spec.clone());
    let embedding = load_embedding(&spec, args.embedding_format.as_deref(), &vocab)?;
    if embedding.dim() != manifest.embedding.dim {
        return Err(Error::Config(format!(
            "embedding dimension mismatch: model was trained with {}-dimensional vectors from '{}', '{}' has {}",
            manifest.embedding.dim,
            manifest.embedding.spec,
            spec,
            embedding.dim()
        )));
    }
    if manifest.categories.len() != model.num_classes() {
        return Err(Error::Config(format!(
            "manifest lists {} categories but the model has {} classes",
            manifest.categories.len(),
            model.num_classes()
        )));
    }
    let expected = crate::vectorize::Layout::for_scheme(
        manifest.table.scheme(),
        manifest.categories.len(),
        embedding.dim(),
    )
    .len();
    if expected != model.num_features() {
        return Err(Error::Config(format!(
            "model expects {} features but the manifest describes {expected}",
            model.num_features()
        )));
    }

    let pipeline = FittedPipeline {
        table: manifest.table,
        scaler: manifest.scaler,
        model,
        lookup: manifest.lookup,
        training_size: 0,
    };
    let mut out = sink(args.output.as_deref())?;
    writeln!(out, "label\t{}", manifest.categories.join("\t")).map_err(stdout_error)?;
    for tokens in &docs {
        let p = pipeline.predict(tokens, &embedding)?;
        let scores: Vec<String> = p.scores.iter().map(|s| s.to_string()).collect();
        writeln!(out, "{}\t{}", manifest.categories[p.label], scores.join("\t")).map_err(stdout_error)?;
    }
    out.flush().map_err(stdout_error)
}

fn read_lines<R: BufRead>(reader: R, path: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for chunk in reader.split(b'\n') {
        let bytes = chunk.map_err(|e| Error::io(path, e))?;
        let mut line = String::from_utf8_lossy(&bytes).into_owned();
        if line.ends_with('\r') {
            line.pop();
        }
        out.push(line);
    }
    Ok(out)
}

fn file_config(cli: &Cli) -> Result<RunConfig> {
    match &cli.config {
        Some(path) => RunConfig::from_json_file(path),
        None => Ok(RunConfig::default()),
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let file = file_config(&cli)?;
    match cli.command {
        Command::Cv(a) => cmd_cv(RunConfig::default().with_experiment(&a).or(&file).with_defaults()?),
        Command::Curve(a) => {
            let mut flags = RunConfig::default().with_experiment(&a.experiment);
            flags.ladder = ladder_from(&a)?;
            cmd_curve(flags.or(&file).with_defaults()?)
        }
        Command::Weights(a) => {
            let flags = RunConfig {
                seed: a.seed,
                top_k: a.top_k,
                output_format: a.output_format.clone(),
                output: a.output.clone(),
                ..RunConfig::default()
            }
            .with_data(&a.data)
            .with_scheme(&a.scheme);
            cmd_weights(flags.or(&file).with_defaults()?)
        }
        Command::Vectorize(a) => {
            let flags = RunConfig {
                seed: a.seed,
                output: a.output.clone(),
                ..RunConfig::default()
            }
            .with_data(&a.data)
            .with_embedding(&a.embedding)
            .with_scheme(&a.scheme);
            cmd_vectorize(flags.or(&file).with_defaults()?)
        }
        Command::Train(a) => {
            let model = a
                .model
                .clone()
                .ok_or_else(|| Error::Config("--model is required".into()))?;
            let flags = RunConfig {
                seed: a.seed,
                ..RunConfig::default()
            }
            .with_data(&a.data)
            .with_embedding(&a.embedding)
            .with_scheme(&a.scheme)
            .with_classifier(&a.classifier);
            let mut cfg = flags.or(&file).with_defaults()?;
            cfg.output = None;
            cmd_train(cfg, model)
        }
        Command::Predict(a) => cmd_predict(a),
    }
}

/// Parses `args` (including the program name) and runs the command; returns
/// the process exit code.
pub fn run_from<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return e.exit_code();
        }
    };
    let result = match cli.jobs {
        Some(0) => Err(Error::Config("--jobs must be >= 1".into())),
        Some(n) => match rayon::ThreadPoolBuilder::new().num_threads(n).build() {
            Ok(pool) => pool.install(|| dispatch(cli)),
            Err(e) => Err(Error::Config(format!("cannot start {n} worker threads: {e}"))),
        },
        None => dispatch(cli),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_config() {
                2
            } else {
                1
            }
        }
    }
}

pub fn run() -> i32 {
    run_from(std::env::args_os())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file_which_overrides_defaults() {
        let flags = RunConfig {
            seed: Some(1),
            ..Default::default()
        };
        let file = RunConfig {
            seed: Some(2),
            k: Some(5),
            ..Default::default()
        };
        let cfg = flags.or(&file).with_defaults().unwrap();
        assert_eq!(cfg.seed, Some(1));
        assert_eq!(cfg.k, Some(5));
        assert_eq!(cfg.alpha, Some(DEFAULT_ALPHA));
    }

    #[test]
    fn scheme_all_expands() {
        let cfg = RunConfig {
            scheme: Some("all".into()),
            ..Default::default()
        }
        .with_defaults()
        .unwrap();
        assert_eq!(cfg.scheme.as_deref(), Some("none,tfidf,kld,tftrr,tfcr"));
    }

    #[test]
    fn ladder_from_range() {
        let args = CurveArgs {
            min: Some(1000),
            max: Some(3000),
            step: Some(1000),
            ..Default::default()
        };
        assert_eq!(ladder_from(&args).unwrap(), Some(vec![1000, 2000, 3000]));
    }

    #[test]
    fn missing_seed_is_a_config_error() {
        assert!(RunConfig::default().seed().unwrap_err().is_config());
    }

    #[test]
    fn manifest_config_round_trips() {
        let cfg = RunConfig {
            seed: Some(7),
            ladder: Some(vec![10, 20]),
            ..Default::default()
        }
        .with_defaults()
        .unwrap();
        let manifest = serde_json::to_string(&RunManifest {
            tool: "tfcr",
            version: "0",
            command: "curve",
            config: &cfg,
        })
        .unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        std::fs::write(&path, manifest).unwrap();
        assert_eq!(RunConfig::from_json_file(&path).unwrap(), cfg);
    }
}
