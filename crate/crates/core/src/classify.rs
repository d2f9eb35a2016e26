//! Linear classifiers over dense document vectors.
//!
//! * Multinomial logistic regression: mean softmax cross-entropy plus
//!   `(l2/2)·‖W‖²` (biases unregularized), trained by seeded mini-batch
//!   gradient descent with an inverse-time decaying rate. In full-batch mode
//!   a step that would raise the objective is halved until it does not.
//! * One-vs-rest linear SVM: per class, mean hinge loss plus
//!   `(l2/2)·(‖w‖² + b²)`, trained with Pegasos steps `1 / (l2·t)`, projection
//!   onto the `1/√l2` ball and averaging of the second half of the iterates.
//!
//! Argmax ties go to the lowest class index.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassifierKind {
    LogReg,
    Svm,
}

impl ClassifierKind {
    pub const ALL: [ClassifierKind; 2] = [ClassifierKind::Svm, ClassifierKind::LogReg];

    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::LogReg => "logreg",
            ClassifierKind::Svm => "svm",
        }
    }

    fn code(self) -> u8 {
        match self {
            ClassifierKind::LogReg => 0,
            ClassifierKind::Svm => 1,
        }
    }
}

impl fmt::Display for ClassifierKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for ClassifierKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "logreg" | "lr" | "logistic" => Ok(ClassifierKind::LogReg),
            "svm" => Ok(ClassifierKind::Svm),
            _ => Err(Error::Config(format!(
                "unknown classifier '{s}'; valid classifiers: logreg, svm"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub epochs: usize,
    pub learning_rate: f64,
    /// Epoch `e` uses `learning_rate / (1 + decay·e)` (logistic regression only).
    pub decay: f64,
    pub l2: f64,
    /// 0 (or anything >= the sample count) means full batch.
    pub batch_size: usize,
    pub seed: u64,
    /// Stop once the relative objective improvement falls below this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 100,
            learning_rate: 0.1,
            decay: 0.01,
            l2: 1e-4,
            batch_size: 64,
            seed: 0,
            tolerance: 1e-6,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        // Written so that NaN fails every check.
        let positive = |v: f64| v > 0.0;
        let non_negative = |v: f64| v >= 0.0;
        if !positive(self.learning_rate) || !non_negative(self.decay) {
            return Err(Error::Config(
                "learning rate must be > 0 and decay >= 0".into(),
            ));
        }
        if !non_negative(self.l2) || !non_negative(self.tolerance) {
            return Err(Error::Config("l2 and tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Class-major weight matrix plus biases.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearParams {
    pub num_classes: usize,
    pub num_features: usize,
    /// Row-major `num_classes × num_features`.
    pub weights: Vec<f64>,
    pub biases: Vec<f64>,
}

impl LinearParams {
    pub fn zeros(num_classes: usize, num_features: usize) -> Self {
        LinearParams {
            num_classes,
            num_features,
            weights: vec![0.0; num_classes * num_features],
            biases: vec![0.0; num_classes],
        }
    }

    pub fn row(&self, class: usize) -> &[f64] {
        &self.weights[class * self.num_features..(class + 1) * self.num_features]
    }

    /// `W x + b`.
    pub fn scores(&self, x: &[f64]) -> Vec<f64> {
        (0..self.num_classes)
            .map(|k| dot(self.row(k), x) + self.biases[k])
            .collect()
    }

    fn clear(&mut self) {
        self.weights.iter_mut().for_each(|v| *v = 0.0);
        self.biases.iter_mut().for_each(|v| *v = 0.0);
    }

    fn squared_weight_norm(&self) -> f64 {
        self.weights.iter().map(|w| w * w).sum()
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest score; ties go to the lowest index.
pub fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

/// Sum of per-sample cross-entropy over `idx`; adds `∂/∂θ` of that sum into `grad`.
fn logreg_accumulate(
    params: &LinearParams,
    xs: &[Vec<f64>],
    ys: &[usize],
    idx: &[usize],
    mut grad: Option<&mut LinearParams>,
) -> f64 {
    let mut loss = 0.0;
    for &i in idx {
        let x = &xs[i];
        let scores = params.scores(x);
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = scores.iter().map(|s| (s - max).exp()).sum();
        let log_z = max + sum_exp.ln();
        loss += log_z - scores[ys[i]];
        if let Some(g) = grad.as_deref_mut() {
            for (k, &s) in scores.iter().enumerate() {
                let mut delta = (s - log_z).exp();
                if k == ys[i] {
                    delta -= 1.0;
                }
                if delta != 0.0 {
                    let f = g.num_features;
                    for (gw, &xv) in g.weights[k * f..(k + 1) * f].iter_mut().zip(x) {
                        *gw += delta * xv;
                    }
                    g.biases[k] += delta;
                }
            }
        }
    }
    loss
}

/// Logistic-regression objective over all samples.
pub fn logreg_objective(params: &LinearParams, xs: &[Vec<f64>], ys: &[usize], l2: f64) -> f64 {
    let all: Vec<usize> = (0..xs.len()).collect();
    logreg_accumulate(params, xs, ys, &all, None) / xs.len() as f64
        + 0.5 * l2 * params.squared_weight_norm()
}

/// Logistic-regression objective and its gradient over all samples.
pub fn logreg_gradient(
    params: &LinearParams,
    xs: &[Vec<f64>],
    ys: &[usize],
    l2: f64,
) -> (f64, LinearParams) {
    let all: Vec<usize> = (0..xs.len()).collect();
    logreg_batch_gradient(params, xs, ys, &all, l2)
}

fn logreg_batch_gradient(
    params: &LinearParams,
    xs: &[Vec<f64>],
    ys: &[usize],
    idx: &[usize],
    l2: f64,
) -> (f64, LinearParams) {
    let mut grad = LinearParams::zeros(params.num_classes, params.num_features);
    let n = idx.len() as f64;
    let loss = logreg_accumulate(params, xs, ys, idx, Some(&mut grad)) / n;
    grad.weights
        .iter_mut()
        .zip(&params.weights)
        .for_each(|(g, w)| *g = *g / n + l2 * w);
    grad.biases.iter_mut().for_each(|g| *g /= n);
    (loss + 0.5 * l2 * params.squared_weight_norm(), grad)
}

fn sign_for(label: usize, class: usize) -> f64 {
    if label == class {
        1.0
    } else {
        -1.0
    }
}

/// Sum over one-vs-rest classes of mean hinge loss plus `(l2/2)(‖w_k‖² + b_k²)`.
pub fn svm_objective(params: &LinearParams, xs: &[Vec<f64>], ys: &[usize], l2: f64) -> f64 {
    svm_gradient_impl(params, xs, ys, l2, false).0
}

/// SVM objective and a subgradient (0 is taken at the hinge kink).
pub fn svm_gradient(
    params: &LinearParams,
    xs: &[Vec<f64>],
    ys: &[usize],
    l2: f64,
) -> (f64, LinearParams) {
    svm_gradient_impl(params, xs, ys, l2, true)
}

fn svm_gradient_impl(
    params: &LinearParams,
    xs: &[Vec<f64>],
    ys: &[usize],
    l2: f64,
    with_grad: bool,
) -> (f64, LinearParams) {
    let n = xs.len() as f64;
    let f = params.num_features;
    let mut grad = LinearParams::zeros(params.num_classes, f);
    let mut hinge = 0.0;
    for (x, &y) in xs.iter().zip(ys) {
        let scores = params.scores(x);
        for (k, s) in scores.into_iter().enumerate() {
            let sign = sign_for(y, k);
            let slack = 1.0 - sign * s;
            if slack > 0.0 {
                hinge += slack;
                if with_grad {
                    for (g, &xv) in grad.weights[k * f..(k + 1) * f].iter_mut().zip(x) {
                        *g -= sign * xv;
                    }
                    grad.biases[k] -= sign;
                }
            }
        }
    }
    let reg = params.squared_weight_norm() + params.biases.iter().map(|b| b * b).sum::<f64>();
    if with_grad {
        grad.weights
            .iter_mut()
            .zip(&params.weights)
            .for_each(|(g, w)| *g = *g / n + l2 * w);
        grad.biases
            .iter_mut()
            .zip(&params.biases)
            .for_each(|(g, b)| *g = *g / n + l2 * b);
    }
    (hinge / n + 0.5 * l2 * reg, grad)
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    pub kind: ClassifierKind,
    pub params: LinearParams,
    pub l2: f64,
    /// Full-data objective after each epoch.
    pub training_log: Vec<f64>,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub label: usize,
    /// Softmax probabilities (logistic regression) or margins (SVM).
    pub scores: Vec<f64>,
}

fn validate_training_data(xs: &[Vec<f64>], ys: &[usize], num_classes: usize) -> Result<usize> {
    if xs.len() != ys.len() {
        return Err(Error::InvalidInput(format!(
            "{} vectors but {} labels",
            xs.len(),
            ys.len()
        )));
    }
    let Some(first) = xs.first() else {
        return Err(Error::Training("no training vectors".into()));
    };
    let num_features = first.len();
    for (i, x) in xs.iter().enumerate() {
        if x.len() != num_features {
            return Err(Error::InvalidInput(format!(
                "document {i} has {} features, expected {num_features}",
                x.len()
            )));
        }
        if let Some(j) = x.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "document {i} has a non-finite feature at position {j}"
            )));
        }
    }
    if let Some(&bad) = ys.iter().find(|&&y| y >= num_classes) {
        return Err(Error::InvalidInput(format!(
            "label {bad} out of range for {num_classes} classes"
        )));
    }
    let mut seen = vec![false; num_classes];
    ys.iter().for_each(|&y| seen[y] = true);
    if seen.iter().filter(|&&s| s).count() < 2 {
        return Err(Error::Training(
            "training data must contain at least 2 distinct classes".into(),
        ));
    }
    Ok(num_features)
}

fn batches(n: usize, batch_size: usize) -> usize {
    if batch_size == 0 || batch_size >= n {
        n
    } else {
        batch_size
    }
}

fn converged(prev: f64, cur: f64, tolerance: f64) -> bool {
    let improvement = prev - cur;
    improvement >= 0.0 && improvement <= tolerance * prev.abs().max(f64::MIN_POSITIVE)
}

pub fn train_logreg(
    xs: &[Vec<f64>],
    ys: &[usize],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    config.validate()?;
    let num_features = validate_training_data(xs, ys, num_classes)?;
    let n = xs.len();
    let batch = batches(n, config.batch_size);
    let mut params = LinearParams::zeros(num_classes, num_features);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut log = Vec::with_capacity(config.epochs);

    if batch == n {
        // Full batch: gradient descent with step halving.
        let (mut objective, mut grad) = logreg_gradient(&params, xs, ys, config.l2);
        let mut cap = f64::INFINITY;
        for epoch in 0..config.epochs {
            let mut step = (config.learning_rate / (1.0 + config.decay * epoch as f64)).min(cap);
            let mut accepted = None;
            for _ in 0..60 {
                let mut candidate = params.clone();
                axpy(&mut candidate, -step, &grad);
                let (obj, g) = logreg_gradient(&candidate, xs, ys, config.l2);
                if obj <= objective {
                    accepted = Some((candidate, obj, g));
                    break;
                }
                step /= 2.0;
            }
            cap = step;
            let Some((candidate, obj, g)) = accepted else {
                break;
            };
            let prev = objective;
            params = candidate;
            objective = obj;
            grad = g;
            log.push(objective);
            if converged(prev, objective, config.tolerance) {
                break;
            }
        }
    } else {
        let mut prev = logreg_objective(&params, xs, ys, config.l2);
        for epoch in 0..config.epochs {
            let step = config.learning_rate / (1.0 + config.decay * epoch as f64);
            order.shuffle(&mut rng);
            for chunk in order.chunks(batch) {
                let (_, grad) = logreg_batch_gradient(&params, xs, ys, chunk, config.l2);
                axpy(&mut params, -step, &grad);
            }
            let objective = logreg_objective(&params, xs, ys, config.l2);
            log.push(objective);
            if !objective.is_finite() {
                return Err(Error::Training(
                    "objective diverged; lower the learning rate".into(),
                ));
            }
            if converged(prev, objective, config.tolerance) {
                break;
            }
            prev = objective;
        }
    }

    Ok(LinearModel {
        kind: ClassifierKind::LogReg,
        params,
        l2: config.l2,
        training_log: log,
        seed: config.seed,
    })
}

fn axpy(target: &mut LinearParams, a: f64, x: &LinearParams) {
    target
        .weights
        .iter_mut()
        .zip(&x.weights)
        .for_each(|(t, v)| *t += a * v);
    target
        .biases
        .iter_mut()
        .zip(&x.biases)
        .for_each(|(t, v)| *t += a * v);
}

pub fn train_svm(
    xs: &[Vec<f64>],
    ys: &[usize],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    config.validate()?;
    if config.l2.is_nan() || config.l2 <= 0.0 {
        return Err(Error::Config("the SVM needs l2 > 0".into()));
    }
    let num_features = validate_training_data(xs, ys, num_classes)?;
    let n = xs.len();
    let batch = batches(n, config.batch_size);
    let l2 = config.l2;
    let radius = 1.0 / l2.sqrt();
    let f = num_features;

    let mut params = LinearParams::zeros(num_classes, f);
    let mut average = LinearParams::zeros(num_classes, f);
    let mut averaged = 0usize;
    let averaging_from = config.epochs / 2;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut order: Vec<usize> = (0..n).collect();
    let mut step_count = 0usize;
    let mut log = Vec::with_capacity(config.epochs);
    let mut direction = LinearParams::zeros(num_classes, f);

    for epoch in 0..config.epochs {
        if batch < n {
            order.shuffle(&mut rng);
        }
        for chunk in order.chunks(batch) {
            step_count += 1;
            let eta = 1.0 / (l2 * step_count as f64);
            direction.clear();
            for &i in chunk {
                let x = &xs[i];
                for k in 0..num_classes {
                    let sign = sign_for(ys[i], k);
                    let margin = sign * (dot(params.row(k), x) + params.biases[k]);
                    if margin < 1.0 {
                        for (d, &xv) in direction.weights[k * f..(k + 1) * f].iter_mut().zip(x) {
                            *d += sign * xv;
                        }
                        direction.biases[k] += sign;
                    }
                }
            }
            let shrink = 1.0 - eta * l2;
            let scale = eta / chunk.len() as f64;
            for k in 0..num_classes {
                let row = k * f..(k + 1) * f;
                for (w, d) in params.weights[row.clone()]
                    .iter_mut()
                    .zip(&direction.weights[row.clone()])
                {
                    *w = shrink * *w + scale * d;
                }
                params.biases[k] = shrink * params.biases[k] + scale * direction.biases[k];
                let norm = (dot(&params.weights[row.clone()], &params.weights[row.clone()])
                    + params.biases[k] * params.biases[k])
                    .sqrt();
                if norm > radius {
                    let r = radius / norm;
                    params.weights[row].iter_mut().for_each(|w| *w *= r);
                    params.biases[k] *= r;
                }
            }
            if epoch >= averaging_from {
                averaged += 1;
                let t = 1.0 / averaged as f64;
                for (a, w) in average.weights.iter_mut().zip(&params.weights) {
                    *a += (w - *a) * t;
                }
                for (a, b) in average.biases.iter_mut().zip(&params.biases) {
                    *a += (b - *a) * t;
                }
            }
        }
        let current = if averaged > 0 { &average } else { &params };
        log.push(svm_objective(current, xs, ys, l2));
    }

    Ok(LinearModel {
        kind: ClassifierKind::Svm,
        params: if averaged > 0 { average } else { params },
        l2,
        training_log: log,
        seed: config.seed,
    })
}

pub fn train(
    kind: ClassifierKind,
    xs: &[Vec<f64>],
    ys: &[usize],
    num_classes: usize,
    config: &TrainConfig,
) -> Result<LinearModel> {
    match kind {
        ClassifierKind::LogReg => train_logreg(xs, ys, num_classes, config),
        ClassifierKind::Svm => train_svm(xs, ys, num_classes, config),
    }
}

const MAGIC: &[u8; 4] = b"CWLM";
const FORMAT_VERSION: u32 = 1;

impl LinearModel {
    pub fn from_params(kind: ClassifierKind, params: LinearParams) -> Self {
        LinearModel {
            kind,
            params,
            l2: 0.0,
            training_log: Vec::new(),
            seed: 0,
        }
    }

    pub fn num_classes(&self) -> usize {
        self.params.num_classes
    }

    pub fn num_features(&self) -> usize {
        self.params.num_features
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        if x.len() != self.num_features() {
            return Err(Error::InvalidInput(format!(
                "vector has {} features, model expects {}",
                x.len(),
                self.num_features()
            )));
        }
        let margins = self.params.scores(x);
        let label = argmax(&margins);
        let scores = match self.kind {
            ClassifierKind::LogReg => softmax(&margins),
            ClassifierKind::Svm => margins,
        };
        Ok(Prediction { label, scores })
    }

    /// Writes `CWLM`, version (u32), kind (u8), N (u64), F (u64), then
    /// row-major `W` and `b` as little-endian `f64`.
    pub fn write_to<W: Write>(&self, out: &mut W) -> std::io::Result<()> {
        out.write_all(MAGIC)?;
        out.write_all(&FORMAT_VERSION.to_le_bytes())?;
        out.write_all(&[self.kind.code()])?;
        out.write_all(&(self.num_classes() as u64).to_le_bytes())?;
        out.write_all(&(self.num_features() as u64).to_le_bytes())?;
        for v in self.params.weights.iter().chain(&self.params.biases) {
            out.write_all(&v.to_le_bytes())?;
        }
        Ok(())
    }

    pub fn read_from<R: Read>(input: &mut R) -> Result<LinearModel> {
        let io = |e: std::io::Error| Error::ModelFile(format!("truncated model file: {e}"));
        let mut magic = [0u8; 4];
        input.read_exact(&mut magic).map_err(io)?;
        if &magic != MAGIC {
            return Err(Error::ModelFile("bad magic bytes".into()));
        }
        let mut u32buf = [0u8; 4];
        input.read_exact(&mut u32buf).map_err(io)?;
        let version = u32::from_le_bytes(u32buf);
        if version != FORMAT_VERSION {
            return Err(Error::ModelFile(format!(
                "unsupported format version {version}"
            )));
        }
        let mut kind = [0u8; 1];
        input.read_exact(&mut kind).map_err(io)?;
        let kind = match kind[0] {
            0 => ClassifierKind::LogReg,
            1 => ClassifierKind::Svm,
            other => return Err(Error::ModelFile(format!("unknown model kind {other}"))),
        };
        let mut u64buf = [0u8; 8];
        input.read_exact(&mut u64buf).map_err(io)?;
        let n = u64::from_le_bytes(u64buf) as usize;
        input.read_exact(&mut u64buf).map_err(io)?;
        let f = u64::from_le_bytes(u64buf) as usize;
        let count = n
            .checked_mul(f)
            .and_then(|c| c.checked_add(n))
            .ok_or_else(|| Error::ModelFile("model dimensions overflow".into()))?;
        let mut values = Vec::with_capacity(count.min(1 << 24));
        for _ in 0..count {
            input.read_exact(&mut u64buf).map_err(io)?;
            values.push(f64::from_le_bytes(u64buf));
        }
        let biases = values.split_off(n * f);
        Ok(LinearModel::from_params(
            kind,
            LinearParams {
                num_classes: n,
                num_features: f,
                weights: values,
                biases,
            },
        ))
    }
}
