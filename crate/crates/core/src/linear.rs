//! Class-weighted linear classifiers trained by gradient descent.
//!
//! Three kinds share one parameter shape (a C×d weight matrix plus a length-C
//! bias) and differ in loss and optimizer:
//!
//! - `logistic`: multinomial softmax cross-entropy, full-batch gradient descent
//! - `linear-svm`: one-vs-rest hinge loss, full-batch gradient descent
//! - `sgd`: one-vs-rest hinge loss, per-sample updates in seeded-shuffled
//!   order with the inverse-scaling schedule eta_t = lr / (1 + lr * l2 * t)
//!
//! Both losses support per-class weights; `balanced` weighting gives every
//! class the same total pull on the objective regardless of its sample count.
//! Weights start at zero (the objectives are convex), so full-batch training
//! is deterministic and the SGD kind is deterministic given its seed.

use std::fs;
use std::path::Path;

use ndarray::{Array1, Array2, Axis};
use rand::seq::SliceRandom;

use crate::data::{class_counts, ClassDistribution, Dataset};
use crate::error::{Error, Result};
use crate::kv::{fmt_f64_list, parse_f64_list, parse_usize, KvFile};
use crate::rng::substream;

/// Per-class positive weights applied to each sample's loss term via its
/// true class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassWeights(Vec<f64>);

impl ClassWeights {
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() || w.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::Config("class weights must be finite and positive".into()));
        }
        Ok(Self(w))
    }

    pub fn uniform(c: usize) -> Self {
        Self(vec![1.0; c])
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

/// w_c = M / (C * M_c): every class contributes equal total weight,
/// so sum_c w_c * M_c = M.
pub fn balanced_class_weights(dist: &ClassDistribution) -> Result<ClassWeights> {
    let c = dist.n_classes();
    let m = dist.total() as f64;
    let w = dist
        .counts()
        .iter()
        .map(|&n| {
            if n == 0 {
                Err(Error::Data("balanced weights need every class count >= 1".into()))
            } else {
                Ok(m / (c as f64 * n as f64))
            }
        })
        .collect::<Result<Vec<f64>>>()?;
    ClassWeights::new(w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LinearKind {
    Logistic,
    LinearSvm,
    Sgd,
}

impl LinearKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LinearKind::Logistic => "logistic",
            LinearKind::LinearSvm => "linear-svm",
            LinearKind::Sgd => "sgd",
        }
    }

    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "logistic" => Ok(LinearKind::Logistic),
            "linear-svm" => Ok(LinearKind::LinearSvm),
            "sgd" => Ok(LinearKind::Sgd),
            other => Err(Error::Config(format!("unknown linear model kind '{other}'"))),
        }
    }

    fn loss_kind(&self) -> LossKind {
        match self {
            LinearKind::Logistic => LossKind::SoftmaxCrossEntropy,
            LinearKind::LinearSvm | LinearKind::Sgd => LossKind::Hinge,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    SoftmaxCrossEntropy,
    Hinge,
}

impl LossKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            LossKind::SoftmaxCrossEntropy => "softmax-cross-entropy",
            LossKind::Hinge => "hinge",
        }
    }

    pub fn from_str(s: &str) -> Result<Self> {
        match s {
            "softmax-cross-entropy" => Ok(LossKind::SoftmaxCrossEntropy),
            "hinge" => Ok(LossKind::Hinge),
            other => Err(Error::Config(format!("unknown loss kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClassWeighting {
    None,
    Balanced,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    pub l2: f64,
    pub seed: u64,
    pub class_weighting: ClassWeighting,
    /// Early stop when the epoch-to-epoch loss change falls below this.
    pub tolerance: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.1,
            epochs: 500,
            l2: 1e-4,
            seed: 0,
            class_weighting: ClassWeighting::Balanced,
            tolerance: 1e-8,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.epochs == 0 {
            return Err(Error::Config("epochs must be >= 1".into()));
        }
        if self.l2 < 0.0 || !self.l2.is_finite() {
            return Err(Error::Config("l2 must be >= 0".into()));
        }
        if self.tolerance < 0.0 || !self.tolerance.is_finite() {
            return Err(Error::Config("tolerance must be >= 0".into()));
        }
        Ok(())
    }
}

/// Linear decision function score(x) = Wx + b.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearModel {
    kind: LinearKind,
    loss_kind: LossKind,
    w: Array2<f64>,
    b: Array1<f64>,
    class_names: Vec<String>,
}

impl LinearModel {
    /// Construct from explicit parameters (used by deserialization and by
    /// gradient checks); `w` is C×d, `b` length C.
    pub fn with_params(
        kind: LinearKind,
        w: Array2<f64>,
        b: Array1<f64>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if w.nrows() != class_names.len() || b.len() != class_names.len() {
            return Err(Error::Data("parameter dimensions do not match class count".into()));
        }
        if class_names.len() < 2 {
            return Err(Error::Data("fewer than 2 classes".into()));
        }
        if w.iter().chain(b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("model parameters are not finite".into()));
        }
        Ok(Self {
            kind,
            loss_kind: kind.loss_kind(),
            w,
            b,
            class_names,
        })
    }

    pub fn zeros(kind: LinearKind, class_names: Vec<String>, d: usize) -> Result<Self> {
        let c = class_names.len();
        Self::with_params(kind, Array2::zeros((c, d)), Array1::zeros(c), class_names)
    }

    pub fn kind(&self) -> LinearKind {
        self.kind
    }

    pub fn loss_kind(&self) -> LossKind {
        self.loss_kind
    }

    pub fn weights(&self) -> &Array2<f64> {
        &self.w
    }

    pub fn bias(&self) -> &Array1<f64> {
        &self.b
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn n_features(&self) -> usize {
        self.w.ncols()
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    /// Hinge-trained models have no native probability estimates.
    pub fn has_native_proba(&self) -> bool {
        self.loss_kind == LossKind::SoftmaxCrossEntropy
    }

    /// Raw scores Wx + b, one row per sample.
    pub fn decision_scores(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.n_features() {
            return Err(Error::Data(format!(
                "feature width {} does not match model width {}",
                x.ncols(),
                self.n_features()
            )));
        }
        Ok(x.dot(&self.w.t()) + &self.b)
    }

    /// Softmax of the decision scores; rows sum to 1.
    pub fn predict_proba(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        let mut z = self.decision_scores(x)?;
        for mut row in z.rows_mut() {
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let mut sum = 0.0;
            for v in row.iter_mut() {
                *v = (*v - max).exp();
                sum += *v;
            }
            for v in row.iter_mut() {
                *v /= sum;
            }
        }
        Ok(z)
    }

    /// Argmax of the decision scores, ties to the lower class index.
    pub fn predict(&self, x: &Array2<f64>) -> Result<Vec<usize>> {
        Ok(argmax_rows(&self.decision_scores(x)?))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn to_text(&self) -> String {
        format!(
            "format = linear-model/v1\nkind = {}\nloss = {}\nclasses = {}\nfeatures = {}\nclass_names = {}\nw = {}\nb = {}\n",
            self.kind.as_str(),
            self.loss_kind.as_str(),
            self.n_classes(),
            self.n_features(),
            self.class_names.join(","),
            fmt_f64_list(self.w.iter().cloned()),
            fmt_f64_list(self.b.iter().cloned()),
        )
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Data(format!("cannot open '{}': {e}", path.display())))?;
        Self::from_text(&text)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let kv = KvFile::parse(text)?;
        let format = kv.require("format")?;
        if format != "linear-model/v1" {
            return Err(Error::Config(format!("unexpected model format '{format}'")));
        }
        let kind = LinearKind::from_str(kv.require("kind")?)?;
        let loss = LossKind::from_str(kv.require("loss")?)?;
        let c = parse_usize(kv.require("classes")?)?;
        let d = parse_usize(kv.require("features")?)?;
        let class_names: Vec<String> = kv
            .require("class_names")?
            .split(',')
            .map(str::to_string)
            .collect();
        if class_names.len() != c {
            return Err(Error::Config("class_names length does not match classes".into()));
        }
        let w_flat = parse_f64_list(kv.require("w")?)?;
        let b_flat = parse_f64_list(kv.require("b")?)?;
        if w_flat.len() != c * d || b_flat.len() != c {
            return Err(Error::Config("parameter lengths do not match declared shape".into()));
        }
        let w = Array2::from_shape_vec((c, d), w_flat).expect("length checked");
        let model = Self::with_params(kind, w, Array1::from_vec(b_flat), class_names)?;
        if model.loss_kind != loss {
            return Err(Error::Config("loss does not match kind".into()));
        }
        Ok(model)
    }
}

pub(crate) fn argmax_rows(scores: &Array2<f64>) -> Vec<usize> {
    scores
        .rows()
        .into_iter()
        .map(|row| {
            let mut best = 0;
            for (j, &v) in row.iter().enumerate() {
                if v > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Weighted loss and exact (sub)gradient at the model's current parameters.
///
/// Logistic: (1/M) sum_i w_{y_i} * CE(softmax(Wx_i + b), y_i) + (l2/2)*||W||^2.
/// Hinge: (1/M) sum_i w_{y_i} * sum_c max(0, 1 - s_ic * z_ic) with s_ic = +1
/// for the true class and -1 otherwise, same regularizer. The bias is not
/// regularized.
pub fn loss_and_gradient(
    model: &LinearModel,
    ds: &Dataset,
    weights: &ClassWeights,
    l2: f64,
) -> Result<(f64, Array2<f64>, Array1<f64>)> {
    let c = model.n_classes();
    if ds.n_classes() != c || weights.values().len() != c {
        return Err(Error::Data("class count mismatch".into()));
    }
    if ds.n_features() != model.n_features() {
        return Err(Error::Data("feature width mismatch".into()));
    }
    let m = ds.n_samples();
    let m_f = m as f64;
    let x = ds.features();
    let z = model.decision_scores(x)?;
    let mut dz = Array2::<f64>::zeros((m, c));
    let mut data_loss = 0.0;

    match model.loss_kind {
        LossKind::SoftmaxCrossEntropy => {
            for i in 0..m {
                let y = ds.labels()[i];
                let wy = weights.values()[y];
                let row = z.row(i);
                let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                let sum_exp: f64 = row.iter().map(|&v| (v - max).exp()).sum();
                let lse = max + sum_exp.ln();
                data_loss += wy * (lse - row[y]);
                for j in 0..c {
                    let p = (row[j] - lse).exp();
                    let indicator = if j == y { 1.0 } else { 0.0 };
                    dz[[i, j]] = wy * (p - indicator) / m_f;
                }
            }
        }
        LossKind::Hinge => {
            for i in 0..m {
                let y = ds.labels()[i];
                let wy = weights.values()[y];
                let row = z.row(i);
                for j in 0..c {
                    let s = if j == y { 1.0 } else { -1.0 };
                    let margin = 1.0 - s * row[j];
                    if margin > 0.0 {
                        data_loss += wy * margin;
                        dz[[i, j]] = -s * wy / m_f;
                    }
                }
            }
        }
    }

    let reg: f64 = 0.5 * l2 * model.w.iter().map(|v| v * v).sum::<f64>();
    let loss = data_loss / m_f + reg;
    let grad_w = dz.t().dot(x) + &(l2 * &model.w);
    let grad_b = dz.sum_axis(Axis(0));
    Ok((loss, grad_w, grad_b))
}

fn resolve_weights(train: &Dataset, cfg: &TrainConfig) -> Result<ClassWeights> {
    match cfg.class_weighting {
        ClassWeighting::None => Ok(ClassWeights::uniform(train.n_classes())),
        ClassWeighting::Balanced => balanced_class_weights(&class_counts(train)),
    }
}

/// Train a linear model of the given kind. Deterministic given (train, cfg).
pub fn fit(kind: LinearKind, train: &Dataset, cfg: &TrainConfig) -> Result<LinearModel> {
    cfg.validate()?;
    let populated = class_counts(train).counts().iter().filter(|&&n| n > 0).count();
    if populated < 2 {
        return Err(Error::Data("fewer than 2 classes in training data".into()));
    }
    let weights = resolve_weights(train, cfg)?;
    let mut model = LinearModel::zeros(kind, train.class_names().to_vec(), train.n_features())?;
    match kind {
        LinearKind::Logistic | LinearKind::LinearSvm => fit_batch(&mut model, train, &weights, cfg)?,
        LinearKind::Sgd => fit_sgd(&mut model, train, &weights, cfg)?,
    }
    if model.w.iter().chain(model.b.iter()).any(|v| !v.is_finite()) {
        return Err(Error::Numeric(
            "training produced non-finite parameters (try a lower learning rate)".into(),
        ));
    }
    Ok(model)
}

fn fit_batch(
    model: &mut LinearModel,
    train: &Dataset,
    weights: &ClassWeights,
    cfg: &TrainConfig,
) -> Result<()> {
    let mut prev_loss = f64::INFINITY;
    for _ in 0..cfg.epochs {
        let (loss, grad_w, grad_b) = loss_and_gradient(model, train, weights, cfg.l2)?;
        if !loss.is_finite() {
            return Err(Error::Numeric(
                "loss became non-finite during training (divergent learning rate)".into(),
            ));
        }
        model.w.scaled_add(-cfg.learning_rate, &grad_w);
        model.b.scaled_add(-cfg.learning_rate, &grad_b);
        if (prev_loss - loss).abs() < cfg.tolerance {
            break;
        }
        prev_loss = loss;
    }
    Ok(())
}

fn fit_sgd(
    model: &mut LinearModel,
    train: &Dataset,
    weights: &ClassWeights,
    cfg: &TrainConfig,
) -> Result<()> {
    let m = train.n_samples();
    let c = model.n_classes();
    let x = train.features();
    let mut order: Vec<usize> = (0..m).collect();
    let mut t: u64 = 0;
    let mut z = vec![0.0; c];
    for epoch in 0..cfg.epochs {
        order.shuffle(&mut substream(cfg.seed, epoch as u64));
        for &i in &order {
            let eta = cfg.learning_rate / (1.0 + cfg.learning_rate * cfg.l2 * t as f64);
            let xi = x.row(i);
            let y = train.labels()[i];
            let wy = weights.values()[y];
            for (j, zj) in z.iter_mut().enumerate() {
                *zj = model.w.row(j).dot(&xi) + model.b[j];
            }
            for j in 0..c {
                let s = if j == y { 1.0 } else { -1.0 };
                let active = 1.0 - s * z[j] > 0.0;
                let coef = if active { -s * wy } else { 0.0 };
                let mut w_row = model.w.row_mut(j);
                if cfg.l2 > 0.0 {
                    w_row.zip_mut_with(&xi, |wv, &xv| *wv -= eta * (coef * xv + cfg.l2 * *wv));
                } else if active {
                    w_row.zip_mut_with(&xi, |wv, &xv| *wv -= eta * coef * xv);
                }
                if active {
                    model.b[j] -= eta * coef;
                }
            }
            t += 1;
        }
        if model.w.iter().chain(model.b.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric(
                "parameters became non-finite during training (divergent learning rate)".into(),
            ));
        }
    }
    Ok(())
}
