//! The six classifiers behind one training entry point and a common scoring
//! interface. Every score is "higher means more seizure-like": a probability
//! for LR, MLP, GNB, BNB, the positive-neighbour fraction for KNN and the
//! signed margin for SVM.

pub mod knn;
pub mod logistic;
pub mod mlp;
pub mod naive_bayes;
pub mod svm;

use std::fmt;
use std::str::FromStr;

use ndarray::{ArrayView1, ArrayView2, Axis};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::{derive_seed, SeededRng};
use crate::{Error, Result};
use knn::{KnnModel, KnnParams};
use logistic::{fit_logistic, LogisticModel, LogisticParams};
use mlp::{fit_mlp, MlpModel, MlpParams};
use naive_bayes::{BernoulliNbModel, BernoulliNbParams, GaussianNbModel, GaussianNbParams};
use svm::{fit_svm, SvmModel, SvmParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum ModelKind {
    Lr,
    Mlp,
    Svm,
    Knn,
    Gnb,
    Bnb,
}

impl ModelKind {
    pub const ALL: [ModelKind; 6] = [
        ModelKind::Lr,
        ModelKind::Mlp,
        ModelKind::Svm,
        ModelKind::Knn,
        ModelKind::Gnb,
        ModelKind::Bnb,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ModelKind::Lr => "LR",
            ModelKind::Mlp => "MLP",
            ModelKind::Svm => "SVM",
            ModelKind::Knn => "KNN",
            ModelKind::Gnb => "GNB",
            ModelKind::Bnb => "BNB",
        }
    }

    /// 0 for the SVM margin, 0.5 for every probability-like score.
    pub fn default_threshold(self) -> f64 {
        match self {
            ModelKind::Svm => 0.0,
            _ => 0.5,
        }
    }
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        ModelKind::ALL
            .into_iter()
            .find(|k| k.as_str().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::Config(format!("unknown model `{s}` (expected one of LR, MLP, SVM, KNN, GNB, BNB)")))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub kind: ModelKind,
    #[serde(default, with = "crate::model_file::u64_text")]
    pub seed: u64,
    #[serde(default)]
    pub lr: LogisticParams,
    #[serde(default)]
    pub mlp: MlpParams,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default)]
    pub knn: KnnParams,
    #[serde(default)]
    pub gnb: GaussianNbParams,
    #[serde(default)]
    pub bnb: BernoulliNbParams,
    /// Caps the SVM and KNN training set by dropping a seeded random subset
    /// of non-seizure rows. Seizure rows are always kept.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_train_rows: Option<usize>,
}

impl TrainConfig {
    pub fn new(kind: ModelKind, seed: u64) -> Self {
        Self {
            kind,
            seed,
            lr: LogisticParams::default(),
            mlp: MlpParams::default(),
            svm: SvmParams::default(),
            knn: KnnParams::default(),
            gnb: GaussianNbParams::default(),
            bnb: BernoulliNbParams::default(),
            max_train_rows: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be positive, got {v}")))
            }
        };
        let nonzero = |name: &str, v: usize| {
            if v > 0 {
                Ok(())
            } else {
                Err(Error::Config(format!("{name} must be at least 1")))
            }
        };
        match self.kind {
            ModelKind::Lr => {
                positive("lr.c", self.lr.c)?;
                positive("lr.tol", self.lr.tol)?;
                nonzero("lr.max_iter", self.lr.max_iter)?;
            }
            ModelKind::Mlp => {
                positive("mlp.learning_rate", self.mlp.learning_rate)?;
                positive("mlp.epsilon", self.mlp.epsilon)?;
                nonzero("mlp.batch_size", self.mlp.batch_size)?;
                nonzero("mlp.epochs", self.mlp.epochs)?;
                if self.mlp.hidden.is_empty() || self.mlp.hidden.contains(&0) {
                    return Err(Error::Config("mlp.hidden must list non-zero layer sizes".into()));
                }
                if self.mlp.alpha < 0.0 {
                    return Err(Error::Config("mlp.alpha must be non-negative".into()));
                }
                for (name, b) in [("mlp.beta1", self.mlp.beta1), ("mlp.beta2", self.mlp.beta2)] {
                    if !(0.0..1.0).contains(&b) {
                        return Err(Error::Config(format!("{name} must be in [0, 1)")));
                    }
                }
            }
            ModelKind::Svm => {
                positive("svm.c", self.svm.c)?;
                positive("svm.tol", self.svm.tol)?;
                nonzero("svm.max_iter", self.svm.max_iter)?;
                if self.svm.degree < 1 {
                    return Err(Error::Config("svm.degree must be at least 1".into()));
                }
                if let svm::Gamma::Value(g) = self.svm.gamma {
                    positive("svm.gamma", g)?;
                }
            }
            ModelKind::Knn => nonzero("knn.k", self.knn.k)?,
            ModelKind::Gnb => {
                if self.gnb.var_smoothing.is_nan() || self.gnb.var_smoothing < 0.0 {
                    return Err(Error::Config("gnb.var_smoothing must be non-negative".into()));
                }
            }
            ModelKind::Bnb => positive("bnb.alpha", self.bnb.alpha)?,
        }
        if let Some(cap) = self.max_train_rows {
            nonzero("max_train_rows", cap)?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "UPPERCASE")]
pub enum ModelParams {
    Lr(LogisticModel),
    Mlp(MlpModel),
    Svm(SvmModel),
    Knn(KnnModel),
    Gnb(GaussianNbModel),
    Bnb(BernoulliNbModel),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingMeta {
    pub config: TrainConfig,
    pub rows: usize,
    pub positives: usize,
    /// Non-seizure rows actually used after any subsampling.
    pub negatives_used: usize,
    pub negatives_available: usize,
    /// Optimizer iterations (LR steps, SMO pair updates, MLP epochs).
    pub iterations: usize,
    pub converged: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub input_dim: usize,
    pub meta: TrainingMeta,
    pub params: ModelParams,
}

/// Anything that maps feature rows to seizure scores.
pub trait Scorer: Sync {
    fn input_dim(&self) -> usize;

    fn score(&self, x: ArrayView1<'_, f64>) -> Result<f64>;

    /// Row-parallel; output order matches input order.
    fn score_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.input_dim() {
            return Err(Error::DimensionMismatch {
                what: "score input",
                expected: self.input_dim(),
                got: x.ncols(),
            });
        }
        x.axis_iter(Axis(0))
            .into_par_iter()
            .map(|row| self.score(row))
            .collect()
    }
}

/// `1` iff `score >= threshold`; a score exactly at the threshold is positive.
pub fn predict_label(score: f64, threshold: f64) -> u8 {
    u8::from(score >= threshold)
}

fn check_finite(x: ArrayView2<'_, f64>) -> Result<()> {
    match x.indexed_iter().find(|(_, v)| !v.is_finite()) {
        Some(((r, c), v)) => Err(Error::NonFinite(format!("training row {r}, column {c} ({v})"))),
        None => Ok(()),
    }
}

/// Rows to train on: all seizure rows plus, if `cap` bites, a seeded random
/// subset of the rest. Indices come back in ascending order.
fn subsample_rows(y: &[u8], cap: Option<usize>, seed: u64) -> Vec<usize> {
    let all: Vec<usize> = (0..y.len()).collect();
    let Some(cap) = cap else { return all };
    if y.len() <= cap {
        return all;
    }
    let (pos, mut neg): (Vec<usize>, Vec<usize>) = all.into_iter().partition(|&i| y[i] == 1);
    let keep = cap.saturating_sub(pos.len()).max(1).min(neg.len());
    SeededRng::new(derive_seed(seed, "negative-subsample")).shuffle(&mut neg);
    neg.truncate(keep);
    let mut rows: Vec<usize> = pos.into_iter().chain(neg).collect();
    rows.sort_unstable();
    rows
}

/// Fits `cfg.kind` on `x` (rows are samples) and binary labels `y`.
pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], cfg: &TrainConfig) -> Result<TrainedModel> {
    cfg.validate()?;
    if x.nrows() != y.len() {
        return Err(Error::DimensionMismatch {
            what: "training labels",
            expected: x.nrows(),
            got: y.len(),
        });
    }
    if x.nrows() < 2 {
        return Err(Error::Empty("training set needs at least two rows"));
    }
    if x.ncols() == 0 {
        return Err(Error::Empty("training set has no features"));
    }
    if let Some(bad) = y.iter().find(|&&v| v > 1) {
        return Err(Error::Config(format!("labels must be 0 or 1, found {bad}")));
    }
    let positives = y.iter().filter(|&&v| v == 1).count();
    if positives == 0 || positives == y.len() {
        return Err(Error::SingleClass);
    }
    check_finite(x)?;
    let negatives_available = y.len() - positives;

    let cap = matches!(cfg.kind, ModelKind::Svm | ModelKind::Knn)
        .then_some(cfg.max_train_rows)
        .flatten();
    let rows = subsample_rows(y, cap, cfg.seed);
    let (xs, ys);
    let (x, y) = if rows.len() < y.len() {
        xs = x.select(Axis(0), &rows);
        ys = rows.iter().map(|&i| y[i]).collect::<Vec<u8>>();
        (xs.view(), ys.as_slice())
    } else {
        (x, y)
    };

    let (params, iterations, converged, final_loss) = match cfg.kind {
        ModelKind::Lr => {
            let (m, trace) = fit_logistic(x, y, &cfg.lr);
            (ModelParams::Lr(m), trace.iterations, trace.converged, trace.losses.last().copied())
        }
        ModelKind::Mlp => {
            let (m, trace) = fit_mlp(x, y, &cfg.mlp, derive_seed(cfg.seed, "mlp")).ok_or_else(|| {
                Error::NotConverged {
                    model: "MLP",
                    detail: "training loss became non-finite".into(),
                }
            })?;
            (ModelParams::Mlp(m), trace.epochs, true, trace.epoch_losses.last().copied())
        }
        ModelKind::Svm => {
            let (m, sol) = fit_svm(x, y, &cfg.svm);
            (ModelParams::Svm(m), sol.iterations, sol.converged, None)
        }
        ModelKind::Knn => (ModelParams::Knn(KnnModel::fit(x, y, &cfg.knn)), 0, true, None),
        ModelKind::Gnb => (ModelParams::Gnb(GaussianNbModel::fit(x, y, &cfg.gnb)), 0, true, None),
        ModelKind::Bnb => (ModelParams::Bnb(BernoulliNbModel::fit(x, y, &cfg.bnb)), 0, true, None),
    };
    let model = TrainedModel {
        input_dim: x.ncols(),
        meta: TrainingMeta {
            config: cfg.clone(),
            rows: y.len(),
            positives,
            negatives_used: y.len() - positives,
            negatives_available,
            iterations,
            converged,
            final_loss,
        },
        params,
    };
    model.check_finite()?;
    Ok(model)
}

impl TrainedModel {
    pub fn kind(&self) -> ModelKind {
        self.meta.config.kind
    }

    pub fn default_threshold(&self) -> f64 {
        self.kind().default_threshold()
    }

    pub fn predict(&self, x: ArrayView1<'_, f64>, threshold: f64) -> Result<u8> {
        Ok(predict_label(self.score(x)?, threshold))
    }

    fn check_finite(&self) -> Result<()> {
        let ok = match &self.params {
            ModelParams::Lr(m) => m.weights.iter().chain([&m.bias]).all(|v| v.is_finite()),
            ModelParams::Mlp(m) => m
                .layers
                .iter()
                .all(|l| l.weights.iter().chain(l.bias.iter()).all(|v| v.is_finite())),
            ModelParams::Svm(m) => m.dual_coef.iter().chain([&m.bias]).all(|v| v.is_finite()),
            ModelParams::Knn(_) => true,
            ModelParams::Gnb(m) => m.means.iter().chain(m.variances.iter()).all(|v| v.is_finite()),
            ModelParams::Bnb(m) => m.log_p.iter().chain(m.log_q.iter()).all(|v| v.is_finite()),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("{} parameters", self.kind())))
        }
    }
}

impl Scorer for TrainedModel {
    fn input_dim(&self) -> usize {
        self.input_dim
    }

    fn score(&self, x: ArrayView1<'_, f64>) -> Result<f64> {
        if x.len() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "score input",
                expected: self.input_dim,
                got: x.len(),
            });
        }
        Ok(match &self.params {
            ModelParams::Lr(m) => m.probability(x),
            ModelParams::Mlp(m) => m.probabilities(x.insert_axis(Axis(0)))[0],
            ModelParams::Svm(m) => m.decision(x),
            ModelParams::Knn(m) => m.score(x),
            ModelParams::Gnb(m) => m.posteriors(x)[1],
            ModelParams::Bnb(m) => m.posteriors(x)[1],
        })
    }

    fn score_batch(&self, x: ArrayView2<'_, f64>) -> Result<Vec<f64>> {
        if x.ncols() != self.input_dim {
            return Err(Error::DimensionMismatch {
                what: "score input",
                expected: self.input_dim,
                got: x.ncols(),
            });
        }
        match &self.params {
            ModelParams::Lr(m) => Ok(m.probabilities(x)),
            ModelParams::Mlp(m) => Ok(m.probabilities(x)),
            _ => x
                .axis_iter(Axis(0))
                .into_par_iter()
                .map(|row| self.score(row))
                .collect(),
        }
    }
}
