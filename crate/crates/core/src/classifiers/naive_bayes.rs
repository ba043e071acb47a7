//! Gaussian and Bernoulli naive Bayes for two classes.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GaussianNbParams {
    /// Added to every variance as a fraction of the largest feature variance.
    pub var_smoothing: f64,
}

impl Default for GaussianNbParams {
    fn default() -> Self {
        Self { var_smoothing: 1e-9 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BernoulliNbParams {
    /// Additive (Laplace) smoothing.
    pub alpha: f64,
    /// Features are 1 when strictly greater than this.
    pub binarize: f64,
}

impl Default for BernoulliNbParams {
    fn default() -> Self {
        Self {
            alpha: 1.0,
            binarize: 0.0,
        }
    }
}

fn class_rows(x: ArrayView2<'_, f64>, y: &[u8], class: u8) -> Array2<f64> {
    let idx: Vec<usize> = (0..y.len()).filter(|&i| y[i] == class).collect();
    x.select(Axis(0), &idx)
}

fn class_log_priors(y: &[u8]) -> [f64; 2] {
    let n = y.len() as f64;
    let pos = y.iter().filter(|&&v| v == 1).count() as f64;
    [((n - pos) / n).ln(), (pos / n).ln()]
}

/// `[P(0|x), P(1|x)]` from the two joint log-likelihoods.
fn normalise(joint: [f64; 2]) -> [f64; 2] {
    let m = joint[0].max(joint[1]);
    let lse = m + ((joint[0] - m).exp() + (joint[1] - m).exp()).ln();
    [(joint[0] - lse).exp(), (joint[1] - lse).exp()]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNbModel {
    /// Per class (rows 0 and 1), per feature.
    pub means: Array2<f64>,
    pub variances: Array2<f64>,
    pub log_priors: [f64; 2],
}

impl GaussianNbModel {
    /// Both classes must be present in `y`.
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &GaussianNbParams) -> Self {
        let d = x.ncols();
        let max_var = x
            .var_axis(Axis(0), 0.0)
            .iter()
            .fold(0.0f64, |m, &v| m.max(v));
        let eps = params.var_smoothing * max_var;
        let mut means = Array2::zeros((2, d));
        let mut variances = Array2::zeros((2, d));
        for class in 0..2u8 {
            let rows = class_rows(x, y, class);
            let mean = rows.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(d));
            let var = rows.var_axis(Axis(0), 0.0) + eps;
            means.row_mut(class as usize).assign(&mean);
            variances.row_mut(class as usize).assign(&var);
        }
        Self {
            means,
            variances,
            log_priors: class_log_priors(y),
        }
    }

    pub fn joint_log_likelihood(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        let mut out = self.log_priors;
        for (c, slot) in out.iter_mut().enumerate() {
            let mu = self.means.row(c);
            let var = self.variances.row(c);
            *slot += x
                .iter()
                .zip(mu.iter().zip(var.iter()))
                .map(|(&xi, (&m, &v))| {
                    -0.5 * (2.0 * std::f64::consts::PI * v).ln() - 0.5 * (xi - m).powi(2) / v
                })
                .sum::<f64>();
        }
        out
    }

    pub fn posteriors(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        normalise(self.joint_log_likelihood(x))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BernoulliNbModel {
    pub binarize: f64,
    /// log P(feature = 1 | class), rows are classes.
    pub log_p: Array2<f64>,
    /// log P(feature = 0 | class)
    pub log_q: Array2<f64>,
    pub log_priors: [f64; 2],
}

impl BernoulliNbModel {
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &BernoulliNbParams) -> Self {
        let d = x.ncols();
        let mut log_p = Array2::zeros((2, d));
        let mut log_q = Array2::zeros((2, d));
        for class in 0..2u8 {
            let rows = class_rows(x, y, class);
            let n = rows.nrows() as f64;
            for j in 0..d {
                let ones = rows.column(j).iter().filter(|&&v| v > params.binarize).count() as f64;
                let p = (ones + params.alpha) / (n + 2.0 * params.alpha);
                log_p[[class as usize, j]] = p.ln();
                log_q[[class as usize, j]] = (1.0 - p).ln();
            }
        }
        Self {
            binarize: params.binarize,
            log_p,
            log_q,
            log_priors: class_log_priors(y),
        }
    }

    pub fn joint_log_likelihood(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        let mut out = self.log_priors;
        for (c, slot) in out.iter_mut().enumerate() {
            *slot += x
                .iter()
                .enumerate()
                .map(|(j, &v)| {
                    if v > self.binarize {
                        self.log_p[[c, j]]
                    } else {
                        self.log_q[[c, j]]
                    }
                })
                .sum::<f64>();
        }
        out
    }

    pub fn posteriors(&self, x: ArrayView1<'_, f64>) -> [f64; 2] {
        normalise(self.joint_log_likelihood(x))
    }
}
