//! L2-regularized logistic regression by full-batch gradient descent.
//!
//! Objective: mean log-loss + (λ/2)·‖w‖² with λ = 1/(C·n); the intercept is
//! not penalized. Each step tries a Barzilai-Borwein step length and
//! backtracks until the Armijo condition holds, so the objective never
//! increases. Iteration stops once the largest gradient component is below
//! `tol`.

use ndarray::{Array1, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LogisticParams {
    /// Inverse regularization strength.
    pub c: f64,
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for LogisticParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            tol: 1e-4,
            max_iter: 2000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel {
    pub weights: Array1<f64>,
    pub bias: f64,
}

#[derive(Debug, Clone)]
pub struct LogisticTrace {
    pub iterations: usize,
    pub converged: bool,
    /// Objective value before each step and after the last.
    pub losses: Vec<f64>,
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^z) - y z`, stable for large |z|.
pub(crate) fn log_loss(z: f64, y: f64) -> f64 {
    z.max(0.0) - z * y + (-z.abs()).exp().ln_1p()
}

impl LogisticModel {
    pub fn zeros(dim: usize) -> Self {
        Self {
            weights: Array1::zeros(dim),
            bias: 0.0,
        }
    }

    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.weights.dot(&x) + self.bias
    }

    pub fn probability(&self, x: ArrayView1<'_, f64>) -> f64 {
        sigmoid(self.decision(x))
    }

    pub fn probabilities(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        let z = x.dot(&self.weights);
        z.iter().map(|&z| sigmoid(z + self.bias)).collect()
    }
}

struct Problem<'a> {
    x: ArrayView2<'a, f64>,
    y: Array1<f64>,
    lambda: f64,
}

impl Problem<'_> {
    fn objective(&self, w: &Array1<f64>, b: f64) -> f64 {
        let z = self.x.dot(w);
        let n = self.y.len() as f64;
        let data: f64 = z
            .iter()
            .zip(self.y.iter())
            .map(|(&z, &y)| log_loss(z + b, y))
            .sum::<f64>()
            / n;
        data + 0.5 * self.lambda * w.dot(w)
    }

    fn gradient(&self, w: &Array1<f64>, b: f64) -> (Array1<f64>, f64) {
        let n = self.y.len() as f64;
        let z = self.x.dot(w);
        let residual: Array1<f64> = z
            .iter()
            .zip(self.y.iter())
            .map(|(&z, &y)| sigmoid(z + b) - y)
            .collect();
        let gw = self.x.t().dot(&residual) / n + w * self.lambda;
        let gb = residual.sum() / n;
        (gw, gb)
    }
}

fn max_abs(g: &Array1<f64>, gb: f64) -> f64 {
    g.iter().fold(gb.abs(), |m, v| m.max(v.abs()))
}

pub fn fit_logistic(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    params: &LogisticParams,
) -> (LogisticModel, LogisticTrace) {
    let n = x.nrows();
    let problem = Problem {
        x,
        y: y.iter().map(|&v| v as f64).collect(),
        lambda: 1.0 / (params.c * n as f64),
    };
    let mut model = LogisticModel::zeros(x.ncols());
    let mut loss = problem.objective(&model.weights, model.bias);
    let (mut gw, mut gb) = problem.gradient(&model.weights, model.bias);
    let mut losses = vec![loss];
    let mut step = 1.0;
    let mut converged = max_abs(&gw, gb) <= params.tol;
    let mut iterations = 0;

    while !converged && iterations < params.max_iter {
        iterations += 1;
        let grad_sq = gw.dot(&gw) + gb * gb;
        let mut accepted = None;
        for _ in 0..60 {
            let w_new = &model.weights - &(&gw * step);
            let b_new = model.bias - step * gb;
            let loss_new = problem.objective(&w_new, b_new);
            if loss_new <= loss - 1e-4 * step * grad_sq {
                accepted = Some((w_new, b_new, loss_new));
                break;
            }
            step *= 0.5;
        }
        let Some((w_new, b_new, loss_new)) = accepted else {
            log::warn!("logistic regression line search stalled at iteration {iterations}");
            break;
        };
        let (gw_new, gb_new) = problem.gradient(&w_new, b_new);
        // Barzilai-Borwein length for the next trial step.
        let sw = &w_new - &model.weights;
        let sb = b_new - model.bias;
        let dw = &gw_new - &gw;
        let db = gb_new - gb;
        let ss = sw.dot(&sw) + sb * sb;
        let sy = sw.dot(&dw) + sb * db;
        step = if sy > 0.0 { (ss / sy).clamp(1e-12, 1e12) } else { step * 2.0 };

        model.weights = w_new;
        model.bias = b_new;
        loss = loss_new;
        gw = gw_new;
        gb = gb_new;
        losses.push(loss);
        converged = max_abs(&gw, gb) <= params.tol;
    }
    if !converged {
        log::warn!(
            "logistic regression stopped after {iterations} iterations with gradient {:.3e} > tol {:.1e}",
            max_abs(&gw, gb),
            params.tol
        );
    }
    (
        model,
        LogisticTrace {
            iterations,
            converged,
            losses,
        },
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SeededRng;
    use ndarray::Array2;

    fn blobs(n: usize, seed: u64) -> (Array2<f64>, Vec<u8>) {
        let mut rng = SeededRng::new(seed);
        let mut x = Array2::zeros((n, 2));
        let mut y = vec![0u8; n];
        for i in 0..n {
            let label = (i % 2) as u8;
            let center = if label == 1 { 2.0 } else { -2.0 };
            x[[i, 0]] = center + 0.5 * rng.normal();
            x[[i, 1]] = center + 0.5 * rng.normal();
            y[i] = label;
        }
        (x, y)
    }

    #[test]
    fn zero_model_scores_half() {
        let m = LogisticModel::zeros(3);
        assert_eq!(m.probability(Array1::from(vec![5.0, -1.0, 2.0]).view()), 0.5);
    }

    #[test]
    fn loss_never_increases() {
        let (x, y) = blobs(200, 1);
        let (_, trace) = fit_logistic(x.view(), &y, &LogisticParams::default());
        assert!(trace.converged);
        for w in trace.losses.windows(2) {
            assert!(w[1] <= w[0], "{} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let (x, y) = blobs(50, 2);
        let problem = Problem {
            x: x.view(),
            y: y.iter().map(|&v| v as f64).collect(),
            lambda: 0.1,
        };
        let w = Array1::from(vec![0.3, -0.7]);
        let b = 0.2;
        let (gw, gb) = problem.gradient(&w, b);
        let h = 1e-6;
        for j in 0..2 {
            let mut wp = w.clone();
            wp[j] += h;
            let mut wm = w.clone();
            wm[j] -= h;
            let fd = (problem.objective(&wp, b) - problem.objective(&wm, b)) / (2.0 * h);
            assert!((fd - gw[j]).abs() < 1e-7, "{fd} vs {}", gw[j]);
        }
        let fd = (problem.objective(&w, b + h) - problem.objective(&w, b - h)) / (2.0 * h);
        assert!((fd - gb).abs() < 1e-7);
    }

    #[test]
    fn stable_loss_at_extremes() {
        assert!((log_loss(800.0, 1.0)).abs() < 1e-12);
        assert!((log_loss(-800.0, 1.0) - 800.0).abs() < 1e-9);
        assert_eq!(sigmoid(-800.0), 0.0);
        assert_eq!(sigmoid(800.0), 1.0);
    }
}
