//! Soft-margin SVM with a polynomial kernel, trained by sequential minimal
//! optimization on the dual.
//!
//! Working pairs are chosen with second-order information (maximal violating
//! `i`, then the `j` giving the largest objective decrease), and iteration
//! stops when the maximal KKT gap `m(α) - M(α)` falls below `tol`. Kernel
//! rows are cached up to a memory budget.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

const TAU: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gamma {
    /// `1 / (n_features * var(X))`, with var over every entry of X.
    Scale,
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmParams {
    pub c: f64,
    pub degree: i32,
    pub coef0: f64,
    pub gamma: Gamma,
    pub tol: f64,
    pub max_iter: usize,
    pub cache_mb: usize,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            c: 1.0,
            degree: 6,
            coef0: 0.0,
            gamma: Gamma::Scale,
            tol: 1e-3,
            max_iter: 10_000_000,
            cache_mb: 256,
        }
    }
}

/// `K(u, v) = (γ u·v + r)^degree`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolynomialKernel {
    pub gamma: f64,
    pub coef0: f64,
    pub degree: i32,
}

impl PolynomialKernel {
    pub fn eval(&self, u: ArrayView1<'_, f64>, v: ArrayView1<'_, f64>) -> f64 {
        (self.gamma * u.dot(&v) + self.coef0).powi(self.degree)
    }
}

pub fn resolve_gamma(gamma: Gamma, x: ArrayView2<'_, f64>) -> f64 {
    match gamma {
        Gamma::Value(g) => g,
        Gamma::Scale => {
            let n = x.len() as f64;
            let mean = x.sum() / n;
            let var = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n;
            if var > 0.0 {
                1.0 / (x.ncols() as f64 * var)
            } else {
                1.0
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: PolynomialKernel,
    /// n_sv × n_features
    pub support_vectors: Array2<f64>,
    /// `α_i y_i` per support vector.
    pub dual_coef: Array1<f64>,
    pub bias: f64,
}

impl SvmModel {
    /// Signed margin `Σ α_i y_i K(x_i, x) + b`.
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        self.support_vectors
            .rows()
            .into_iter()
            .zip(self.dual_coef.iter())
            .map(|(sv, &coef)| coef * self.kernel.eval(sv, x))
            .sum::<f64>()
            + self.bias
    }
}

/// Full dual solution over the training set.
#[derive(Debug, Clone)]
pub struct SmoSolution {
    pub alpha: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Final `m(α) - M(α)`.
    pub gap: f64,
}

struct KernelCache<'a> {
    x: ArrayView2<'a, f64>,
    y: &'a [f64],
    kernel: PolynomialKernel,
    rows: Vec<Option<(Vec<f64>, u64)>>,
    resident: usize,
    capacity: usize,
    clock: u64,
}

impl<'a> KernelCache<'a> {
    fn new(x: ArrayView2<'a, f64>, y: &'a [f64], kernel: PolynomialKernel, cache_mb: usize) -> Self {
        let n = x.nrows();
        let row_bytes = (n * std::mem::size_of::<f64>()).max(1);
        let capacity = ((cache_mb * 1024 * 1024) / row_bytes).clamp(2, n.max(2));
        Self {
            x,
            y,
            kernel,
            rows: vec![None; n],
            resident: 0,
            capacity,
            clock: 0,
        }
    }

    /// Row `i` of `Q`, `Q_it = y_i y_t K(x_i, x_t)`.
    fn row(&mut self, i: usize) -> &[f64] {
        self.clock += 1;
        if self.rows[i].is_none() {
            if self.resident >= self.capacity {
                let victim = self
                    .rows
                    .iter()
                    .enumerate()
                    .filter_map(|(idx, r)| r.as_ref().map(|(_, t)| (idx, *t)))
                    .min_by_key(|&(_, t)| t)
                    .map(|(idx, _)| idx)
                    .expect("cache is non-empty");
                self.rows[victim] = None;
                self.resident -= 1;
            }
            let xi = self.x.row(i);
            let yi = self.y[i];
            let row = self
                .x
                .rows()
                .into_iter()
                .zip(self.y)
                .map(|(xt, &yt)| yi * yt * self.kernel.eval(xi, xt))
                .collect();
            self.rows[i] = Some((row, self.clock));
            self.resident += 1;
        }
        let entry = self.rows[i].as_mut().expect("just filled");
        entry.1 = self.clock;
        &entry.0
    }
}

/// Solves `min ½ αᵀQα - eᵀα` s.t. `yᵀα = 0`, `0 ≤ α ≤ C`; `y` is ±1.
pub fn solve_smo(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    kernel: PolynomialKernel,
    params: &SvmParams,
) -> SmoSolution {
    let n = x.nrows();
    let c = params.c;
    let diag: Vec<f64> = (0..n).map(|i| kernel.eval(x.row(i), x.row(i))).collect();
    let mut cache = KernelCache::new(x, y, kernel, params.cache_mb);
    let mut alpha = vec![0.0; n];
    let mut grad = vec![-1.0; n];
    let in_up = |a: f64, y: f64| (y > 0.0 && a < c) || (y < 0.0 && a > 0.0);
    let in_low = |a: f64, y: f64| (y > 0.0 && a > 0.0) || (y < 0.0 && a < c);

    let mut iterations = 0;
    let mut gap = f64::INFINITY;
    let mut converged = false;
    while iterations < params.max_iter {
        // i: maximal violator in I_up
        let mut gmax = f64::NEG_INFINITY;
        let mut i_sel = None;
        for t in 0..n {
            if in_up(alpha[t], y[t]) && -y[t] * grad[t] >= gmax {
                gmax = -y[t] * grad[t];
                i_sel = Some(t);
            }
        }
        let Some(i) = i_sel else {
            converged = true;
            gap = 0.0;
            break;
        };
        let q_i = cache.row(i).to_vec();
        // j: second-order selection within I_low
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j_sel = None;
        for t in 0..n {
            if !in_low(alpha[t], y[t]) {
                continue;
            }
            gmax2 = gmax2.max(y[t] * grad[t]);
            let b = gmax + y[t] * grad[t];
            if b > 0.0 {
                // K_ii + K_tt - 2 y_i y_t Q_it
                let a = diag[i] + diag[t] - 2.0 * y[i] * y[t] * q_i[t];
                let obj = -(b * b) / if a > 0.0 { a } else { TAU };
                if obj <= best {
                    best = obj;
                    j_sel = Some(t);
                }
            }
        }
        gap = gmax + gmax2;
        if gap < params.tol {
            converged = true;
            break;
        }
        let Some(j) = j_sel else {
            converged = true;
            break;
        };
        iterations += 1;
        let q_j = cache.row(j).to_vec();

        let (old_i, old_j) = (alpha[i], alpha[j]);
        if y[i] != y[j] {
            let quad = (diag[i] + diag[j] + 2.0 * q_i[j]).max(TAU);
            let delta = (-grad[i] - grad[j]) / quad;
            let diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if diff > 0.0 {
                if alpha[j] < 0.0 {
                    alpha[j] = 0.0;
                    alpha[i] = diff;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = -diff;
            }
            if diff > 0.0 {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = c - diff;
                }
            } else if alpha[j] > c {
                alpha[j] = c;
                alpha[i] = c + diff;
            }
        } else {
            let quad = (diag[i] + diag[j] - 2.0 * q_i[j]).max(TAU);
            let delta = (grad[i] - grad[j]) / quad;
            let sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if sum > c {
                if alpha[i] > c {
                    alpha[i] = c;
                    alpha[j] = sum - c;
                }
            } else if alpha[j] < 0.0 {
                alpha[j] = 0.0;
                alpha[i] = sum;
            }
            if sum > c {
                if alpha[j] > c {
                    alpha[j] = c;
                    alpha[i] = sum - c;
                }
            } else if alpha[i] < 0.0 {
                alpha[i] = 0.0;
                alpha[j] = sum;
            }
        }
        let (di, dj) = (alpha[i] - old_i, alpha[j] - old_j);
        for t in 0..n {
            grad[t] += q_i[t] * di + q_j[t] * dj;
        }
    }
    if !converged {
        log::warn!("SMO hit the iteration cap ({}) with KKT gap {gap:.3e}", params.max_iter);
    }

    // Bias from free vectors, else the midpoint of the feasible interval.
    let (mut ub, mut lb) = (f64::INFINITY, f64::NEG_INFINITY);
    let (mut free_sum, mut n_free) = (0.0, 0usize);
    for t in 0..n {
        let yg = y[t] * grad[t];
        if alpha[t] >= c {
            if y[t] < 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else if alpha[t] <= 0.0 {
            if y[t] > 0.0 { ub = ub.min(yg) } else { lb = lb.max(yg) }
        } else {
            n_free += 1;
            free_sum += yg;
        }
    }
    let rho = if n_free > 0 { free_sum / n_free as f64 } else { (ub + lb) / 2.0 };
    SmoSolution {
        alpha,
        bias: -rho,
        iterations,
        converged,
        gap,
    }
}

/// Largest per-sample KKT violation of a solution, measured on `y f(x) - 1`:
/// `α = 0` needs `y f ≥ 1`, `0 < α < C` needs `y f = 1`, `α = C` needs `y f ≤ 1`.
pub fn kkt_violation(
    x: ArrayView2<'_, f64>,
    y: &[f64],
    kernel: PolynomialKernel,
    c: f64,
    alpha: &[f64],
    bias: f64,
) -> f64 {
    let n = x.nrows();
    let mut worst: f64 = 0.0;
    for i in 0..n {
        let f: f64 = (0..n)
            .filter(|&j| alpha[j] > 0.0)
            .map(|j| alpha[j] * y[j] * kernel.eval(x.row(j), x.row(i)))
            .sum::<f64>()
            + bias;
        let margin = y[i] * f - 1.0;
        let v = if alpha[i] <= 0.0 {
            (-margin).max(0.0)
        } else if alpha[i] >= c {
            margin.max(0.0)
        } else {
            margin.abs()
        };
        worst = worst.max(v);
    }
    worst
}

pub fn fit_svm(x: ArrayView2<'_, f64>, labels: &[u8], params: &SvmParams) -> (SvmModel, SmoSolution) {
    let y: Vec<f64> = labels.iter().map(|&l| if l == 1 { 1.0 } else { -1.0 }).collect();
    let kernel = PolynomialKernel {
        gamma: resolve_gamma(params.gamma, x),
        coef0: params.coef0,
        degree: params.degree,
    };
    let solution = solve_smo(x, &y, kernel, params);
    let sv: Vec<usize> = (0..x.nrows()).filter(|&i| solution.alpha[i] > 0.0).collect();
    let support_vectors = x.select(ndarray::Axis(0), &sv);
    let dual_coef = sv.iter().map(|&i| solution.alpha[i] * y[i]).collect();
    (
        SvmModel {
            kernel,
            support_vectors,
            dual_coef,
            bias: solution.bias,
        },
        solution,
    )
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kernel_value() {
        let k = PolynomialKernel {
            gamma: 0.5,
            coef0: 1.0,
            degree: 2,
        };
        let u = Array1::from(vec![1.0, 2.0]);
        let v = Array1::from(vec![3.0, -1.0]);
        // (0.5 * 1 + 1)^2
        assert_eq!(k.eval(u.view(), v.view()), 2.25);
    }

    #[test]
    fn scale_gamma() {
        let x = Array2::from_shape_vec((2, 2), vec![0.0, 2.0, 2.0, 0.0]).unwrap();
        // mean 1, var 1
        assert_eq!(resolve_gamma(Gamma::Scale, x.view()), 0.5);
        assert_eq!(resolve_gamma(Gamma::Scale, Array2::zeros((2, 2)).view()), 1.0);
    }

    #[test]
    fn linear_two_points() {
        // With a linear kernel the maximum-margin separator of ±1 is 0.
        let x = Array2::from_shape_vec((2, 1), vec![-1.0, 1.0]).unwrap();
        let params = SvmParams {
            degree: 1,
            gamma: Gamma::Value(1.0),
            c: 10.0,
            ..SvmParams::default()
        };
        let (model, sol) = fit_svm(x.view(), &[0, 1], &params);
        assert!(sol.converged);
        assert!((sol.alpha[0] - 0.5).abs() < 1e-9);
        assert!((sol.alpha[1] - 0.5).abs() < 1e-9);
        assert!(model.bias.abs() < 1e-9);
        assert!((model.decision(Array1::from(vec![1.0]).view()) - 1.0).abs() < 1e-9);
    }

    #[test]
    fn small_cache_matches_full_cache() {
        let x = Array2::from_shape_fn((40, 2), |(r, c)| {
            let s = if r % 2 == 0 { 1.0 } else { 3.0 };
            s + ((r * 13 + c * 7) % 10) as f64 / 20.0
        });
        let labels: Vec<u8> = (0..40).map(|r| (r % 2) as u8).collect();
        let full = fit_svm(x.view(), &labels, &SvmParams::default()).1;
        let tiny = fit_svm(
            x.view(),
            &labels,
            &SvmParams {
                cache_mb: 0,
                ..SvmParams::default()
            },
        )
        .1;
        assert_eq!(full.alpha, tiny.alpha);
    }
}
