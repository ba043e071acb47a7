//! Multilayer perceptron: ReLU hidden layers, one sigmoid output unit,
//! cross-entropy loss with an L2 penalty, trained by mini-batch Adam.

use ndarray::{s, Array1, Array2, ArrayView2, Axis, Zip};
use serde::{Deserialize, Serialize};

use super::logistic::{log_loss, sigmoid};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct MlpParams {
    pub hidden: Vec<usize>,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    /// L2 penalty, scaled by 1/batch_rows like the data term.
    pub alpha: f64,
    pub batch_size: usize,
    pub epochs: usize,
}

impl Default for MlpParams {
    fn default() -> Self {
        Self {
            hidden: vec![512, 256],
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            alpha: 1e-4,
            batch_size: 200,
            epochs: 50,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    /// n_in × n_out
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpModel {
    pub layers: Vec<DenseLayer>,
}

/// Gradients with the same shapes as the model's layers.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpGradients {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug, Clone)]
pub struct MlpTrace {
    pub epochs: usize,
    /// Mean mini-batch loss per epoch.
    pub epoch_losses: Vec<f64>,
}

impl MlpModel {
    /// Uniform weights in ±1/sqrt(fan_in); zero biases.
    pub fn init(n_in: usize, hidden: &[usize], rng: &mut SeededRng) -> Self {
        let mut sizes = vec![n_in];
        sizes.extend_from_slice(hidden);
        sizes.push(1);
        let layers = sizes
            .windows(2)
            .map(|w| {
                let bound = 1.0 / (w[0] as f64).sqrt();
                DenseLayer {
                    weights: Array2::from_shape_simple_fn((w[0], w[1]), || {
                        rng.uniform_range(-bound, bound)
                    }),
                    bias: Array1::zeros(w[1]),
                }
            })
            .collect();
        Self { layers }
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].weights.nrows()
    }

    pub fn n_parameters(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum()
    }

    /// Output logits, one per row.
    pub fn logits(&self, x: ArrayView2<'_, f64>) -> Array1<f64> {
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            a = a.dot(&layer.weights) + &layer.bias;
            if i < last {
                a.mapv_inplace(|v| v.max(0.0));
            }
        }
        a.column(0).to_owned()
    }

    pub fn probabilities(&self, x: ArrayView2<'_, f64>) -> Vec<f64> {
        self.logits(x).iter().map(|&z| sigmoid(z)).collect()
    }

    /// Mean cross-entropy over the batch plus `alpha / (2 n) * Σ‖W‖²`, and
    /// its gradient by backpropagation.
    pub fn loss_and_gradient(
        &self,
        x: ArrayView2<'_, f64>,
        y: &[f64],
        alpha: f64,
    ) -> (f64, MlpGradients) {
        let n = x.nrows() as f64;
        let last = self.layers.len() - 1;
        // activations[i] is the input to layer i
        let mut activations: Vec<Array2<f64>> = Vec::with_capacity(self.layers.len() + 1);
        activations.push(x.to_owned());
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = activations[i].dot(&layer.weights) + &layer.bias;
            if i < last {
                z.mapv_inplace(|v| v.max(0.0));
            }
            activations.push(z);
        }
        let logits = activations[self.layers.len()].column(0).to_owned();

        let mut loss = logits
            .iter()
            .zip(y)
            .map(|(&z, &t)| log_loss(z, t))
            .sum::<f64>()
            / n;
        let penalty: f64 = self
            .layers
            .iter()
            .map(|l| l.weights.iter().map(|w| w * w).sum::<f64>())
            .sum();
        loss += alpha / (2.0 * n) * penalty;

        let mut delta = Array2::from_shape_fn((x.nrows(), 1), |(r, _)| (sigmoid(logits[r]) - y[r]) / n);
        let mut grads: Vec<DenseLayer> = Vec::with_capacity(self.layers.len());
        for i in (0..self.layers.len()).rev() {
            let layer = &self.layers[i];
            let input = &activations[i];
            let gw = input.t().dot(&delta) + &(&layer.weights * (alpha / n));
            let gb = delta.sum_axis(Axis(0));
            if i > 0 {
                let mut next = delta.dot(&layer.weights.t());
                // ReLU derivative; activations[i] is post-ReLU of layer i-1
                Zip::from(&mut next).and(input).for_each(|d, &a| {
                    if a <= 0.0 {
                        *d = 0.0;
                    }
                });
                delta = next;
            }
            grads.push(DenseLayer {
                weights: gw,
                bias: gb,
            });
        }
        grads.reverse();
        (loss, MlpGradients { layers: grads })
    }
}

struct Adam {
    m: Vec<DenseLayer>,
    v: Vec<DenseLayer>,
    t: i32,
}

impl Adam {
    fn new(model: &MlpModel) -> Self {
        let zeros = |m: &MlpModel| {
            m.layers
                .iter()
                .map(|l| DenseLayer {
                    weights: Array2::zeros(l.weights.raw_dim()),
                    bias: Array1::zeros(l.bias.raw_dim()),
                })
                .collect::<Vec<_>>()
        };
        Self {
            m: zeros(model),
            v: zeros(model),
            t: 0,
        }
    }

    fn step(&mut self, model: &mut MlpModel, grads: &MlpGradients, p: &MlpParams) {
        self.t += 1;
        let lr = p.learning_rate * (1.0 - p.beta2.powi(self.t)).sqrt() / (1.0 - p.beta1.powi(self.t));
        for (((layer, g), m), v) in model
            .layers
            .iter_mut()
            .zip(&grads.layers)
            .zip(&mut self.m)
            .zip(&mut self.v)
        {
            Zip::from(&mut layer.weights)
                .and(&g.weights)
                .and(&mut m.weights)
                .and(&mut v.weights)
                .for_each(|w, &g, m, v| {
                    *m = p.beta1 * *m + (1.0 - p.beta1) * g;
                    *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
                    *w -= lr * *m / (v.sqrt() + p.epsilon);
                });
            Zip::from(&mut layer.bias)
                .and(&g.bias)
                .and(&mut m.bias)
                .and(&mut v.bias)
                .for_each(|w, &g, m, v| {
                    *m = p.beta1 * *m + (1.0 - p.beta1) * g;
                    *v = p.beta2 * *v + (1.0 - p.beta2) * g * g;
                    *w -= lr * *m / (v.sqrt() + p.epsilon);
                });
        }
    }
}

/// Trains for `params.epochs` passes over shuffled mini-batches. Returns
/// `None` if the loss becomes non-finite.
pub fn fit_mlp(
    x: ArrayView2<'_, f64>,
    y: &[u8],
    params: &MlpParams,
    seed: u64,
) -> Option<(MlpModel, MlpTrace)> {
    let mut rng = SeededRng::new(seed);
    let mut model = MlpModel::init(x.ncols(), &params.hidden, &mut rng);
    let mut adam = Adam::new(&model);
    let n = x.nrows();
    let batch = params.batch_size.clamp(1, n.max(1));
    let mut order: Vec<usize> = (0..n).collect();
    let mut epoch_losses = Vec::with_capacity(params.epochs);
    let mut xb = Array2::<f64>::zeros((batch, x.ncols()));
    let mut yb = vec![0.0; batch];

    for _ in 0..params.epochs {
        rng.shuffle(&mut order);
        let mut total = 0.0;
        for chunk in order.chunks(batch) {
            let rows = chunk.len();
            for (r, &idx) in chunk.iter().enumerate() {
                xb.row_mut(r).assign(&x.row(idx));
                yb[r] = y[idx] as f64;
            }
            let view = xb.slice(s![..rows, ..]);
            let (loss, grads) = model.loss_and_gradient(view, &yb[..rows], params.alpha);
            if !loss.is_finite() {
                return None;
            }
            total += loss * rows as f64;
            adam.step(&mut model, &grads, params);
        }
        epoch_losses.push(total / n as f64);
    }
    Some((
        model,
        MlpTrace {
            epochs: params.epochs,
            epoch_losses,
        },
    ))
}
