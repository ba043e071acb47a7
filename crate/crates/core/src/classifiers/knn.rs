//! k-nearest-neighbours by brute-force Euclidean distance.

use ndarray::{Array2, ArrayView1, ArrayView2};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KnnParams {
    pub k: usize,
}

impl Default for KnnParams {
    fn default() -> Self {
        Self { k: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnnModel {
    pub k: usize,
    pub train_x: Array2<f64>,
    pub train_y: Vec<u8>,
}

impl KnnModel {
    /// `k` is capped at the number of training rows.
    pub fn fit(x: ArrayView2<'_, f64>, y: &[u8], params: &KnnParams) -> Self {
        Self {
            k: params.k.clamp(1, x.nrows().max(1)),
            train_x: x.to_owned(),
            train_y: y.to_vec(),
        }
    }

    /// Indices of the `k` nearest training rows; equal distances go to the
    /// lower index.
    pub fn neighbours(&self, x: ArrayView1<'_, f64>) -> Vec<usize> {
        let mut dist: Vec<(f64, usize)> = self
            .train_x
            .rows()
            .into_iter()
            .enumerate()
            .map(|(i, row)| {
                let d: f64 = row.iter().zip(x.iter()).map(|(a, b)| (a - b).powi(2)).sum();
                (d, i)
            })
            .collect();
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if self.k < dist.len() {
            dist.select_nth_unstable_by(self.k - 1, cmp);
            dist.truncate(self.k);
        }
        dist.sort_by(cmp);
        dist.into_iter().map(|(_, i)| i).collect()
    }

    /// Fraction of seizure-labelled neighbours.
    pub fn score(&self, x: ArrayView1<'_, f64>) -> f64 {
        let nn = self.neighbours(x);
        nn.iter().filter(|&&i| self.train_y[i] == 1).count() as f64 / nn.len() as f64
    }
}
