use ndarray::{Array2, ArrayView2};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::SeededRng;
use crate::{Error, Result};

pub const DEFAULT_DIM: usize = 20;

/// Fixed periodic embedding: each scalar feature `x_i` becomes
/// `[cos(2π c_i1 x_i), sin(2π c_i1 x_i), ..., cos(2π c_iL x_i), sin(2π c_iL x_i)]`
/// with `L = dim / 2` coefficients per feature drawn once from N(0, σ²).
/// The per-feature blocks are concatenated in feature order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PeriodicEmbedder {
    dim: usize,
    sigma: f64,
    #[serde(with = "crate::model_file::u64_text")]
    seed: u64,
    /// n_features × dim/2
    coeffs: Array2<f64>,
}

impl PeriodicEmbedder {
    pub fn new(n_features: usize, dim: usize, sigma: f64, seed: u64) -> Result<Self> {
        if n_features == 0 {
            return Err(Error::Config("embedding needs at least one feature".into()));
        }
        if dim == 0 || !dim.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "embedding dimension must be even and positive, got {dim}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Config(format!("sigma must be positive, got {sigma}")));
        }
        let mut rng = SeededRng::new(seed);
        let coeffs = Array2::from_shape_simple_fn((n_features, dim / 2), || sigma * rng.normal());
        Ok(Self {
            dim,
            sigma,
            seed,
            coeffs,
        })
    }

    /// Rebuilds an embedder from stored coefficients.
    pub fn from_coefficients(coeffs: Array2<f64>, sigma: f64, seed: u64) -> Result<Self> {
        if coeffs.nrows() == 0 || coeffs.ncols() == 0 {
            return Err(Error::Config("empty coefficient matrix".into()));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::NonFinite("embedding coefficients".into()));
        }
        Ok(Self {
            dim: coeffs.ncols() * 2,
            sigma,
            seed,
            coeffs,
        })
    }

    pub fn n_features(&self) -> usize {
        self.coeffs.nrows()
    }

    /// Embedding width per feature.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn coeffs(&self) -> &Array2<f64> {
        &self.coeffs
    }

    /// Number of frozen coefficients, `k * dim / 2`.
    pub fn n_parameters(&self) -> usize {
        self.coeffs.len()
    }

    pub fn output_dim(&self) -> usize {
        self.n_features() * self.dim
    }

    pub fn layout(&self) -> EmbeddingLayout {
        EmbeddingLayout {
            n_features: self.n_features(),
            dim: self.dim,
        }
    }

    pub fn embed(&self, x: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.output_dim()];
        self.embed_into(x, &mut out)?;
        Ok(out)
    }

    pub fn embed_into(&self, x: &[f64], out: &mut [f64]) -> Result<()> {
        if x.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                what: "embedding input width",
                expected: self.n_features(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("embedding input".into()));
        }
        debug_assert_eq!(out.len(), self.output_dim());
        for ((&xi, coeffs), block) in x
            .iter()
            .zip(self.coeffs.rows())
            .zip(out.chunks_exact_mut(self.dim))
        {
            for (&c, pair) in coeffs.iter().zip(block.chunks_exact_mut(2)) {
                let (sin, cos) = (std::f64::consts::TAU * c * xi).sin_cos();
                pair[0] = cos;
                pair[1] = sin;
            }
        }
        Ok(())
    }

    /// Embeds every row; row order is preserved.
    pub fn embed_rows(&self, values: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let mut out = Array2::zeros((values.nrows(), self.output_dim()));
        if values.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                what: "embedding input width",
                expected: self.n_features(),
                got: values.ncols(),
            });
        }
        out.axis_iter_mut(ndarray::Axis(0))
            .into_par_iter()
            .zip(values.axis_iter(ndarray::Axis(0)).into_par_iter())
            .try_for_each(|(mut dst, src)| {
                let src = src.to_vec();
                self.embed_into(&src, dst.as_slice_mut().expect("row-major output"))
            })?;
        Ok(out)
    }
}

/// Column layout of an embedded matrix: feature `i`, coefficient `l` occupy
/// columns `i * dim + 2l` (cos) and `i * dim + 2l + 1` (sin).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingLayout {
    pub n_features: usize,
    pub dim: usize,
}

impl EmbeddingLayout {
    pub fn n_columns(&self) -> usize {
        self.n_features * self.dim
    }

    pub fn columns(&self, feature: usize, coeff: usize) -> (usize, usize) {
        let cos = feature * self.dim + 2 * coeff;
        (cos, cos + 1)
    }

    pub fn column_names(&self, feature_names: &[String]) -> Vec<String> {
        let mut names = Vec::with_capacity(self.n_columns());
        for name in feature_names.iter().take(self.n_features) {
            for l in 0..self.dim / 2 {
                names.push(format!("{name}:cos{l}"));
                names.push(format!("{name}:sin{l}"));
            }
        }
        names
    }
}
