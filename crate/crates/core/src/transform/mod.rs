//! Quantile preprocessing followed by the periodic feature embedding.

mod periodic;
mod quantile;

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::{Error, Result};

pub use periodic::{EmbeddingLayout, PeriodicEmbedder, DEFAULT_DIM};
pub use quantile::{QuantileMap, DEFAULT_QUANTILES};

pub const DEFAULT_SIGMA: f64 = 1.0;
pub const DEFAULT_SEED: u64 = 42;

/// Embedded features: `n × (k·d)`, every entry in [-1, 1].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddedMatrix {
    pub values: Array2<f64>,
    pub layout: EmbeddingLayout,
    pub labels: Vec<u8>,
    pub event_ids: Vec<Option<usize>>,
}

/// Quantile transform, then embed each row.
pub fn transform_pipeline(
    map: &QuantileMap,
    embedder: &PeriodicEmbedder,
    x: &FeatureMatrix,
) -> Result<EmbeddedMatrix> {
    check_widths(map, embedder)?;
    let uniform = map.transform_values(x.values.view())?;
    let values = embedder.embed_rows(uniform.view())?;
    Ok(EmbeddedMatrix {
        values,
        layout: embedder.layout(),
        labels: x.labels.clone(),
        event_ids: x.event_ids.clone(),
    })
}

fn check_widths(map: &QuantileMap, embedder: &PeriodicEmbedder) -> Result<()> {
    if map.n_features() != embedder.n_features() {
        return Err(Error::DimensionMismatch {
            what: "embedder width vs quantile map width",
            expected: map.n_features(),
            got: embedder.n_features(),
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TransformSettings {
    pub n_quantiles: usize,
    pub dim: usize,
    pub sigma: f64,
    #[serde(with = "crate::model_file::u64_text")]
    pub seed: u64,
}

impl Default for TransformSettings {
    fn default() -> Self {
        Self {
            n_quantiles: DEFAULT_QUANTILES,
            dim: DEFAULT_DIM,
            sigma: DEFAULT_SIGMA,
            seed: DEFAULT_SEED,
        }
    }
}

/// The stage between feature extraction and the classifier.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preprocessor {
    /// Raw features go straight to the classifier.
    Identity,
    Periodic {
        quantile: QuantileMap,
        embedder: PeriodicEmbedder,
    },
}

impl Preprocessor {
    /// Fits the quantile map on `train` and draws the embedding coefficients.
    pub fn fit_periodic(train: &FeatureMatrix, settings: &TransformSettings) -> Result<Self> {
        let quantile = QuantileMap::fit(train, settings.n_quantiles)?;
        let embedder = PeriodicEmbedder::new(
            train.n_features(),
            settings.dim,
            settings.sigma,
            settings.seed,
        )?;
        Ok(Self::Periodic { quantile, embedder })
    }

    pub fn is_embedding(&self) -> bool {
        matches!(self, Preprocessor::Periodic { .. })
    }

    pub fn output_dim(&self, n_features: usize) -> usize {
        match self {
            Preprocessor::Identity => n_features,
            Preprocessor::Periodic { embedder, .. } => embedder.output_dim(),
        }
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<Array2<f64>> {
        match self {
            Preprocessor::Identity => Ok(x.values.clone()),
            Preprocessor::Periodic { quantile, embedder } => {
                Ok(transform_pipeline(quantile, embedder, x)?.values)
            }
        }
    }

    /// Same as [`Preprocessor::apply`] on a bare `n × k` array.
    pub fn apply_values(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        match self {
            Preprocessor::Identity => Ok(x.to_owned()),
            Preprocessor::Periodic { quantile, embedder } => {
                check_widths(quantile, embedder)?;
                embedder.embed_rows(quantile.transform_values(x)?.view())
            }
        }
    }

    /// Single-row path for streaming scorers.
    pub fn apply_row(&self, row: &[f64], scratch: &mut Vec<f64>, out: &mut Vec<f64>) -> Result<()> {
        match self {
            Preprocessor::Identity => {
                out.clear();
                out.extend_from_slice(row);
            }
            Preprocessor::Periodic { quantile, embedder } => {
                scratch.resize(row.len(), 0.0);
                quantile.transform_row(row, scratch)?;
                out.resize(embedder.output_dim(), 0.0);
                embedder.embed_into(scratch, out)?;
            }
        }
        Ok(())
    }
}
