use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::features::FeatureMatrix;
use crate::{Error, Result};

pub const DEFAULT_QUANTILES: usize = 50;

/// Per-feature quantile landmarks mapping each feature onto uniform [0, 1].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantileMap {
    n_quantiles: usize,
    fitted_on: usize,
    /// One non-decreasing array of `n_quantiles` landmarks per feature.
    landmarks: Vec<Vec<f64>>,
}

impl QuantileMap {
    /// Landmark `j` is the empirical quantile at probability `j / (Q - 1)`,
    /// linearly interpolated between order statistics.
    pub fn fit(train: &FeatureMatrix, n_quantiles: usize) -> Result<Self> {
        Self::fit_columns(train.values.view(), n_quantiles)
    }

    pub fn fit_columns(values: ArrayView2<'_, f64>, n_quantiles: usize) -> Result<Self> {
        if n_quantiles < 2 {
            return Err(Error::Config(format!(
                "number of quantiles must be at least 2, got {n_quantiles}"
            )));
        }
        let n = values.nrows();
        if n == 0 {
            return Err(Error::Empty("quantile training data"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("quantile training data".into()));
        }
        let steps = n_quantiles - 1;
        let landmarks = values
            .columns()
            .into_iter()
            .map(|col| {
                let mut sorted = col.to_vec();
                sorted.sort_by(f64::total_cmp);
                (0..n_quantiles)
                    .map(|j| {
                        // position j * (n - 1) / steps, split exactly
                        let num = j * (n - 1);
                        let (lo, rem) = (num / steps, num % steps);
                        if rem == 0 {
                            sorted[lo]
                        } else {
                            let frac = rem as f64 / steps as f64;
                            sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
                        }
                    })
                    .collect()
            })
            .collect();
        Ok(Self {
            n_quantiles,
            fitted_on: n,
            landmarks,
        })
    }

    pub fn from_landmarks(landmarks: Vec<Vec<f64>>, fitted_on: usize) -> Result<Self> {
        let n_quantiles = landmarks.first().map(Vec::len).unwrap_or(0);
        if n_quantiles < 2 {
            return Err(Error::Config("quantile map needs at least 2 landmarks".into()));
        }
        for (i, row) in landmarks.iter().enumerate() {
            if row.len() != n_quantiles {
                return Err(Error::DimensionMismatch {
                    what: "landmarks per feature",
                    expected: n_quantiles,
                    got: row.len(),
                });
            }
            if row.windows(2).any(|w| w[0].partial_cmp(&w[1]).is_none_or(|o| o.is_gt())) {
                return Err(Error::Config(format!("landmarks of feature {i} are not sorted")));
            }
        }
        Ok(Self {
            n_quantiles,
            fitted_on,
            landmarks,
        })
    }

    pub fn n_features(&self) -> usize {
        self.landmarks.len()
    }

    pub fn n_quantiles(&self) -> usize {
        self.n_quantiles
    }

    pub fn fitted_on(&self) -> usize {
        self.fitted_on
    }

    pub fn landmarks(&self, feature: usize) -> &[f64] {
        &self.landmarks[feature]
    }

    /// Maps `x` through feature `feature`'s landmarks. Values on a run of
    /// tied landmarks take the middle of the run, so a constant feature
    /// maps to 0.5.
    pub fn transform_value(&self, feature: usize, x: f64) -> f64 {
        let q = &self.landmarks[feature];
        let last = q.len() - 1;
        if x < q[0] {
            return 0.0;
        }
        if x > q[last] {
            return 1.0;
        }
        let lo = q.partition_point(|&v| v < x);
        let hi = q.partition_point(|&v| v <= x);
        let steps = last as f64;
        if lo < hi {
            return (lo + hi - 1) as f64 / 2.0 / steps;
        }
        // q[hi - 1] < x < q[hi]
        let (a, b) = (q[hi - 1], q[hi]);
        ((hi - 1) as f64 + (x - a) / (b - a)) / steps
    }

    pub fn transform_row(&self, row: &[f64], out: &mut [f64]) -> Result<()> {
        if row.len() != self.n_features() {
            return Err(Error::DimensionMismatch {
                what: "quantile transform input width",
                expected: self.n_features(),
                got: row.len(),
            });
        }
        for (i, (o, &x)) in out.iter_mut().zip(row).enumerate() {
            *o = self.transform_value(i, x);
        }
        Ok(())
    }

    pub fn transform_values(&self, values: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        if values.ncols() != self.n_features() {
            return Err(Error::DimensionMismatch {
                what: "quantile transform input width",
                expected: self.n_features(),
                got: values.ncols(),
            });
        }
        Ok(Array2::from_shape_fn(values.dim(), |(r, c)| {
            self.transform_value(c, values[[r, c]])
        }))
    }

    pub fn apply(&self, x: &FeatureMatrix) -> Result<FeatureMatrix> {
        let values = self.transform_values(x.values.view())?;
        FeatureMatrix::new(
            values,
            x.feature_names.clone(),
            x.labels.clone(),
            x.event_ids.clone(),
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array2;

    fn column(values: &[f64]) -> Array2<f64> {
        Array2::from_shape_vec((values.len(), 1), values.to_vec()).unwrap()
    }

    #[test]
    fn two_quantiles_are_min_and_max() {
        let map = QuantileMap::fit_columns(column(&[3.0, 1.0, 5.0, 2.0, 4.0]).view(), 2).unwrap();
        assert_eq!(map.landmarks(0), &[1.0, 5.0]);
    }

    #[test]
    fn five_quantiles_are_order_statistics() {
        let map = QuantileMap::fit_columns(column(&[1.0, 2.0, 3.0, 4.0, 5.0]).view(), 5).unwrap();
        assert_eq!(map.landmarks(0), &[1.0, 2.0, 3.0, 4.0, 5.0]);
        assert_eq!(map.fitted_on(), 5);
    }

    #[test]
    fn median_maps_to_half_and_clamps() {
        let map = QuantileMap::fit_columns(column(&[1.0, 2.0, 3.0, 4.0, 5.0]).view(), 5).unwrap();
        assert_eq!(map.transform_value(0, 3.0), 0.5);
        assert_eq!(map.transform_value(0, -10.0), 0.0);
        assert_eq!(map.transform_value(0, 10.0), 1.0);
        assert_eq!(map.transform_value(0, 1.5), 0.125);
    }

    #[test]
    fn constant_feature_maps_to_half() {
        let map = QuantileMap::fit_columns(column(&[7.0; 10]).view(), 50).unwrap();
        assert_eq!(map.transform_value(0, 7.0), 0.5);
        assert_eq!(map.transform_value(0, 6.0), 0.0);
        assert_eq!(map.transform_value(0, 8.0), 1.0);
    }

    #[test]
    fn tied_run_takes_its_middle() {
        let map = QuantileMap::from_landmarks(vec![vec![1.0, 1.0, 3.0]], 3).unwrap();
        assert_eq!(map.transform_value(0, 1.0), 0.25);
        assert_eq!(map.transform_value(0, 2.0), 0.75);
    }

    #[test]
    fn errors() {
        assert!(QuantileMap::fit_columns(column(&[1.0]).view(), 1).is_err());
        assert!(QuantileMap::fit_columns(Array2::zeros((0, 2)).view(), 5).is_err());
        assert!(QuantileMap::fit_columns(column(&[1.0, f64::NAN]).view(), 5).is_err());
        let map = QuantileMap::fit_columns(column(&[1.0, 2.0]).view(), 2).unwrap();
        assert!(map.transform_values(Array2::zeros((1, 3)).view()).is_err());
    }
}
