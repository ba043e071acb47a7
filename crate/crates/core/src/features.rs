//! Per-channel biomarkers: line-length and band powers.
//!
//! Band power uses a single-segment periodogram: subtract the epoch mean,
//! take the DFT of the rectangular-windowed epoch, and sum the one-sided
//! power `|X[m]|^2 / T^2` (doubled except at DC and Nyquist) over bins with
//! `lo <= f < hi`. A band whose upper edge is exactly Nyquist also takes the
//! Nyquist bin, so bands partitioning `(0, fs/2]` sum to the epoch variance.

use std::collections::HashMap;
use std::sync::Arc;

use ndarray::{Array2, ArrayView1};
use rayon::prelude::*;
use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::epoching::EpochSet;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandDef {
    pub name: String,
    pub lo_hz: f64,
    pub hi_hz: f64,
}

impl BandDef {
    pub fn new(name: impl Into<String>, lo_hz: f64, hi_hz: f64) -> Self {
        Self {
            name: name.into(),
            lo_hz,
            hi_hz,
        }
    }

    pub fn validate(&self, sample_rate_hz: f64) -> Result<()> {
        let nyquist = sample_rate_hz / 2.0;
        if !(0.0 < self.lo_hz && self.lo_hz < self.hi_hz && self.hi_hz <= nyquist) {
            return Err(Error::Band {
                name: self.name.clone(),
                lo_hz: self.lo_hz,
                hi_hz: self.hi_hz,
                sample_rate_hz,
                nyquist,
            });
        }
        Ok(())
    }
}

/// Alpha (8-12 Hz), beta (12-30 Hz) and gamma (30-100 Hz).
pub fn default_bands() -> Vec<BandDef> {
    vec![
        BandDef::new("alpha", 8.0, 12.0),
        BandDef::new("beta", 12.0, 30.0),
        BandDef::new("gamma", 30.0, 100.0),
    ]
}

/// Sum of absolute first differences.
pub fn line_length(x: &[f64]) -> Result<f64> {
    if x.len() < 2 {
        return Err(Error::DimensionMismatch {
            what: "line-length input length (minimum)",
            expected: 2,
            got: x.len(),
        });
    }
    Ok(x.windows(2).map(|w| (w[1] - w[0]).abs()).sum())
}

/// Power in one band of a 1-second epoch sampled at `fs`.
pub fn band_power(x: &[f64], band: &BandDef, fs: f64) -> Result<f64> {
    let spectrum = Periodogram::new(x.len(), fs)?;
    let bins = spectrum.band_bins(band)?;
    let power = spectrum.one_sided_power(x);
    Ok(power[bins.0..bins.1].iter().sum())
}

/// A reusable one-sided periodogram for epochs of fixed length.
#[derive(Clone)]
pub struct Periodogram {
    len: usize,
    fs: f64,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for Periodogram {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Periodogram")
            .field("len", &self.len)
            .field("fs", &self.fs)
            .finish()
    }
}

impl Periodogram {
    pub fn new(len: usize, fs: f64) -> Result<Self> {
        let expected = fs.round() as usize;
        if len != expected || len < 2 {
            return Err(Error::DimensionMismatch {
                what: "band-power epoch length (samples per second)",
                expected,
                got: len,
            });
        }
        let fft = FftPlanner::new().plan_fft_forward(len);
        Ok(Self { len, fs, fft })
    }

    pub fn n_bins(&self) -> usize {
        self.len / 2 + 1
    }

    pub fn bin_hz(&self) -> f64 {
        self.fs / self.len as f64
    }

    /// Half-open bin range `[first, last)` covered by `band`.
    pub fn band_bins(&self, band: &BandDef) -> Result<(usize, usize)> {
        band.validate(self.fs)?;
        let freq = |m: usize| m as f64 * self.bin_hz();
        let nyquist_bin = self.len / 2;
        let first = (0..self.n_bins())
            .find(|&m| freq(m) >= band.lo_hz)
            .unwrap_or(self.n_bins());
        let mut last = (0..self.n_bins())
            .find(|&m| freq(m) >= band.hi_hz)
            .unwrap_or(self.n_bins());
        if self.len.is_multiple_of(2) && band.hi_hz == self.fs / 2.0 {
            last = nyquist_bin + 1;
        }
        Ok((first, last.max(first)))
    }

    /// One-sided power per bin, `0..=len/2`.
    pub fn one_sided_power(&self, x: &[f64]) -> Vec<f64> {
        let mut buf = vec![Complex::new(0.0, 0.0); self.len];
        let mut out = vec![0.0; self.n_bins()];
        self.one_sided_power_into(x, &mut buf, &mut out);
        out
    }

    fn one_sided_power_into(&self, x: &[f64], buf: &mut [Complex<f64>], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.len);
        let mean = x.iter().sum::<f64>() / self.len as f64;
        for (b, &v) in buf.iter_mut().zip(x) {
            *b = Complex::new(v - mean, 0.0);
        }
        self.fft.process(buf);
        let norm = (self.len * self.len) as f64;
        let nyquist = if self.len.is_multiple_of(2) { Some(self.len / 2) } else { None };
        for (m, o) in out.iter_mut().enumerate() {
            let p = buf[m].norm_sqr() / norm;
            *o = if m == 0 || Some(m) == nyquist { p } else { 2.0 * p };
        }
    }
}

/// Epoch × feature matrix with names, labels and event ids.
///
/// Event ids are numbered across the whole matrix (in order of first
/// appearance), so events from different records never collide.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub values: Array2<f64>,
    pub feature_names: Vec<String>,
    pub labels: Vec<u8>,
    pub event_ids: Vec<Option<usize>>,
}

impl FeatureMatrix {
    pub fn new(
        values: Array2<f64>,
        feature_names: Vec<String>,
        labels: Vec<u8>,
        event_ids: Vec<Option<usize>>,
    ) -> Result<Self> {
        if feature_names.len() != values.ncols() {
            return Err(Error::DimensionMismatch {
                what: "feature names",
                expected: values.ncols(),
                got: feature_names.len(),
            });
        }
        for (what, len) in [("labels", labels.len()), ("event ids", event_ids.len())] {
            if len != values.nrows() {
                return Err(Error::DimensionMismatch {
                    what,
                    expected: values.nrows(),
                    got: len,
                });
            }
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("feature matrix".into()));
        }
        Ok(Self {
            values,
            feature_names,
            labels,
            event_ids,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn row(&self, i: usize) -> ArrayView1<'_, f64> {
        self.values.row(i)
    }

    /// CSV with one column per feature, then `label` and `event_id`.
    pub fn write_csv<W: std::io::Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        let mut header = self.feature_names.clone();
        header.push("label".into());
        header.push("event_id".into());
        w.write_record(&header)?;
        for i in 0..self.n_rows() {
            let mut record: Vec<String> = self.values.row(i).iter().map(|v| v.to_string()).collect();
            record.push(self.labels[i].to_string());
            record.push(self.event_ids[i].map(|e| e.to_string()).unwrap_or_default());
            w.write_record(&record)?;
        }
        w.flush()?;
        Ok(())
    }
}

/// Names of the features produced by [`extract_features`].
pub fn feature_names(channels: &[String], bands: &[BandDef]) -> Vec<String> {
    let mut names = Vec::with_capacity(channels.len() * (bands.len() + 1));
    for ch in channels {
        names.push(format!("{ch}:LL"));
        for band in bands {
            names.push(format!("{ch}:{}", band.name));
        }
    }
    names
}

/// Row `j` holds `[LL, P_band...]` for each channel in turn. Rows follow
/// epoch order; the work is spread over the current rayon pool.
pub fn extract_features(epochs: &EpochSet, bands: &[BandDef]) -> Result<FeatureMatrix> {
    let first = epochs.epochs.first().ok_or(Error::Empty("epoch set"))?;
    let channels = first.recording().channel_names().to_vec();
    let n_channels = channels.len();
    let per_epoch = first.samples().ncols();
    let fs = epochs.sample_rate_hz;
    let spectrum = Periodogram::new(per_epoch, fs)?;
    let band_bins = bands
        .iter()
        .map(|b| spectrum.band_bins(b))
        .collect::<Result<Vec<_>>>()?;
    let per_channel = bands.len() + 1;
    let k = n_channels * per_channel;

    let rows: Vec<Vec<f64>> = epochs
        .epochs
        .par_iter()
        .enumerate()
        .map_init(
            || {
                (
                    vec![Complex::new(0.0, 0.0); per_epoch],
                    vec![0.0; spectrum.n_bins()],
                    vec![0.0; per_epoch],
                )
            },
            |(buf, power, scratch), (idx, epoch)| -> Result<Vec<f64>> {
                let samples = epoch.samples();
                if samples.nrows() != n_channels {
                    return Err(Error::DimensionMismatch {
                        what: "epoch channel count",
                        expected: n_channels,
                        got: samples.nrows(),
                    });
                }
                let mut row = Vec::with_capacity(k);
                for (ch, channel) in samples.rows().into_iter().enumerate() {
                    let x: &[f64] = match channel.as_slice() {
                        Some(s) => s,
                        None => {
                            scratch.iter_mut().zip(channel.iter()).for_each(|(d, &v)| *d = v);
                            scratch
                        }
                    };
                    let ll = line_length(x).map_err(|e| Error::Feature {
                        epoch: idx,
                        channel: channels[ch].clone(),
                        source: Box::new(e),
                    })?;
                    row.push(ll);
                    spectrum.one_sided_power_into(x, buf, power);
                    for &(lo, hi) in &band_bins {
                        row.push(power[lo..hi].iter().sum());
                    }
                }
                if let Some(pos) = row.iter().position(|v| !v.is_finite()) {
                    return Err(Error::Feature {
                        epoch: idx,
                        channel: channels[pos / per_channel].clone(),
                        source: Box::new(Error::NonFinite("epoch samples".into())),
                    });
                }
                Ok(row)
            },
        )
        .collect::<Result<_>>()?;

    let mut values = Array2::zeros((rows.len(), k));
    for (mut dst, src) in values.rows_mut().into_iter().zip(&rows) {
        dst.assign(&ArrayView1::from(src.as_slice()));
    }

    let mut event_index: HashMap<(&str, usize), usize> = HashMap::new();
    let mut event_ids = Vec::with_capacity(epochs.len());
    for ep in &epochs.epochs {
        event_ids.push(ep.event_id.map(|ev| {
            let next = event_index.len();
            *event_index.entry((ep.record_id(), ev)).or_insert(next)
        }));
    }
    FeatureMatrix::new(
        values,
        feature_names(&channels, bands),
        epochs.labels(),
        event_ids,
    )
}
