//! EEG recordings, seizure annotations, and their on-disk formats.

mod edf;
mod summary;
mod synth;

use std::collections::HashSet;

use ndarray::{Array2, ArrayView1};

use crate::{Error, Result};

pub use edf::{read_edf, read_edf_file, read_edf_named, write_edf, EdfHeader, EdfSignalHeader};
pub use summary::{read_chb_summary, write_chb_summary};
pub use synth::{channel_name, synth_recording, SeizureMode, SynthConfig, BIPOLAR_MONTAGE};

/// A multichannel recording at a single sampling rate, in physical units (µV).
#[derive(Debug, Clone, PartialEq)]
pub struct EegRecording {
    record_id: String,
    channel_names: Vec<String>,
    sample_rate_hz: f64,
    /// channels × samples
    samples: Array2<f64>,
}

impl EegRecording {
    pub fn new(
        record_id: impl Into<String>,
        channel_names: Vec<String>,
        sample_rate_hz: f64,
        samples: Array2<f64>,
    ) -> Result<Self> {
        if !(sample_rate_hz.is_finite() && sample_rate_hz > 0.0) {
            return Err(Error::Recording(format!(
                "sample rate must be positive, got {sample_rate_hz}"
            )));
        }
        if samples.ncols() == 0 || samples.nrows() == 0 {
            return Err(Error::Recording("recording has no samples".into()));
        }
        if channel_names.len() != samples.nrows() {
            return Err(Error::DimensionMismatch {
                what: "channel names",
                expected: samples.nrows(),
                got: channel_names.len(),
            });
        }
        let mut seen = HashSet::new();
        for name in &channel_names {
            if !seen.insert(name.as_str()) {
                return Err(Error::Recording(format!("duplicate channel `{name}`")));
            }
        }
        Ok(Self {
            record_id: record_id.into(),
            channel_names,
            sample_rate_hz,
            samples,
        })
    }

    pub fn record_id(&self) -> &str {
        &self.record_id
    }

    pub fn channel_names(&self) -> &[String] {
        &self.channel_names
    }

    pub fn sample_rate_hz(&self) -> f64 {
        self.sample_rate_hz
    }

    pub fn samples(&self) -> &Array2<f64> {
        &self.samples
    }

    pub fn channel(&self, index: usize) -> ArrayView1<'_, f64> {
        self.samples.row(index)
    }

    pub fn n_channels(&self) -> usize {
        self.samples.nrows()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.ncols()
    }

    pub fn duration_s(&self) -> f64 {
        self.n_samples() as f64 / self.sample_rate_hz
    }

    /// Keeps only `names`, in that order.
    pub fn select_channels(&self, names: &[String]) -> Result<Self> {
        let indices = names
            .iter()
            .map(|name| {
                self.channel_names
                    .iter()
                    .position(|c| c == name)
                    .ok_or_else(|| {
                        Error::Recording(format!(
                            "channel `{name}` not present in `{}`",
                            self.record_id
                        ))
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        let samples = self.samples.select(ndarray::Axis(0), &indices);
        Self::new(
            self.record_id.clone(),
            names.to_vec(),
            self.sample_rate_hz,
            samples,
        )
    }
}

/// Seizure intervals (seconds from record start) for one record.
#[derive(Debug, Clone, PartialEq)]
pub struct SeizureAnnotation {
    pub record_id: String,
    pub intervals: Vec<(f64, f64)>,
}

impl SeizureAnnotation {
    /// Validates ordering and overlap; duration is checked separately since
    /// summary files do not carry it.
    pub fn new(record_id: impl Into<String>, intervals: Vec<(f64, f64)>) -> Result<Self> {
        let ann = Self {
            record_id: record_id.into(),
            intervals,
        };
        ann.check(None)?;
        Ok(ann)
    }

    pub fn empty(record_id: impl Into<String>) -> Self {
        Self {
            record_id: record_id.into(),
            intervals: Vec::new(),
        }
    }

    /// Checks `0 <= start < end <= duration`, sorted and non-overlapping.
    pub fn check(&self, duration_s: Option<f64>) -> Result<()> {
        let fail = |msg: String| Error::Annotation {
            record_id: self.record_id.clone(),
            msg,
        };
        let mut prev_end = f64::NEG_INFINITY;
        for &(start, end) in &self.intervals {
            if !(start.is_finite() && end.is_finite()) || start < 0.0 || end <= start {
                return Err(fail(format!("interval ({start}, {end}) is not 0 <= start < end")));
            }
            if start < prev_end {
                return Err(fail(format!(
                    "interval ({start}, {end}) overlaps or precedes the previous one"
                )));
            }
            if let Some(duration) = duration_s {
                if end > duration {
                    return Err(fail(format!(
                        "interval ({start}, {end}) exceeds recording duration {duration} s"
                    )));
                }
            }
            prev_end = end;
        }
        Ok(())
    }
}
