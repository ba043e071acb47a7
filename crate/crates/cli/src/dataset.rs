//! Synthetic dataset generation and on-disk dataset loading.
//!
//! A dataset directory holds one sub-directory per patient containing
//! `<record>.edf` files and a `<patient>-summary.txt` annotation file.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};

use seizembed::rng::{derive_seed, SeededRng};
use seizembed::signal::{
    read_chb_summary, read_edf_file, synth_recording, write_chb_summary, write_edf, EegRecording,
    SeizureAnnotation, SeizureMode, SynthConfig,
};

/// Declarative description of a synthetic multi-patient dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthDatasetConfig {
    pub n_patients: usize,
    #[serde(default = "one")]
    pub records_per_patient: usize,
    /// Inclusive range of seizure events per patient.
    pub events_per_patient: (usize, usize),
    /// Range of seizure durations in seconds.
    pub seizure_duration_s: (f64, f64),
    pub record_duration_s: f64,
    pub n_channels: usize,
    pub sample_rate_hz: f64,
    pub seizure_mode: SeizureMode,
    pub background_amplitude_uv: f64,
    pub seed: u64,
}

fn one() -> usize {
    1
}

/// Seconds kept free of seizures at both ends of each placement slot.
const SLOT_MARGIN_S: f64 = 5.0;

impl SynthDatasetConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("parsing synthetic dataset config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        ensure!(self.n_patients > 0, "n_patients must be at least 1");
        ensure!(self.records_per_patient > 0, "records_per_patient must be at least 1");
        let (lo, hi) = self.events_per_patient;
        ensure!(lo <= hi, "events_per_patient range is empty");
        let (dlo, dhi) = self.seizure_duration_s;
        ensure!(0.0 < dlo && dlo <= dhi, "seizure_duration_s must be a positive range");
        ensure!(self.n_channels > 0, "n_channels must be at least 1");
        ensure!(
            self.sample_rate_hz > 0.0 && self.sample_rate_hz.fract() == 0.0,
            "sample_rate_hz must be a positive integer"
        );
        ensure!(self.background_amplitude_uv > 0.0, "background_amplitude_uv must be positive");
        // Worst case: every event of the busiest record needs its own slot.
        let per_record = hi.div_ceil(self.records_per_patient);
        if per_record > 0 {
            let slot = self.record_duration_s / per_record as f64;
            ensure!(
                slot >= dhi + 2.0 * SLOT_MARGIN_S,
                "record_duration_s {} is too short for {per_record} events of up to {dhi} s",
                self.record_duration_s
            );
        }
        Ok(())
    }

    pub fn patient_id(index: usize) -> String {
        format!("syn{:02}", index + 1)
    }

    /// Per-record generator configs for one patient, in record order.
    pub fn patient_records(&self, index: usize) -> Vec<SynthConfig> {
        let patient = Self::patient_id(index);
        let patient_seed = derive_seed(self.seed, &patient);
        let mut rng = SeededRng::new(derive_seed(patient_seed, "events"));
        let (lo, hi) = self.events_per_patient;
        let n_events = lo + rng.below(hi - lo + 1);
        let n_records = self.records_per_patient;

        // Events fill records in time order.
        let mut per_record = vec![0usize; n_records];
        for e in 0..n_events {
            per_record[e * n_records / n_events.max(1)] += 1;
        }
        per_record
            .iter()
            .enumerate()
            .map(|(r, &m)| {
                let record_id = format!("{patient}_{:02}", r + 1);
                let slot = self.record_duration_s / m.max(1) as f64;
                let intervals = (0..m)
                    .map(|j| {
                        let (dlo, dhi) = self.seizure_duration_s;
                        let dur = rng.uniform_range(dlo, dhi);
                        let earliest = j as f64 * slot + SLOT_MARGIN_S;
                        let latest = (j + 1) as f64 * slot - SLOT_MARGIN_S - dur;
                        let start = rng.uniform_range(earliest, latest.max(earliest));
                        (round_ms(start), round_ms(start + dur))
                    })
                    .collect();
                SynthConfig {
                    seed: derive_seed(patient_seed, &record_id),
                    record_id,
                    n_channels: self.n_channels,
                    sample_rate_hz: self.sample_rate_hz,
                    duration_s: self.record_duration_s,
                    seizure_intervals: intervals,
                    seizure_mode: self.seizure_mode,
                    background_amplitude_uv: self.background_amplitude_uv,
                }
            })
            .collect()
    }
}

/// Keeps interval bounds short in summary files.
fn round_ms(t: f64) -> f64 {
    (t * 1000.0).round() / 1000.0
}

/// Recordings and annotations of one patient, sorted by record id.
#[derive(Debug, Clone)]
pub struct PatientData {
    pub patient_id: String,
    pub records: Vec<(Arc<EegRecording>, SeizureAnnotation)>,
}

/// Generates one patient in memory.
pub fn synth_patient(cfg: &SynthDatasetConfig, index: usize) -> Result<PatientData> {
    let records = cfg
        .patient_records(index)
        .iter()
        .map(|rc| {
            let (rec, ann) = synth_recording(rc)
                .with_context(|| format!("synthesizing {}", rc.record_id))?;
            Ok((Arc::new(rec), ann))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatientData {
        patient_id: SynthDatasetConfig::patient_id(index),
        records,
    })
}

/// Writes every patient as EDF files plus a summary file. Returns the
/// paths written, in order.
pub fn write_synth_dataset(cfg: &SynthDatasetConfig, out: &Path) -> Result<Vec<PathBuf>> {
    cfg.validate()?;
    let mut written = Vec::new();
    for index in 0..cfg.n_patients {
        let patient = synth_patient(cfg, index)?;
        let dir = out.join(&patient.patient_id);
        fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
        let mut annotations = Vec::new();
        let mut channels = Vec::new();
        for (rec, ann) in &patient.records {
            let path = dir.join(format!("{}.edf", rec.record_id()));
            fs::write(&path, write_edf(rec)?).with_context(|| format!("writing {}", path.display()))?;
            written.push(path);
            annotations.push(ann.clone());
            channels = rec.channel_names().to_vec();
        }
        let summary = write_chb_summary(&patient.patient_id, cfg.sample_rate_hz, &channels, &annotations);
        let path = summary_path(&dir, &patient.patient_id);
        fs::write(&path, summary).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
    }
    Ok(written)
}

pub fn summary_path(patient_dir: &Path, patient_id: &str) -> PathBuf {
    patient_dir.join(format!("{patient_id}-summary.txt"))
}

/// Patient ids (sub-directory names) of a dataset directory, sorted.
pub fn list_patients(root: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).with_context(|| format!("listing {}", root.display()))? {
        let entry = entry?;
        if entry.file_type()?.is_dir() {
            let name = entry.file_name().to_string_lossy().into_owned();
            if summary_path(&entry.path(), &name).is_file() {
                out.push(name);
            }
        }
    }
    out.sort();
    Ok(out)
}

/// EDF record ids of a patient directory, sorted.
pub fn list_records(patient_dir: &Path) -> Result<Vec<String>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(patient_dir).with_context(|| format!("listing {}", patient_dir.display()))? {
        let path = entry?.path();
        let is_edf = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("edf"));
        if is_edf {
            if let Some(stem) = path.file_stem() {
                out.push(stem.to_string_lossy().into_owned());
            }
        }
    }
    out.sort();
    Ok(out)
}

/// Loads `records` (all if `None`) of one patient, restricted to
/// `channels`, or to the channels common to every loaded record when
/// `channels` is empty.
pub fn load_patient(
    root: &Path,
    patient_id: &str,
    records: Option<&[String]>,
    channels: &[String],
) -> Result<PatientData> {
    let dir = root.join(patient_id);
    let summary_file = summary_path(&dir, patient_id);
    let text = fs::read_to_string(&summary_file)
        .with_context(|| format!("reading {}", summary_file.display()))?;
    let annotations: BTreeMap<String, SeizureAnnotation> = read_chb_summary(&text)
        .with_context(|| format!("parsing {}", summary_file.display()))?
        .into_iter()
        .map(|a| (a.record_id.clone(), a))
        .collect();

    let available = list_records(&dir)?;
    let wanted: Vec<String> = match records {
        Some(ids) => {
            for id in ids {
                ensure!(available.contains(id), "record `{id}` not found in {}", dir.display());
            }
            let mut ids = ids.to_vec();
            ids.sort();
            ids.dedup();
            ids
        }
        None => available,
    };
    ensure!(!wanted.is_empty(), "no EDF records in {}", dir.display());

    let mut loaded = Vec::with_capacity(wanted.len());
    for id in &wanted {
        let path = dir.join(format!("{id}.edf"));
        let rec = read_edf_file(&path).with_context(|| format!("reading {}", path.display()))?;
        let ann = match annotations.get(id) {
            Some(a) => a.clone(),
            None => {
                log::warn!("{id}: not listed in {}; treating as seizure-free", summary_file.display());
                SeizureAnnotation::empty(id.clone())
            }
        };
        loaded.push((rec, ann));
    }

    let selected: Vec<String> = if channels.is_empty() {
        let first = loaded[0].0.channel_names().to_vec();
        first
            .into_iter()
            .filter(|c| loaded.iter().all(|(r, _)| r.channel_names().contains(c)))
            .collect()
    } else {
        channels.to_vec()
    };
    if selected.is_empty() {
        bail!("records of `{patient_id}` share no channels");
    }
    let records = loaded
        .into_iter()
        .map(|(rec, ann)| {
            let rec = if rec.channel_names() == selected.as_slice() {
                rec
            } else {
                rec.select_channels(&selected)?
            };
            Ok((Arc::new(rec), ann))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PatientData {
        patient_id: patient_id.to_string(),
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small() -> SynthDatasetConfig {
        SynthDatasetConfig {
            n_patients: 2,
            records_per_patient: 2,
            events_per_patient: (2, 5),
            seizure_duration_s: (10.0, 20.0),
            record_duration_s: 120.0,
            n_channels: 3,
            sample_rate_hz: 64.0,
            seizure_mode: SeizureMode::HighAmpLowFreq,
            background_amplitude_uv: 20.0,
            seed: 9,
        }
    }

    #[test]
    fn events_are_valid_and_in_range() {
        let cfg = small();
        for p in 0..cfg.n_patients {
            let recs = cfg.patient_records(p);
            assert_eq!(recs.len(), 2);
            let n: usize = recs.iter().map(|r| r.seizure_intervals.len()).sum();
            assert!((2..=5).contains(&n));
            for r in &recs {
                SeizureAnnotation::new(r.record_id.clone(), r.seizure_intervals.clone())
                    .unwrap()
                    .check(Some(r.duration_s))
                    .unwrap();
            }
        }
        assert_eq!(cfg.patient_records(1), cfg.patient_records(1));
    }

    #[test]
    fn rejects_bad_configs() {
        let mut cfg = small();
        cfg.n_patients = 0;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.record_duration_s = 30.0;
        assert!(cfg.validate().is_err());
        let mut cfg = small();
        cfg.sample_rate_hz = 100.5;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn toml_form() {
        let cfg = SynthDatasetConfig::from_toml(
            r#"
            n_patients = 3
            events_per_patient = [2, 4]
            seizure_duration_s = [10.0, 30.0]
            record_duration_s = 300.0
            n_channels = 18
            sample_rate_hz = 256.0
            seizure_mode = "high_amp_low_freq"
            background_amplitude_uv = 20.0
            seed = 1
            "#,
        )
        .unwrap();
        assert_eq!(cfg.records_per_patient, 1);
        assert_eq!(cfg.events_per_patient, (2, 4));
    }
}
