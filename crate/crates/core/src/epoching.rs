//! One-second epochs, the mixed-epoch exclusion rule, and train/test splits.
//!
//! Windows are non-overlapping and aligned to whole seconds. A window lying
//! entirely inside a seizure interval is labeled 1, one lying entirely
//! outside every interval is labeled 0, and a window that straddles an
//! interval boundary is excluded.

use std::collections::HashSet;
use std::sync::Arc;

use ndarray::{s, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::signal::{EegRecording, SeizureAnnotation};
use crate::{Error, Result};

pub const EPOCH_SECONDS: f64 = 1.0;

#[derive(Debug, Clone)]
pub struct Epoch {
    pub start_s: f64,
    pub label: u8,
    /// Index of the containing seizure interval within its record.
    pub event_id: Option<usize>,
    recording: Arc<EegRecording>,
    start_sample: usize,
    len: usize,
}

impl Epoch {
    pub fn record_id(&self) -> &str {
        self.recording.record_id()
    }

    pub fn recording(&self) -> &EegRecording {
        &self.recording
    }

    /// channels × samples_per_epoch
    pub fn samples(&self) -> ArrayView2<'_, f64> {
        self.recording
            .samples()
            .slice(s![.., self.start_sample..self.start_sample + self.len])
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExcludedWindow {
    pub record_id: String,
    pub start_s: f64,
}

#[derive(Debug, Clone)]
pub struct EpochSet {
    pub epochs: Vec<Epoch>,
    pub excluded: Vec<ExcludedWindow>,
    /// Trailing windows shorter than one epoch, dropped.
    pub n_partial: usize,
    pub sample_rate_hz: f64,
}

impl EpochSet {
    pub fn n_excluded(&self) -> usize {
        self.excluded.len()
    }

    pub fn len(&self) -> usize {
        self.epochs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.epochs.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.epochs.iter().map(|e| e.label).collect()
    }

    pub fn n_seizure(&self) -> usize {
        self.epochs.iter().filter(|e| e.label == 1).count()
    }

    pub fn channel_names(&self) -> &[String] {
        self.epochs
            .first()
            .map(|e| e.recording().channel_names())
            .unwrap_or(&[])
    }

    fn empty_like(&self) -> Self {
        Self {
            epochs: Vec::new(),
            excluded: Vec::new(),
            n_partial: 0,
            sample_rate_hz: self.sample_rate_hz,
        }
    }
}

/// Cuts `recording` into labeled 1-second epochs.
pub fn extract_epochs(
    recording: &Arc<EegRecording>,
    annotation: &SeizureAnnotation,
) -> Result<EpochSet> {
    if recording.record_id() != annotation.record_id {
        return Err(Error::RecordMismatch {
            recording: recording.record_id().to_string(),
            annotation: annotation.record_id.clone(),
        });
    }
    annotation.check(Some(recording.duration_s()))?;
    let fs = recording.sample_rate_hz();
    let per_epoch = fs * EPOCH_SECONDS;
    if per_epoch.fract() != 0.0 {
        return Err(Error::Recording(format!(
            "{fs} Hz does not give an integer number of samples per epoch"
        )));
    }
    let per_epoch = per_epoch as usize;
    let n_windows = recording.n_samples() / per_epoch;
    let n_partial = usize::from(!recording.n_samples().is_multiple_of(per_epoch));

    let mut epochs = Vec::with_capacity(n_windows);
    let mut excluded = Vec::new();
    for w in 0..n_windows {
        let start = w as f64 * EPOCH_SECONDS;
        let end = start + EPOCH_SECONDS;
        let mut label = Some(0u8);
        let mut event_id = None;
        for (idx, &(s, e)) in annotation.intervals.iter().enumerate() {
            if s <= start && end <= e {
                label = Some(1);
                event_id = Some(idx);
                break;
            }
            if start < e && s < end {
                label = None;
                break;
            }
        }
        match label {
            Some(label) => epochs.push(Epoch {
                start_s: start,
                label,
                event_id,
                recording: Arc::clone(recording),
                start_sample: w * per_epoch,
                len: per_epoch,
            }),
            None => excluded.push(ExcludedWindow {
                record_id: recording.record_id().to_string(),
                start_s: start,
            }),
        }
    }
    Ok(EpochSet {
        epochs,
        excluded,
        n_partial,
        sample_rate_hz: fs,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SplitKind {
    /// Whole records go to train or test by name.
    ByRecordList { train: Vec<String>, test: Vec<String> },
    /// The first `ceil(fraction * n_events)` seizure events, in record-id
    /// order, go to train.
    ChronologicalFraction { fraction: f64 },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitPolicy {
    #[serde(flatten)]
    pub kind: SplitKind,
    /// Not used by the deterministic kinds; kept for report provenance.
    #[serde(default)]
    pub seed: u64,
}

impl SplitPolicy {
    pub fn chronological(fraction: f64) -> Self {
        Self {
            kind: SplitKind::ChronologicalFraction { fraction },
            seed: 0,
        }
    }

    pub fn by_records(train: Vec<String>, test: Vec<String>) -> Self {
        Self {
            kind: SplitKind::ByRecordList { train, test },
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.kind {
            SplitKind::ChronologicalFraction { fraction } => {
                if !(*fraction > 0.0 && *fraction < 1.0) {
                    return Err(Error::Split(format!(
                        "fraction must be strictly between 0 and 1, got {fraction}"
                    )));
                }
            }
            SplitKind::ByRecordList { train, test } => {
                let train: HashSet<&String> = train.iter().collect();
                if let Some(dup) = test.iter().find(|r| train.contains(r)) {
                    return Err(Error::Split(format!("record `{dup}` is in both train and test")));
                }
            }
        }
        Ok(())
    }

    /// Short human-readable form for reports.
    pub fn describe(&self) -> String {
        match &self.kind {
            SplitKind::ChronologicalFraction { fraction } => {
                format!("chronological_fraction({fraction})")
            }
            SplitKind::ByRecordList { train, test } => {
                format!("by_record_list(train=[{}];test=[{}])", train.join(" "), test.join(" "))
            }
        }
    }
}

fn append(dst: &mut EpochSet, src: &EpochSet) {
    dst.epochs.extend(src.epochs.iter().cloned());
    dst.excluded.extend(src.excluded.iter().cloned());
    dst.n_partial += src.n_partial;
}

/// Splits per-record epoch sets into train and test.
///
/// Records are taken in record-id order. For the chronological policy the cut
/// falls at the end of the record holding the last training event; when the
/// first test event shares that record, the cut is at the first test event's
/// first epoch instead.
pub fn split(epoch_sets: &[EpochSet], policy: &SplitPolicy) -> Result<(EpochSet, EpochSet)> {
    policy.validate()?;
    let first = epoch_sets.first().ok_or(Error::Empty("epoch sets"))?;
    let mut sets: Vec<&EpochSet> = epoch_sets.iter().collect();
    sets.sort_by(|a, b| record_of(a).cmp(record_of(b)));

    let mut train = first.empty_like();
    let mut test = first.empty_like();
    match &policy.kind {
        SplitKind::ByRecordList {
            train: train_ids,
            test: test_ids,
        } => {
            for set in &sets {
                let id = record_of(set);
                if train_ids.iter().any(|r| r == id) {
                    append(&mut train, set);
                } else if test_ids.iter().any(|r| r == id) {
                    append(&mut test, set);
                }
            }
        }
        SplitKind::ChronologicalFraction { fraction } => {
            // (set index, event id) in chronological order
            let mut events: Vec<(usize, usize)> = Vec::new();
            for (si, set) in sets.iter().enumerate() {
                for ep in &set.epochs {
                    if let Some(ev) = ep.event_id {
                        if !events.contains(&(si, ev)) {
                            events.push((si, ev));
                        }
                    }
                }
            }
            let n_train_events = (fraction * events.len() as f64).ceil() as usize;
            if n_train_events >= events.len() {
                return Err(Error::Split(format!(
                    "{} seizure event(s) leave none for the test set at fraction {fraction}",
                    events.len()
                )));
            }
            let (last_train_set, _) = events[n_train_events - 1];
            let (first_test_set, first_test_event) = events[n_train_events];
            for (si, set) in sets.iter().enumerate() {
                if si < last_train_set || (si == last_train_set && si != first_test_set) {
                    append(&mut train, set);
                } else if si > last_train_set {
                    append(&mut test, set);
                } else {
                    let cut = set
                        .epochs
                        .iter()
                        .find(|e| e.event_id == Some(first_test_event))
                        .map(|e| e.start_s)
                        .expect("event comes from this set");
                    for ep in &set.epochs {
                        let dst = if ep.start_s < cut { &mut train } else { &mut test };
                        dst.epochs.push(ep.clone());
                    }
                    for ex in &set.excluded {
                        let dst = if ex.start_s < cut { &mut train } else { &mut test };
                        dst.excluded.push(ex.clone());
                    }
                    test.n_partial += set.n_partial;
                }
            }
        }
    }
    if train.n_seizure() == 0 {
        return Err(Error::Split("no seizure epochs in the training set".into()));
    }
    if test.n_seizure() == 0 {
        return Err(Error::Split("no seizure epochs in the test set".into()));
    }
    Ok((train, test))
}

fn record_of(set: &EpochSet) -> &str {
    set.epochs
        .first()
        .map(|e| e.record_id())
        .or_else(|| set.excluded.first().map(|x| x.record_id.as_str()))
        .unwrap_or("")
}
