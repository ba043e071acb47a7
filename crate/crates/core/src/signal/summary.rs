//! CHB-MIT `<patient>-summary.txt` sidecar files.
//!
//! Only the per-file blocks matter here:
//!
//! ```text
//! File Name: chb01_03.edf
//! File Start Time: 13:43:04
//! File End Time: 14:43:04
//! Number of Seizures in File: 1
//! Seizure Start Time: 2996 seconds
//! Seizure End Time: 3036 seconds
//! ```
//!
//! Some patients number their seizures (`Seizure 1 Start Time: ...`).

use std::fmt::Write as _;

use super::SeizureAnnotation;
use crate::{Error, Result};

struct Block {
    line: usize,
    record_id: String,
    declared: Option<usize>,
    starts: Vec<f64>,
    ends: Vec<f64>,
}

impl Block {
    fn finish(self) -> Result<SeizureAnnotation> {
        let err = |msg: String| Error::Summary {
            line: self.line,
            msg,
        };
        let declared = self.declared.ok_or_else(|| {
            err(format!("`{}` has no \"Number of Seizures in File\" line", self.record_id))
        })?;
        if self.starts.len() != declared || self.ends.len() != declared {
            return Err(err(format!(
                "`{}` declares {declared} seizures but lists {} start and {} end times",
                self.record_id,
                self.starts.len(),
                self.ends.len()
            )));
        }
        let intervals: Vec<(f64, f64)> =
            self.starts.iter().copied().zip(self.ends.iter().copied()).collect();
        if let Some(&(s, e)) = intervals.iter().find(|(s, e)| e <= s) {
            return Err(err(format!(
                "`{}` has seizure end {e} not after start {s}",
                self.record_id
            )));
        }
        SeizureAnnotation::new(self.record_id.clone(), intervals).map_err(|e| err(e.to_string()))
    }
}

fn seconds(value: &str, line: usize) -> Result<f64> {
    let number = value.trim().trim_end_matches("seconds").trim();
    number.parse::<f64>().map_err(|_| Error::Summary {
        line,
        msg: format!("`{}` is not a time in seconds", value.trim()),
    })
}

/// Parses every file block of a summary file, in file order.
pub fn read_chb_summary(text: &str) -> Result<Vec<SeizureAnnotation>> {
    let mut out = Vec::new();
    let mut current: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        let Some((key, value)) = line.split_once(':') else {
            continue;
        };
        let key = key.trim();
        if key == "File Name" {
            if let Some(block) = current.take() {
                out.push(block.finish()?);
            }
            let name = value.trim();
            let record_id = name.strip_suffix(".edf").unwrap_or(name).to_string();
            current = Some(Block {
                line: line_no,
                record_id,
                declared: None,
                starts: Vec::new(),
                ends: Vec::new(),
            });
            continue;
        }
        let Some(block) = current.as_mut() else {
            continue;
        };
        if key == "Number of Seizures in File" {
            let n = value.trim().parse::<usize>().map_err(|_| Error::Summary {
                line: line_no,
                msg: format!("`{}` is not a seizure count", value.trim()),
            })?;
            block.declared = Some(n);
        } else if key.starts_with("Seizure") && key.ends_with("Start Time") {
            block.starts.push(seconds(value, line_no)?);
        } else if key.starts_with("Seizure") && key.ends_with("End Time") {
            block.ends.push(seconds(value, line_no)?);
        }
    }
    if let Some(block) = current.take() {
        out.push(block.finish()?);
    }
    Ok(out)
}

/// Renders annotations in the summary format accepted by [`read_chb_summary`].
pub fn write_chb_summary(
    patient_id: &str,
    sample_rate_hz: f64,
    channel_names: &[String],
    annotations: &[SeizureAnnotation],
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "Seizure summary for {patient_id}");
    let _ = writeln!(s, "Data Sampling Rate: {sample_rate_hz} Hz");
    let _ = writeln!(s, "*************************\n");
    let _ = writeln!(s, "Channels in EDF Files:");
    let _ = writeln!(s, "**********************");
    for (i, name) in channel_names.iter().enumerate() {
        let _ = writeln!(s, "Channel {}: {name}", i + 1);
    }
    for ann in annotations {
        let _ = writeln!(s);
        let _ = writeln!(s, "File Name: {}.edf", ann.record_id);
        let _ = writeln!(s, "Number of Seizures in File: {}", ann.intervals.len());
        for (i, (start, end)) in ann.intervals.iter().enumerate() {
            let _ = writeln!(s, "Seizure {} Start Time: {start} seconds", i + 1);
            let _ = writeln!(s, "Seizure {} End Time: {end} seconds", i + 1);
        }
    }
    s
}
