//! `extract`: per-epoch feature dump for external analysis.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};

use seizembed::epoching::extract_epochs;
use seizembed::features::{extract_features, feature_names, BandDef};

use crate::dataset::{list_patients, load_patient};

/// Writes `<out>/<patient>_features.csv` for each patient: record id, epoch
/// start, every feature, label and the record-local event index. Returns
/// the files written.
pub fn cmd_extract(
    data: &Path,
    out: &Path,
    patients: &[String],
    channels: &[String],
    bands: &[BandDef],
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    let ids = if patients.is_empty() {
        list_patients(data)?
    } else {
        patients.to_vec()
    };
    let mut written = Vec::new();
    for id in ids {
        let patient = load_patient(data, &id, None, channels)?;
        let path = out.join(format!("{id}_features.csv"));
        let mut w = csv::Writer::from_path(&path).with_context(|| format!("creating {}", path.display()))?;
        let names = feature_names(patient.records[0].0.channel_names(), bands);
        let mut header = vec!["record_id".to_string(), "start_s".to_string()];
        header.extend(names);
        header.extend(["label".to_string(), "event_id".to_string()]);
        w.write_record(&header)?;
        for (rec, ann) in &patient.records {
            let epochs = extract_epochs(rec, ann)?;
            let fm = extract_features(&epochs, bands)?;
            for (i, epoch) in epochs.epochs.iter().enumerate() {
                let mut record = vec![rec.record_id().to_string(), epoch.start_s.to_string()];
                record.extend(fm.row(i).iter().map(|v| v.to_string()));
                record.push(epoch.label.to_string());
                record.push(epoch.event_id.map(|e| e.to_string()).unwrap_or_default());
                w.write_record(&record)?;
            }
        }
        w.flush()?;
        written.push(path);
    }
    Ok(written)
}
