use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Test-set metrics for one patient, model and preprocessing choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub patient_id: String,
    pub model: String,
    pub embedded: bool,
    pub epoch_sensitivity: f64,
    pub specificity: f64,
    pub event_sensitivity: f64,
    pub auc: f64,
    pub threshold: f64,
    pub seed: u64,
    pub split: String,
    pub n_test_epochs: usize,
    pub n_test_events: usize,
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

/// Unweighted per-patient mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub model: String,
    pub embedded: bool,
    pub n_patients: usize,
    pub epoch_sensitivity_mean: f64,
    pub epoch_sensitivity_std: f64,
    pub specificity_mean: f64,
    pub specificity_std: f64,
    pub event_sensitivity_mean: f64,
    pub event_sensitivity_std: f64,
    pub auc_mean: f64,
    pub auc_std: f64,
}

fn mean_std(values: impl Iterator<Item = f64> + Clone) -> (f64, f64) {
    let n = values.clone().count() as f64;
    let mean = values.clone().sum::<f64>() / n;
    let var = values.map(|v| (v - mean).powi(2)).sum::<f64>() / n;
    (mean, var.sqrt())
}

/// Aggregates rows that share a configuration. Mixed model or embedding
/// labels are reported as `*`.
pub fn aggregate(rows: &[EvalRow]) -> Result<AggregateRow> {
    let first = rows.first().ok_or(Error::Empty("aggregate needs at least one row"))?;
    let model = if rows.iter().all(|r| r.model == first.model) {
        first.model.clone()
    } else {
        "*".into()
    };
    let (es, es_sd) = mean_std(rows.iter().map(|r| r.epoch_sensitivity));
    let (sp, sp_sd) = mean_std(rows.iter().map(|r| r.specificity));
    let (ev, ev_sd) = mean_std(rows.iter().map(|r| r.event_sensitivity));
    let (auc, auc_sd) = mean_std(rows.iter().map(|r| r.auc));
    Ok(AggregateRow {
        model,
        embedded: first.embedded,
        n_patients: rows.len(),
        epoch_sensitivity_mean: es,
        epoch_sensitivity_std: es_sd,
        specificity_mean: sp,
        specificity_std: sp_sd,
        event_sensitivity_mean: ev,
        event_sensitivity_std: ev_sd,
        auc_mean: auc,
        auc_std: auc_sd,
    })
}

/// One aggregate per (model, embedded), ordered by model then raw before
/// embedded. Rows within a group keep their input order.
pub fn aggregate_by_config(rows: &[EvalRow]) -> Vec<AggregateRow> {
    let mut groups: BTreeMap<(&str, bool), Vec<EvalRow>> = BTreeMap::new();
    for r in rows {
        groups.entry((&r.model, r.embedded)).or_default().push(r.clone());
    }
    groups
        .values()
        .map(|g| aggregate(g).expect("groups are non-empty"))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
    pub aggregates: Vec<AggregateRow>,
}

impl EvalReport {
    /// Sorts rows by (patient, model, embedded) and recomputes aggregates.
    pub fn from_rows(mut rows: Vec<EvalRow>) -> Self {
        rows.sort_by(|a, b| {
            (&a.patient_id, &a.model, a.embedded).cmp(&(&b.patient_id, &b.model, b.embedded))
        });
        let aggregates = aggregate_by_config(&rows);
        Self { rows, aggregates }
    }

    pub fn write_rows_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv(writer, &self.rows)
    }

    pub fn write_aggregate_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_csv(writer, &self.aggregates)
    }
}

fn write_csv<W: Write, T: Serialize>(writer: W, rows: &[T]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}
