//! Epoch and event level metrics, ROC analysis, per-patient reports and
//! their aggregation.

mod report;
mod roc;
mod svg;

pub use report::{aggregate, aggregate_by_config, AggregateRow, EvalReport, EvalRow};
pub use roc::{roc_auc, write_roc_csv, RocCurve, RocPoint};
pub use svg::render_roc_svg;

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::classifiers::{predict_label, Scorer};
use crate::features::FeatureMatrix;
use crate::transform::Preprocessor;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub tp: usize,
    pub fp: usize,
    pub tn: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionCounts {
    pub fn positives(&self) -> usize {
        self.tp + self.fn_
    }

    pub fn negatives(&self) -> usize {
        self.tn + self.fp
    }
}

fn check_aligned(what: &'static str, a: usize, b: usize) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected: a,
            got: b,
        })
    }
}

pub fn confusion(y_true: &[u8], y_pred: &[u8]) -> Result<ConfusionCounts> {
    check_aligned("predictions", y_true.len(), y_pred.len())?;
    if y_true.is_empty() {
        return Err(Error::Empty("confusion counts need at least one epoch"));
    }
    let mut c = ConfusionCounts::default();
    for (&t, &p) in y_true.iter().zip(y_pred) {
        match (t == 1, p == 1) {
            (true, true) => c.tp += 1,
            (true, false) => c.fn_ += 1,
            (false, true) => c.fp += 1,
            (false, false) => c.tn += 1,
        }
    }
    Ok(c)
}

/// `(tp / (tp + fn), tn / (tn + fp))`
pub fn epoch_metrics(c: &ConfusionCounts) -> Result<(f64, f64)> {
    if c.positives() == 0 {
        return Err(Error::Empty("sensitivity is undefined without seizure epochs"));
    }
    if c.negatives() == 0 {
        return Err(Error::Empty("specificity is undefined without non-seizure epochs"));
    }
    Ok((
        c.tp as f64 / c.positives() as f64,
        c.tn as f64 / c.negatives() as f64,
    ))
}

/// Fraction of events with at least one flagged epoch.
pub fn event_sensitivity(event_ids: &[Option<usize>], y_pred: &[u8]) -> Result<f64> {
    check_aligned("predictions", event_ids.len(), y_pred.len())?;
    let events: BTreeSet<usize> = event_ids.iter().flatten().copied().collect();
    if events.is_empty() {
        return Err(Error::Empty("event sensitivity needs at least one seizure event"));
    }
    let detected: BTreeSet<usize> = event_ids
        .iter()
        .zip(y_pred)
        .filter_map(|(e, &p)| e.filter(|_| p == 1))
        .collect();
    Ok(detected.len() as f64 / events.len() as f64)
}

/// Identifies one evaluation in reports.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvalContext {
    pub patient_id: String,
    pub model: String,
    pub embedded: bool,
    pub seed: u64,
    pub split: String,
}

/// Scores `test` through `preprocessor` and `scorer` and computes every
/// metric at `threshold`.
pub fn evaluate(
    scorer: &dyn Scorer,
    preprocessor: &Preprocessor,
    test: &FeatureMatrix,
    threshold: f64,
    ctx: &EvalContext,
) -> Result<(EvalRow, RocCurve)> {
    let x = preprocessor.apply(test)?;
    if x.ncols() != scorer.input_dim() {
        return Err(Error::DimensionMismatch {
            what: "model input",
            expected: scorer.input_dim(),
            got: x.ncols(),
        });
    }
    let scores = scorer.score_batch(x.view())?;
    evaluate_scores(&scores, &test.labels, &test.event_ids, threshold, ctx)
}

/// Metric computation from precomputed scores.
pub fn evaluate_scores(
    scores: &[f64],
    labels: &[u8],
    event_ids: &[Option<usize>],
    threshold: f64,
    ctx: &EvalContext,
) -> Result<(EvalRow, RocCurve)> {
    check_aligned("scores", labels.len(), scores.len())?;
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(Error::NonFinite(format!("score for test epoch {i}")));
    }
    let pred: Vec<u8> = scores.iter().map(|&s| predict_label(s, threshold)).collect();
    let counts = confusion(labels, &pred)?;
    let (sensitivity, specificity) = epoch_metrics(&counts)?;
    let events = event_sensitivity(event_ids, &pred)?;
    let roc = roc_auc(scores, labels)?;
    let row = EvalRow {
        patient_id: ctx.patient_id.clone(),
        model: ctx.model.clone(),
        embedded: ctx.embedded,
        epoch_sensitivity: sensitivity,
        specificity,
        event_sensitivity: events,
        auc: roc.auc,
        threshold,
        seed: ctx.seed,
        split: ctx.split.clone(),
        n_test_epochs: labels.len(),
        n_test_events: event_ids.iter().flatten().collect::<BTreeSet<_>>().len(),
        tp: counts.tp,
        fp: counts.fp,
        tn: counts.tn,
        fn_: counts.fn_,
    };
    Ok((row, roc))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn confusion_examples() {
        let c = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!((c.tp, c.fn_, c.tn, c.fp), (1, 1, 1, 1));
        let c = confusion(&[1, 0, 1], &[1, 0, 1]).unwrap();
        assert_eq!((c.fn_, c.fp), (0, 0));
        let c = confusion(&[1; 4], &[0; 4]).unwrap();
        assert_eq!((c.tp, c.fn_), (0, 4));
        assert!(confusion(&[1], &[1, 0]).is_err());
        assert!(confusion(&[], &[]).is_err());
    }

    #[test]
    fn metric_examples() {
        let m = |tp, fn_, tn, fp| epoch_metrics(&ConfusionCounts { tp, fp, tn, fn_ });
        assert_eq!(m(9, 1, 90, 10).unwrap(), (0.9, 0.9));
        assert_eq!(m(4, 0, 6, 0).unwrap(), (1.0, 1.0));
        assert_eq!(m(0, 5, 5, 0).unwrap(), (0.0, 1.0));
        assert!(m(0, 0, 5, 0).is_err());
        assert!(m(1, 0, 0, 0).is_err());
    }

    #[test]
    fn event_examples() {
        let ids = [Some(0), Some(0), Some(0), None, Some(1), Some(1), Some(1)];
        assert_eq!(event_sensitivity(&ids, &[0, 1, 0, 1, 0, 0, 0]).unwrap(), 0.5);
        assert_eq!(event_sensitivity(&ids, &[1, 1, 1, 0, 1, 1, 1]).unwrap(), 1.0);
        assert!(event_sensitivity(&[None, None], &[1, 1]).is_err());
    }

    struct Constant(f64);

    impl Scorer for Constant {
        fn input_dim(&self) -> usize {
            1
        }
        fn score(&self, _: ndarray::ArrayView1<'_, f64>) -> Result<f64> {
            Ok(self.0)
        }
    }

    fn ctx() -> EvalContext {
        EvalContext {
            patient_id: "p".into(),
            model: "const".into(),
            embedded: false,
            seed: 0,
            split: "test".into(),
        }
    }

    #[test]
    fn constant_scorer_has_half_auc_and_zero_specificity() {
        let fm = FeatureMatrix::new(
            ndarray::Array2::zeros((4, 1)),
            vec!["f".into()],
            vec![0, 1, 1, 0],
            vec![None, Some(0), Some(0), None],
        )
        .unwrap();
        let (row, _) = evaluate(&Constant(0.5), &Preprocessor::Identity, &fm, 0.5, &ctx()).unwrap();
        assert_eq!(row.auc, 0.5);
        assert_eq!(row.specificity, 0.0);
        assert_eq!(row.epoch_sensitivity, 1.0);
        assert!(evaluate(&Constant(0.5), &Preprocessor::Identity, &fm, 0.5, &ctx()).is_ok());
    }
}
