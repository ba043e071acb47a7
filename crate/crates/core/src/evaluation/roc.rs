use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Scores `>= threshold` are positive at this point; `+inf` for the
    /// origin.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

impl RocCurve {
    /// Trapezoidal area under the stored points.
    pub fn trapezoid_area(&self) -> f64 {
        self.points
            .windows(2)
            .map(|w| (w[1].fpr - w[0].fpr) * (w[1].tpr + w[0].tpr) / 2.0)
            .sum()
    }
}

/// ROC curve with one point per distinct score, swept from high to low.
///
/// The area is accumulated in integer counts, so it equals the Mann-Whitney
/// statistic (ties counted as one half) up to a single division.
pub fn roc_auc(scores: &[f64], y_true: &[u8]) -> Result<RocCurve> {
    if scores.len() != y_true.len() {
        return Err(Error::DimensionMismatch {
            what: "ROC labels",
            expected: scores.len(),
            got: y_true.len(),
        });
    }
    if scores.iter().any(|s| s.is_nan()) {
        return Err(Error::NonFinite("ROC scores".into()));
    }
    let p = y_true.iter().filter(|&&y| y == 1).count() as u128;
    let n = y_true.len() as u128 - p;
    if p == 0 || n == 0 {
        return Err(Error::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let (mut tp, mut fp) = (0u128, 0u128);
    let mut twice_area = 0u128;
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        let (tp0, fp0) = (tp, fp);
        while i < order.len() && scores[order[i]] == s {
            if y_true[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        twice_area += (fp - fp0) * (tp + tp0);
        points.push(RocPoint {
            fpr: fp as f64 / n as f64,
            tpr: tp as f64 / p as f64,
            threshold: s,
        });
    }
    Ok(RocCurve {
        points,
        auc: twice_area as f64 / (2 * p * n) as f64,
    })
}

/// One `label,fpr,tpr,threshold` row per point.
pub fn write_roc_csv<W: Write>(writer: W, curves: &[(String, &RocCurve)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["config", "fpr", "tpr", "threshold"])?;
    for (label, curve) in curves {
        for p in &curve.points {
            w.write_record([
                label.as_str(),
                &p.fpr.to_string(),
                &p.tpr.to_string(),
                &p.threshold.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_and_tied() {
        let r = roc_auc(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(r.auc, 1.0);
        let r = roc_auc(&[0.3; 6], &[1, 0, 1, 0, 0, 1]).unwrap();
        assert_eq!(r.auc, 0.5);
        assert_eq!(r.points.len(), 2);
    }

    #[test]
    fn endpoints_and_area() {
        let r = roc_auc(&[0.1, 0.4, 0.35, 0.8], &[0, 0, 1, 1]).unwrap();
        assert_eq!(r.auc, 0.75);
        let first = r.points[0];
        let last = *r.points.last().unwrap();
        assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        assert!((r.trapezoid_area() - r.auc).abs() < 1e-15);
    }

    #[test]
    fn single_class_is_an_error() {
        assert!(matches!(roc_auc(&[0.1, 0.2], &[1, 1]), Err(Error::SingleClass)));
    }

    #[test]
    fn csv_layout() {
        let r = roc_auc(&[1.0, 0.0], &[1, 0]).unwrap();
        let mut buf = Vec::new();
        write_roc_csv(&mut buf, &[("LR".into(), &r)]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "config,fpr,tpr,threshold\nLR,0,0,inf\nLR,0,1,1\nLR,1,1,0\n"
        );
    }
}
