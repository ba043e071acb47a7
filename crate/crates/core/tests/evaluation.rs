use proptest::prelude::*;
use seizembed::classifiers::Scorer;
use seizembed::evaluation::{
    aggregate, confusion, epoch_metrics, evaluate, evaluate_scores, event_sensitivity, roc_auc,
    EvalContext, EvalRow,
};
use seizembed::features::FeatureMatrix;
use seizembed::rng::SeededRng;
use seizembed::transform::Preprocessor;
use seizembed::Result;

/// Pairwise count with ties as one half.
fn mann_whitney(scores: &[f64], y: &[u8]) -> f64 {
    let mut num = 0.0;
    let mut pairs = 0.0;
    for i in 0..scores.len() {
        for j in 0..scores.len() {
            if y[i] == 1 && y[j] == 0 {
                pairs += 1.0;
                if scores[i] > scores[j] {
                    num += 1.0;
                } else if scores[i] == scores[j] {
                    num += 0.5;
                }
            }
        }
    }
    num / pairs
}

fn labelled_scores() -> impl Strategy<Value = (Vec<f64>, Vec<u8>)> {
    (2usize..200).prop_flat_map(|n| {
        (
            prop_oneof![
                prop::collection::vec(-5f64..5.0, n),
                prop::collection::vec((0i32..4).prop_map(f64::from), n),
            ],
            prop::collection::vec(0u8..2, n),
        )
    })
    .prop_filter("both classes", |(_, y)| y.contains(&0) && y.contains(&1))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    #[test]
    fn auc_equals_mann_whitney((scores, y) in labelled_scores()) {
        let roc = roc_auc(&scores, &y).unwrap();
        prop_assert!((roc.auc - mann_whitney(&scores, &y)).abs() <= 1e-12);
        prop_assert!((roc.auc - roc.trapezoid_area()).abs() <= 1e-12);
        let first = roc.points[0];
        let last = roc.points[roc.points.len() - 1];
        prop_assert_eq!((first.fpr, first.tpr), (0.0, 0.0));
        prop_assert_eq!((last.fpr, last.tpr), (1.0, 1.0));
        for w in roc.points.windows(2) {
            prop_assert!(w[0].fpr <= w[1].fpr && w[0].tpr <= w[1].tpr);
        }
    }

    #[test]
    fn auc_is_rank_invariant((scores, y) in labelled_scores()) {
        let warped: Vec<f64> = scores.iter().map(|s| s * s * s + s).collect();
        prop_assert_eq!(roc_auc(&scores, &y).unwrap().auc, roc_auc(&warped, &y).unwrap().auc);
    }

    /// Brute force over explicit event sets.
    #[test]
    fn event_sensitivity_matches_sets(ids in prop::collection::vec(prop::option::of(0usize..4), 1..12), pred_bits in prop::collection::vec(0u8..2, 12)) {
        prop_assume!(ids.iter().any(Option::is_some));
        let pred = &pred_bits[..ids.len()];
        let mut events = std::collections::HashSet::new();
        let mut hit = std::collections::HashSet::new();
        for (e, &p) in ids.iter().zip(pred) {
            if let Some(e) = e {
                events.insert(*e);
                if p == 1 {
                    hit.insert(*e);
                }
            }
        }
        let got = event_sensitivity(&ids, pred).unwrap();
        prop_assert_eq!(got, hit.len() as f64 / events.len() as f64);
        let y: Vec<u8> = ids.iter().map(|e| e.is_some() as u8).collect();
        if y.contains(&0) {
            let (sens, _) = epoch_metrics(&confusion(&y, pred).unwrap()).unwrap();
            if sens == 1.0 {
                prop_assert_eq!(got, 1.0);
            }
        }
    }
}

fn ctx(model: &str) -> EvalContext {
    EvalContext {
        patient_id: "p01".into(),
        model: model.into(),
        embedded: false,
        seed: 5,
        split: "fixture".into(),
    }
}

struct TrueLabel;

impl Scorer for TrueLabel {
    fn input_dim(&self) -> usize {
        1
    }
    fn score(&self, x: ndarray::ArrayView1<'_, f64>) -> Result<f64> {
        Ok(x[0])
    }
}

#[test]
fn oracle_model_scores_perfectly() {
    let labels = vec![0, 0, 1, 1, 0, 1, 0];
    let values = ndarray::Array2::from_shape_fn((7, 1), |(r, _)| labels[r] as f64);
    let events = vec![None, None, Some(0), Some(0), None, Some(1), None];
    let fm = FeatureMatrix::new(values, vec!["label".into()], labels, events).unwrap();
    let (row, _) = evaluate(&TrueLabel, &Preprocessor::Identity, &fm, 0.5, &ctx("oracle")).unwrap();
    assert_eq!(
        (row.epoch_sensitivity, row.specificity, row.event_sensitivity, row.auc),
        (1.0, 1.0, 1.0, 1.0)
    );
}

/// Twenty epochs worked through by hand.
#[test]
fn hand_computed_fixture() {
    let scores = [
        0.10, 0.20, 0.70, 0.05, 0.30, // background; one false alarm at 0.70
        0.80, 0.40, 0.90, // event 0: two of three flagged
        0.15, 0.25, 0.35, 0.45, 0.05, // background
        0.30, 0.20, // event 1: missed
        0.60, 0.10, 0.50, 0.20, 0.10, // background; 0.60 and 0.50 flagged
    ];
    let labels: Vec<u8> = (0..20).map(|i| matches!(i, 5 | 6 | 7 | 13 | 14) as u8).collect();
    let events: Vec<Option<usize>> = (0..20)
        .map(|i| match i {
            5..=7 => Some(0),
            13 | 14 => Some(1),
            _ => None,
        })
        .collect();
    let (row, roc) = evaluate_scores(&scores, &labels, &events, 0.5, &ctx("fixture")).unwrap();
    // tp = 2 (0.8, 0.9), fn = 3, fp = 3 (0.7, 0.6, 0.5), tn = 12
    assert_eq!((row.tp, row.fn_, row.fp, row.tn), (2, 3, 3, 12));
    assert_eq!(row.epoch_sensitivity, 0.4);
    assert_eq!(row.specificity, 0.8);
    assert_eq!(row.event_sensitivity, 0.5);
    // Positive ranks against 15 negatives:
    // 0.9 and 0.8 beat all 15; 0.4 beats 11; 0.3 beats 9 and ties 1 (0.30);
    // 0.2 beats 6 and ties 2 (0.20, 0.20). (30 + 11 + 9.5 + 7) / 75
    let expected = (15.0 + 15.0 + 11.0 + 9.5 + 7.0) / 75.0;
    assert!((row.auc - expected).abs() < 1e-15, "{} vs {expected}", row.auc);
    assert_eq!(roc.auc, row.auc);
    assert_eq!(row.n_test_events, 2);
}

#[test]
fn aggregate_matches_naive_recomputation() {
    let mut rng = SeededRng::new(99);
    let rows: Vec<EvalRow> = (0..24)
        .map(|p| EvalRow {
            patient_id: format!("p{p:02}"),
            model: "SVM".into(),
            embedded: true,
            epoch_sensitivity: rng.uniform(),
            specificity: rng.uniform(),
            event_sensitivity: rng.uniform(),
            auc: rng.uniform(),
            threshold: 0.0,
            seed: p,
            split: "s".into(),
            n_test_epochs: 10,
            n_test_events: 1,
            tp: 1,
            fp: 1,
            tn: 1,
            fn_: 1,
        })
        .collect();
    let agg = aggregate(&rows).unwrap();
    let naive = |f: &dyn Fn(&EvalRow) -> f64| {
        let mut sum = 0.0;
        for r in &rows {
            sum += f(r);
        }
        let mean = sum / 24.0;
        let mut ss = 0.0;
        for r in &rows {
            ss += (f(r) - mean) * (f(r) - mean);
        }
        (mean, (ss / 24.0).sqrt())
    };
    let close = |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() < 1e-12 && (a.1 - b.1).abs() < 1e-12;
    assert!(close((agg.auc_mean, agg.auc_std), naive(&|r| r.auc)));
    assert!(close((agg.specificity_mean, agg.specificity_std), naive(&|r| r.specificity)));
    assert!(close(
        (agg.epoch_sensitivity_mean, agg.epoch_sensitivity_std),
        naive(&|r| r.epoch_sensitivity)
    ));
    assert!(close(
        (agg.event_sensitivity_mean, agg.event_sensitivity_std),
        naive(&|r| r.event_sensitivity)
    ));

    let same = vec![rows[0].clone(); 5];
    let a = aggregate(&same).unwrap();
    assert_eq!((a.auc_mean, a.auc_std), (rows[0].auc, 0.0));
}
