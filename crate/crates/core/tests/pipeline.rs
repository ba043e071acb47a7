use std::sync::Arc;

use proptest::prelude::*;
use seizembed::epoching::{extract_epochs, EPOCH_SECONDS};
use seizembed::features::{default_bands, extract_features};
use seizembed::signal::{synth_recording, EegRecording, SeizureAnnotation, SeizureMode, SynthConfig};

fn flat(duration_s: usize, fs: f64) -> Arc<EegRecording> {
    let n = (duration_s as f64 * fs) as usize;
    Arc::new(EegRecording::new("r", vec!["C".into()], fs, ndarray::Array2::zeros((1, n))).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(128))]

    /// Every window is labelled, excluded or the trailing partial one, and no
    /// kept window touches a seizure boundary.
    #[test]
    fn epoch_accounting(samples in 64usize..1600, cuts in prop::collection::vec(0f64..25.0, 0..6)) {
        let fs = 64.0;
        let rec = Arc::new(EegRecording::new("r", vec!["C".into()], fs, ndarray::Array2::zeros((1, samples))).unwrap());
        let duration = rec.duration_s();
        let mut cuts: Vec<f64> = cuts.into_iter().filter(|&c| c < duration).collect();
        cuts.sort_by(f64::total_cmp);
        cuts.dedup();
        let intervals: Vec<(f64, f64)> = cuts.chunks_exact(2).map(|c| (c[0], c[1])).collect();
        let ann = SeizureAnnotation::new("r", intervals.clone()).unwrap();
        let set = extract_epochs(&rec, &ann).unwrap();
        let windows = duration.ceil() as usize;
        prop_assert_eq!(set.len() + set.n_excluded() + set.n_partial, windows);
        for e in &set.epochs {
            let (a, b) = (e.start_s, e.start_s + EPOCH_SECONDS);
            let inside = intervals.iter().position(|&(s, t)| s <= a && b <= t);
            let touches = intervals.iter().any(|&(s, t)| a < t && s < b);
            prop_assert_eq!(e.label == 1, inside.is_some());
            prop_assert_eq!(e.event_id, inside);
            prop_assert!(inside.is_some() || !touches);
        }
    }
}

#[test]
fn spec_epoch_examples() {
    let rec = flat(10, 32.0);
    let labels = |iv: Vec<(f64, f64)>| {
        let set = extract_epochs(&rec, &SeizureAnnotation::new("r", iv).unwrap()).unwrap();
        (set.epochs.iter().map(|e| (e.start_s, e.label)).collect::<Vec<_>>(), set.n_excluded())
    };
    let (l, ex) = labels(vec![(3.0, 6.0)]);
    assert_eq!(l.iter().map(|p| p.1).collect::<Vec<_>>(), vec![0, 0, 0, 1, 1, 1, 0, 0, 0, 0]);
    assert_eq!(ex, 0);
    let (l, ex) = labels(vec![(3.5, 6.0)]);
    assert_eq!(ex, 1);
    assert!(!l.iter().any(|p| p.0 == 3.0));
    assert!(l.contains(&(4.0, 1)) && l.contains(&(5.0, 1)));
    let (l, ex) = labels(vec![]);
    assert!(l.iter().all(|p| p.1 == 0) && ex == 0);
}

/// Seizure epochs of the high-amplitude mode have larger line-length than
/// background epochs on every channel.
#[test]
fn synthetic_seizures_raise_line_length() {
    let cfg = SynthConfig {
        record_id: "s".into(),
        n_channels: 6,
        sample_rate_hz: 256.0,
        duration_s: 60.0,
        seizure_intervals: vec![(20.0, 35.0)],
        seizure_mode: SeizureMode::HighAmpLowFreq,
        background_amplitude_uv: 20.0,
        seed: 5,
    };
    let (rec, ann) = synth_recording(&cfg).unwrap();
    let set = extract_epochs(&Arc::new(rec), &ann).unwrap();
    let fm = extract_features(&set, &default_bands()).unwrap();
    let per_channel = 1 + default_bands().len();
    for ch in 0..cfg.n_channels {
        let col = ch * per_channel;
        assert!(fm.feature_names[col].ends_with(":LL"));
        let ll = fm.values.column(col);
        let min_seizure = ll.iter().zip(&fm.labels).filter(|(_, &y)| y == 1).map(|(v, _)| *v).fold(f64::MAX, f64::min);
        let max_background = ll.iter().zip(&fm.labels).filter(|(_, &y)| y == 0).map(|(v, _)| *v).fold(f64::MIN, f64::max);
        assert!(min_seizure > max_background, "channel {ch}");
    }
}
