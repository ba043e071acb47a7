//! Seizure detection from scalp EEG with periodic feature embeddings.
//!
//! The pipeline runs EDF ingestion, 1-second epoch labeling, four biomarkers
//! per channel (line-length plus alpha/beta/gamma band power), a quantile
//! transform, a fixed random periodic embedding, one of six classifiers,
//! and epoch/event level evaluation with ROC curves.
//!
//! ```no_run
//! use std::sync::Arc;
//! use seizembed::signal::{synth_recording, SeizureMode, SynthConfig};
//! use seizembed::epoching::extract_epochs;
//! use seizembed::features::{default_bands, extract_features};
//!
//! let cfg = SynthConfig {
//!     record_id: "p01_01".into(),
//!     n_channels: 4,
//!     sample_rate_hz: 256.0,
//!     duration_s: 120.0,
//!     seizure_intervals: vec![(40.0, 60.0)],
//!     seizure_mode: SeizureMode::HighAmpLowFreq,
//!     background_amplitude_uv: 20.0,
//!     seed: 7,
//! };
//! let (rec, ann) = synth_recording(&cfg).unwrap();
//! let epochs = extract_epochs(&Arc::new(rec), &ann).unwrap();
//! let features = extract_features(&epochs, &default_bands()).unwrap();
//! assert_eq!(features.n_features(), 16);
//! ```

pub mod classifiers;
pub mod epoching;
pub mod error;
pub mod evaluation;
pub mod features;
pub mod model_file;
pub mod rng;
pub mod signal;
pub mod transform;

pub use error::{Error, Result};
