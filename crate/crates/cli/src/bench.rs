//! `bench`: throughput of feature extraction and embedded inference.

use std::sync::Arc;
use std::time::Instant;

use anyhow::{ensure, Context, Result};
use ndarray::{concatenate, Array2, Axis};
use serde::Serialize;
use sha2::{Digest, Sha256};

use seizembed::classifiers::{fit, ModelKind, Scorer, TrainConfig};
use seizembed::epoching::{extract_epochs, EpochSet};
use seizembed::features::{default_bands, extract_features, BandDef, FeatureMatrix};
use seizembed::signal::{synth_recording, SeizureMode, SynthConfig};
use seizembed::transform::{Preprocessor, TransformSettings};

#[derive(Debug, Clone)]
pub struct BenchOptions {
    pub epochs: usize,
    pub channels: usize,
    pub sample_rate_hz: f64,
    /// Epochs generated per synthetic recording; bounds memory.
    pub chunk_epochs: usize,
    /// Thread count of the parallel run; `None` uses every core.
    pub threads: Option<usize>,
    pub seed: u64,
}

impl Default for BenchOptions {
    fn default() -> Self {
        Self {
            epochs: 10_000,
            channels: 18,
            sample_rate_hz: 256.0,
            chunk_epochs: 1000,
            threads: None,
            seed: 1,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct StageTiming {
    pub threads: usize,
    pub feature_s: f64,
    pub inference_s: f64,
    pub total_s: f64,
    pub feature_epochs_per_s: f64,
    pub inference_epochs_per_s: f64,
    pub total_epochs_per_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub epochs: usize,
    pub channels: usize,
    pub sample_rate_hz: f64,
    pub n_features: usize,
    pub embedding_dim: usize,
    pub embedding_parameters: usize,
    pub single_thread: StageTiming,
    pub multi_thread: StageTiming,
    /// Scores from both runs hash to the same value.
    pub outputs_identical: bool,
    pub score_sha256: String,
}

/// Recording configs covering `epochs` one-second epochs.
fn chunk_configs(opts: &BenchOptions) -> Vec<SynthConfig> {
    let mut remaining = opts.epochs;
    let mut out = Vec::new();
    while remaining > 0 {
        let n = remaining.min(opts.chunk_epochs);
        let i = out.len();
        // One seizure per chunk keeps both classes present.
        let seizure = (n >= 20).then(|| vec![(n as f64 * 0.4, n as f64 * 0.4 + 10.0)]);
        out.push(SynthConfig {
            record_id: format!("bench_{i:03}"),
            n_channels: opts.channels,
            sample_rate_hz: opts.sample_rate_hz,
            duration_s: n as f64,
            seizure_intervals: seizure.unwrap_or_default(),
            seizure_mode: SeizureMode::HighAmpLowFreq,
            background_amplitude_uv: 20.0,
            seed: seizembed::rng::derive_seed(opts.seed, &format!("bench-{i}")),
        });
        remaining -= n;
    }
    out
}

fn epochs_of(cfg: &SynthConfig) -> Result<EpochSet> {
    let (rec, ann) = synth_recording(cfg)?;
    Ok(extract_epochs(&Arc::new(rec), &ann)?)
}

struct Pass {
    timing: StageTiming,
    scores: Vec<f64>,
}

/// Times feature extraction over every chunk (generation excluded), then
/// quantile + embedding + scoring over all extracted rows.
fn timed_pass(
    configs: &[SynthConfig],
    bands: &[BandDef],
    pre: &Preprocessor,
    model: &dyn Scorer,
    threads: usize,
) -> Result<Pass> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
    pool.install(|| {
        let mut feature_s = 0.0;
        let mut blocks: Vec<Array2<f64>> = Vec::with_capacity(configs.len());
        let mut n_epochs = 0;
        for cfg in configs {
            let epochs = epochs_of(cfg)?;
            let t = Instant::now();
            let fm = extract_features(&epochs, bands)?;
            feature_s += t.elapsed().as_secs_f64();
            n_epochs += fm.n_rows();
            blocks.push(fm.values);
        }
        let views: Vec<_> = blocks.iter().map(|b| b.view()).collect();
        let all = concatenate(Axis(0), &views)?;
        let t = Instant::now();
        let x = pre.apply_values(all.view())?;
        let scores = model.score_batch(x.view())?;
        let inference_s = t.elapsed().as_secs_f64();
        let total_s = feature_s + inference_s;
        let rate = |s: f64| n_epochs as f64 / s.max(f64::MIN_POSITIVE);
        Ok(Pass {
            timing: StageTiming {
                threads,
                feature_s,
                inference_s,
                total_s,
                feature_epochs_per_s: rate(feature_s),
                inference_epochs_per_s: rate(inference_s),
                total_epochs_per_s: rate(total_s),
            },
            scores,
        })
    })
}

fn hash_scores(scores: &[f64]) -> String {
    let mut h = Sha256::new();
    for s in scores {
        h.update(s.to_le_bytes());
    }
    hex::encode(h.finalize())
}

pub fn cmd_bench(opts: &BenchOptions) -> Result<BenchReport> {
    ensure!(opts.epochs > 0 && opts.channels > 0, "epochs and channels must be positive");
    ensure!(opts.chunk_epochs > 0, "chunk_epochs must be positive");
    let bands = default_bands();
    let settings = TransformSettings::default();
    let configs = chunk_configs(opts);

    // Untimed warm-up doubles as the training set for the scorer.
    let warm = epochs_of(&configs[0])?;
    let train: FeatureMatrix = extract_features(&warm, &bands)?;
    let pre = Preprocessor::fit_periodic(&train, &settings)?;
    let x_train = pre.apply(&train)?;
    let model = fit(x_train.view(), &train.labels, &TrainConfig::new(ModelKind::Lr, opts.seed))
        .context("training the benchmark scorer")?;

    let threads = opts.threads.unwrap_or_else(rayon::current_num_threads);
    let single = timed_pass(&configs, &bands, &pre, &model, 1)?;
    let multi = timed_pass(&configs, &bands, &pre, &model, threads)?;
    let single_hash = hash_scores(&single.scores);
    let embedding_parameters = match &pre {
        Preprocessor::Periodic { embedder, .. } => embedder.n_parameters(),
        Preprocessor::Identity => 0,
    };
    Ok(BenchReport {
        epochs: single.scores.len(),
        channels: opts.channels,
        sample_rate_hz: opts.sample_rate_hz,
        n_features: train.n_features(),
        embedding_dim: settings.dim,
        embedding_parameters,
        outputs_identical: single_hash == hash_scores(&multi.scores),
        score_sha256: single_hash,
        single_thread: single.timing,
        multi_thread: multi.timing,
    })
}
