use std::path::PathBuf;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use seizembed::classifiers::ModelKind;
use seizembed::features::default_bands;
use seizembed_cli::bench::{cmd_bench, BenchOptions};
use seizembed_cli::config::{Embedded, Overrides, RunConfig};
use seizembed_cli::dataset::{write_synth_dataset, SynthDatasetConfig};
use seizembed_cli::extract::cmd_extract;
use seizembed_cli::run::{cmd_run, RunOptions};

#[derive(Parser)]
#[command(name = "seizembed", version, about = "EEG seizure detection with periodic feature embeddings")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a synthetic EDF dataset described by a TOML file.
    Synth {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Dump per-epoch features of an EDF dataset to CSV.
    Extract {
        /// Dataset directory (<patient>/<record>.edf + summary).
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated patient ids; all when omitted.
        #[arg(long, value_delimiter = ',')]
        patients: Option<Vec<String>>,
        /// Comma-separated channel names; shared channels when omitted.
        #[arg(long, value_delimiter = ',')]
        channels: Option<Vec<String>>,
    },
    /// Train and evaluate every requested model per patient.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Comma-separated model names, e.g. LR,SVM.
        #[arg(long, value_delimiter = ',')]
        models: Option<Vec<ModelKind>>,
        #[arg(long, value_delimiter = ',')]
        patients: Option<Vec<String>>,
        #[arg(long)]
        embedded: Option<Embedded>,
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write ROC curves as SVG.
        #[arg(long)]
        svg: bool,
        /// Save each fitted preprocessor and model as a TOML model file.
        #[arg(long)]
        save_models: bool,
    },
    /// Measure feature extraction and inference throughput.
    Bench {
        #[arg(long, default_value_t = 10_000)]
        epochs: usize,
        #[arg(long, default_value_t = 18)]
        channels: usize,
        #[arg(long, default_value_t = 256.0)]
        sample_rate: f64,
        /// Thread count for the parallel pass; all cores when omitted.
        #[arg(long)]
        threads: Option<usize>,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Write the JSON report here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> Result<()> {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    match Cli::parse().command {
        Command::Synth { config, out } => {
            let cfg = SynthDatasetConfig::load(&config)?;
            let files = write_synth_dataset(&cfg, &out)?;
            log::info!("wrote {} files for {} patients to {}", files.len(), cfg.n_patients, out.display());
        }
        Command::Extract {
            data,
            out,
            patients,
            channels,
        } => {
            let files = cmd_extract(
                &data,
                &out,
                &patients.unwrap_or_default(),
                &channels.unwrap_or_default(),
                &default_bands(),
            )?;
            log::info!("wrote {} feature files to {}", files.len(), out.display());
        }
        Command::Run {
            config,
            out,
            models,
            patients,
            embedded,
            threads,
            seed,
            svg,
            save_models,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            cfg.apply(Overrides {
                out,
                models,
                patients,
                embedded,
                seed,
            });
            let report = cmd_run(&cfg, &RunOptions { threads, svg, save_models })?;
            for a in &report.aggregates {
                println!(
                    "{:<4} {:<8} AUC {:.4} ± {:.4}  sens {:.4}  spec {:.4}  event sens {:.4}  ({} patients)",
                    a.model,
                    if a.embedded { "embedded" } else { "raw" },
                    a.auc_mean,
                    a.auc_std,
                    a.epoch_sensitivity_mean,
                    a.specificity_mean,
                    a.event_sensitivity_mean,
                    a.n_patients
                );
            }
            if !report.failures.is_empty() {
                eprintln!("{} patient(s) skipped; see report.json", report.failures.len());
            }
        }
        Command::Bench {
            epochs,
            channels,
            sample_rate,
            threads,
            seed,
            out,
        } => {
            let report = cmd_bench(&BenchOptions {
                epochs,
                channels,
                sample_rate_hz: sample_rate,
                threads,
                seed,
                ..BenchOptions::default()
            })?;
            eprintln!(
                "embedding parameters: {} ({} features x {} coefficients)",
                report.embedding_parameters,
                report.n_features,
                report.embedding_dim / 2
            );
            eprintln!(
                "single thread: {:.0} epochs/s ({:.2} s); {} threads: {:.0} epochs/s ({:.2} s)",
                report.single_thread.total_epochs_per_s,
                report.single_thread.total_s,
                report.multi_thread.threads,
                report.multi_thread.total_epochs_per_s,
                report.multi_thread.total_s
            );
            let json = serde_json::to_string_pretty(&report)? + "\n";
            match out {
                Some(path) => std::fs::write(&path, json).with_context(|| format!("writing {}", path.display()))?,
                None => print!("{json}"),
            }
        }
    }
    Ok(())
}
