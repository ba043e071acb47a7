//! `run`: split, extract, transform, train and evaluate per patient.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::Serialize;

use seizembed::classifiers::{fit, ModelKind};
use seizembed::epoching::{extract_epochs, split, EpochSet, SplitKind};
use seizembed::evaluation::{
    evaluate, render_roc_svg, write_roc_csv, AggregateRow, EvalContext, EvalReport, EvalRow,
    RocCurve,
};
use seizembed::features::{extract_features, FeatureMatrix};
use seizembed::model_file::ModelFile;
use seizembed::rng::derive_seed;
use seizembed::transform::Preprocessor;

use crate::config::{DataSource, RunConfig};
use crate::dataset::{list_patients, load_patient, synth_patient, PatientData, SynthDatasetConfig};

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    /// Worker threads; `None` uses every core.
    pub threads: Option<usize>,
    pub svg: bool,
    pub save_models: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Failure {
    pub patient_id: String,
    pub error: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub config_sha256: String,
    pub config: RunConfig,
    pub run_seed: u64,
    pub transform_seed: u64,
    pub split: String,
    /// Root seed of each patient; model seeds derive from it by model name.
    pub patient_seeds: BTreeMap<String, u64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunReport {
    pub provenance: Provenance,
    pub rows: Vec<EvalRow>,
    pub aggregates: Vec<AggregateRow>,
    pub failures: Vec<Failure>,
}

pub fn patient_seed(run_seed: u64, patient_id: &str) -> u64 {
    derive_seed(run_seed, &format!("patient/{patient_id}"))
}

pub fn model_seed(patient_seed: u64, kind: ModelKind) -> u64 {
    derive_seed(patient_seed, kind.as_str())
}

struct PatientResult {
    rows: Vec<EvalRow>,
    curves: Vec<(String, RocCurve)>,
    train: FeatureMatrix,
    test: FeatureMatrix,
    models: Vec<(String, ModelFile)>,
}

fn patient_ids(cfg: &RunConfig) -> Result<Vec<String>> {
    let all = match &cfg.data {
        DataSource::Edf { dir } => list_patients(dir)?,
        DataSource::Synth { spec } => {
            let synth = SynthDatasetConfig::load(spec)?;
            (0..synth.n_patients).map(SynthDatasetConfig::patient_id).collect()
        }
    };
    if cfg.patients.is_empty() {
        if all.is_empty() {
            bail!("dataset contains no patients");
        }
        return Ok(all);
    }
    for p in &cfg.patients {
        if !all.contains(p) {
            bail!("patient `{p}` not found in dataset");
        }
    }
    let mut ids = cfg.patients.clone();
    ids.sort();
    ids.dedup();
    Ok(ids)
}

fn load(cfg: &RunConfig, patient_id: &str) -> Result<PatientData> {
    match &cfg.data {
        DataSource::Edf { dir } => {
            // A record-list split only needs the records it names.
            let records: Option<Vec<String>> = match &cfg.split.kind {
                SplitKind::ByRecordList { train, test } => {
                    Some(train.iter().chain(test).cloned().collect())
                }
                SplitKind::ChronologicalFraction { .. } => None,
            };
            load_patient(dir, patient_id, records.as_deref(), &cfg.channels)
        }
        DataSource::Synth { spec } => {
            let synth = SynthDatasetConfig::load(spec)?;
            let index = (0..synth.n_patients)
                .find(|&i| SynthDatasetConfig::patient_id(i) == patient_id)
                .context("unknown synthetic patient")?;
            let mut data = synth_patient(&synth, index)?;
            if !cfg.channels.is_empty() {
                for (rec, _) in &mut data.records {
                    *rec = std::sync::Arc::new(rec.select_channels(&cfg.channels)?);
                }
            }
            Ok(data)
        }
    }
}

fn run_patient(cfg: &RunConfig, patient_id: &str, save_models: bool) -> Result<PatientResult> {
    let data = load(cfg, patient_id)?;
    let sets = data
        .records
        .iter()
        .map(|(rec, ann)| extract_epochs(rec, ann))
        .collect::<seizembed::Result<Vec<EpochSet>>>()?;
    let (train_epochs, test_epochs) = split(&sets, &cfg.split)?;
    drop(sets);
    let train = extract_features(&train_epochs, &cfg.bands)?;
    let test = extract_features(&test_epochs, &cfg.bands)?;
    drop((train_epochs, test_epochs));
    log::info!(
        "{patient_id}: {} train epochs ({} seizure), {} test epochs ({} seizure)",
        train.n_rows(),
        train.labels.iter().filter(|&&y| y == 1).count(),
        test.n_rows(),
        test.labels.iter().filter(|&&y| y == 1).count(),
    );

    let pseed = patient_seed(cfg.seed, patient_id);
    let mut rows = Vec::new();
    let mut curves = Vec::new();
    let mut models = Vec::new();
    for embedded in cfg.embedded.variants() {
        let pre = if embedded {
            Preprocessor::fit_periodic(&train, &cfg.transform)?
        } else {
            Preprocessor::Identity
        };
        let x_train = pre.apply(&train)?;
        for &kind in &cfg.models {
            let seed = model_seed(pseed, kind);
            let model = fit(x_train.view(), &train.labels, &cfg.train_config(kind, seed))?;
            if !model.meta.converged {
                log::warn!("{patient_id}: {kind} stopped before convergence");
            }
            let ctx = EvalContext {
                patient_id: patient_id.to_string(),
                model: kind.to_string(),
                embedded,
                seed,
                split: cfg.split.describe(),
            };
            let (row, roc) = evaluate(&model, &pre, &test, cfg.threshold(kind), &ctx)?;
            let label = format!("{kind} {}", if embedded { "embedded" } else { "raw" });
            if save_models {
                models.push((label.replace(' ', "-"), ModelFile::new(pre.clone(), Some(model))));
            }
            rows.push(row);
            curves.push((label, roc));
        }
    }
    Ok(PatientResult {
        rows,
        curves,
        train,
        test,
        models,
    })
}

fn write_features(path: &Path, fm: &FeatureMatrix) -> Result<()> {
    let file = fs::File::create(path).with_context(|| format!("creating {}", path.display()))?;
    fm.write_csv(std::io::BufWriter::new(file))?;
    Ok(())
}

fn write_outputs(out: &Path, patient_id: &str, res: &PatientResult, svg: bool) -> Result<()> {
    write_features(&out.join("features").join(format!("{patient_id}_train.csv")), &res.train)?;
    write_features(&out.join("features").join(format!("{patient_id}_test.csv")), &res.test)?;
    let labelled: Vec<(String, &RocCurve)> = res.curves.iter().map(|(l, c)| (l.clone(), c)).collect();
    let roc_csv = out.join("roc").join(format!("{patient_id}.csv"));
    write_roc_csv(fs::File::create(&roc_csv)?, &labelled)?;
    if svg {
        let path = out.join("roc").join(format!("{patient_id}.svg"));
        fs::write(&path, render_roc_svg(&format!("ROC, {patient_id}"), &labelled))?;
    }
    for (label, file) in &res.models {
        file.save(out.join("models").join(format!("{patient_id}-{label}.toml")))?;
    }
    Ok(())
}

/// Runs every patient and writes `report.csv`, `aggregate.csv`,
/// `report.json`, per-patient feature and ROC files under the output
/// directory. Fails only when no patient succeeds.
pub fn cmd_run(cfg: &RunConfig, opts: &RunOptions) -> Result<RunReport> {
    cfg.validate()?;
    let out: PathBuf = cfg.out.clone().context("no output directory (set `out` or pass --out)")?;
    for sub in ["features", "roc"] {
        fs::create_dir_all(out.join(sub)).with_context(|| format!("creating {}", out.display()))?;
    }
    if opts.save_models {
        fs::create_dir_all(out.join("models"))?;
    }
    let patients = patient_ids(cfg)?;

    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = opts.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("building thread pool")?;
    let results: Vec<(String, Result<PatientResult>)> = pool.install(|| {
        patients
            .par_iter()
            .map(|p| (p.clone(), run_patient(cfg, p, opts.save_models)))
            .collect()
    });

    let mut rows = Vec::new();
    let mut failures = Vec::new();
    for (patient_id, res) in results {
        match res {
            Ok(res) => {
                write_outputs(&out, &patient_id, &res, opts.svg)?;
                rows.extend(res.rows);
            }
            Err(e) => {
                log::error!("{patient_id}: skipped: {e:#}");
                failures.push(Failure {
                    patient_id,
                    error: format!("{e:#}"),
                });
            }
        }
    }
    if rows.is_empty() {
        bail!("all {} patients failed", patients.len());
    }

    let report = EvalReport::from_rows(rows);
    report.write_rows_csv(fs::File::create(out.join("report.csv"))?)?;
    report.write_aggregate_csv(fs::File::create(out.join("aggregate.csv"))?)?;
    let provenance = Provenance {
        tool: "seizembed",
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: cfg.hash(),
        config: RunConfig {
            out: None,
            ..cfg.clone()
        },
        run_seed: cfg.seed,
        transform_seed: cfg.transform.seed,
        split: cfg.split.describe(),
        patient_seeds: patients.iter().map(|p| (p.clone(), patient_seed(cfg.seed, p))).collect(),
    };
    let run_report = RunReport {
        provenance,
        rows: report.rows,
        aggregates: report.aggregates,
        failures,
    };
    let json = serde_json::to_string_pretty(&run_report)?;
    fs::write(out.join("report.json"), json + "\n")?;
    Ok(run_report)
}
