use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use seizembed::signal::read_edf_file;
use seizembed_cli::config::RunConfig;
use seizembed_cli::dataset::{load_patient, SynthDatasetConfig};
use seizembed_cli::run::{cmd_run, RunOptions};

const SMALL_DATASET: &str = r#"
n_patients = 3
events_per_patient = [2, 2]
seizure_duration_s = [10.0, 15.0]
record_duration_s = 120.0
n_channels = 4
sample_rate_hz = 256.0
seizure_mode = "high_amp_low_freq"
background_amplitude_uv = 20.0
seed = 3
"#;

fn seizembed(args: &[&str]) -> Output {
    let out = Command::new(env!("CARGO_BIN_EXE_seizembed"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("spawning seizembed");
    out
}

fn ok(out: &Output) {
    assert!(out.status.success(), "stderr:\n{}", String::from_utf8_lossy(&out.stderr));
}

/// Writes the small dataset spec and generates it under `dir/data`.
fn synth_into(dir: &Path) {
    let spec = dir.join("dataset.toml");
    fs::write(&spec, SMALL_DATASET).unwrap();
    ok(&seizembed(&["synth", "--config", spec.to_str().unwrap(), "--out", dir.join("data").to_str().unwrap()]));
}

fn write_run_config(dir: &Path, extra: &str) -> std::path::PathBuf {
    let path = dir.join("run.toml");
    fs::write(
        &path,
        format!(
            "models = [\"LR\"]\nembedded = \"both\"\n{extra}\n[data]\nkind = \"edf\"\ndir = \"data\"\n\
             [split]\nkind = \"chronological_fraction\"\nfraction = 0.5\n"
        ),
    )
    .unwrap();
    path
}

fn tree(root: &Path) -> Vec<(String, Vec<u8>)> {
    let mut out = Vec::new();
    for entry in fs::read_dir(root).unwrap() {
        let path = entry.unwrap().path();
        if path.is_dir() {
            for (name, bytes) in tree(&path) {
                out.push((format!("{}/{name}", path.file_name().unwrap().to_string_lossy()), bytes));
            }
        } else {
            out.push((path.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&path).unwrap()));
        }
    }
    out.sort();
    out
}

#[test]
fn synth_is_byte_reproducible_and_readable() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    synth_into(a.path());
    synth_into(b.path());
    let (ta, tb) = (tree(&a.path().join("data")), tree(&b.path().join("data")));
    assert_eq!(ta.len(), 6, "three EDF files and three summaries");
    assert!(ta == tb, "synthetic datasets differ");

    let rec = read_edf_file(&a.path().join("data/syn01/syn01_01.edf")).unwrap();
    assert_eq!((rec.n_channels(), rec.duration_s()), (4, 120.0));
    let patient = load_patient(&a.path().join("data"), "syn02", None, &[]).unwrap();
    assert_eq!(patient.records[0].1.intervals.len(), 2);
    // The EDF round trip keeps the generator's seizures where the spec put them.
    let cfg = SynthDatasetConfig::from_toml(SMALL_DATASET).unwrap();
    assert_eq!(patient.records[0].1.intervals, cfg.patient_records(1)[0].seizure_intervals);
}

#[test]
fn extract_writes_one_row_per_epoch() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let out = dir.path().join("features");
    ok(&seizembed(&[
        "extract",
        "--data",
        dir.path().join("data").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--patients",
        "syn01",
    ]));
    let mut reader = csv::Reader::from_path(out.join("syn01_features.csv")).unwrap();
    let header = reader.headers().unwrap().clone();
    assert_eq!(header.len(), 2 + 4 * 4 + 2);
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    let seizure = rows.iter().filter(|r| &r[header.len() - 2] == "1").count();
    // 120 windows minus at most two straddling windows per seizure
    assert!(rows.len() >= 116 && rows.len() <= 120, "{}", rows.len());
    assert!(seizure >= 2 * 9, "{seizure}");
    assert!(!out.join("syn02_features.csv").exists());
}

#[test]
fn run_writes_one_row_per_patient_and_variant() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let config = write_run_config(dir.path(), "seed = 11");
    let out = dir.path().join("out");
    let status = seizembed(&["run", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap(), "--svg"]);
    ok(&status);

    let mut reader = csv::Reader::from_path(out.join("report.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 6);
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 6);
    assert_eq!(json["provenance"]["run_seed"], 11);
    assert_eq!(json["aggregates"].as_array().unwrap().len(), 2);
    assert!(json["failures"].as_array().unwrap().is_empty());
    for p in ["syn01", "syn02", "syn03"] {
        assert!(out.join(format!("roc/{p}.csv")).is_file());
        assert!(out.join(format!("roc/{p}.svg")).is_file());
        assert!(out.join(format!("features/{p}_train.csv")).is_file());
    }
    // stdout carries one summary line per aggregate
    assert_eq!(String::from_utf8_lossy(&status.stdout).lines().count(), 2);
}

#[test]
fn flags_override_the_config_file() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let config = write_run_config(dir.path(), "");
    let out = dir.path().join("out");
    ok(&seizembed(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--patients",
        "syn03",
        "--models",
        "GNB,lr",
        "--embedded",
        "on",
        "--save-models",
    ]));
    let json: serde_json::Value = serde_json::from_slice(&fs::read(out.join("report.json")).unwrap()).unwrap();
    let rows = json["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r["patient_id"] == "syn03" && r["embedded"] == true));
    assert!(out.join("models/syn03-GNB-embedded.toml").is_file());
    assert!(out.join("models/syn03-LR-embedded.toml").is_file());
}

#[test]
fn patient_without_test_seizures_is_skipped() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    // Keep only the first seizure of syn02: a 0.5 split leaves none for testing.
    let summary = dir.path().join("data/syn02/syn02-summary.txt");
    let text = fs::read_to_string(&summary).unwrap();
    let trimmed: String = text
        .lines()
        .filter(|l| !l.starts_with("Seizure 2"))
        .map(|l| if l.starts_with("Number of Seizures") { "Number of Seizures in File: 1" } else { l })
        .collect::<Vec<_>>()
        .join("\n");
    fs::write(&summary, trimmed).unwrap();

    let mut cfg = RunConfig::load(&write_run_config(dir.path(), "")).unwrap();
    cfg.out = Some(dir.path().join("out"));
    let report = cmd_run(&cfg, &RunOptions::default()).unwrap();
    assert_eq!(report.failures.len(), 1);
    assert_eq!(report.failures[0].patient_id, "syn02");
    assert!(report.failures[0].error.contains("test"), "{}", report.failures[0].error);
    assert_eq!(report.rows.len(), 4);
    assert!(report.rows.iter().all(|r| r.patient_id != "syn02"));
}

#[test]
fn empty_dataset_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    fs::create_dir(dir.path().join("data")).unwrap();
    let config = write_run_config(dir.path(), "");
    let out = seizembed(&["run", "--config", config.to_str().unwrap(), "--out", dir.path().join("out").to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("no patients"));
}

#[test]
fn unknown_patient_and_bad_config_are_errors() {
    let dir = tempfile::tempdir().unwrap();
    synth_into(dir.path());
    let config = write_run_config(dir.path(), "");
    let out = seizembed(&[
        "run",
        "--config",
        config.to_str().unwrap(),
        "--out",
        dir.path().join("out").to_str().unwrap(),
        "--patients",
        "chb99",
    ]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("chb99"));

    let typo = write_run_config(dir.path(), "modles = [\"LR\"]");
    let out = seizembed(&["run", "--config", typo.to_str().unwrap()]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("modles"));
}
