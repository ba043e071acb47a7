//! Run configuration: one TOML file plus command-line overrides.

use std::collections::BTreeMap;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use anyhow::{bail, ensure, Context, Result};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use seizembed::classifiers::knn::KnnParams;
use seizembed::classifiers::logistic::LogisticParams;
use seizembed::classifiers::mlp::MlpParams;
use seizembed::classifiers::naive_bayes::{BernoulliNbParams, GaussianNbParams};
use seizembed::classifiers::svm::SvmParams;
use seizembed::classifiers::{ModelKind, TrainConfig};
use seizembed::epoching::{SplitPolicy, EPOCH_SECONDS};
use seizembed::features::{default_bands, BandDef};
use seizembed::transform::TransformSettings;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum DataSource {
    /// Directory of `<patient>/<record>.edf` plus `<patient>/<patient>-summary.txt`.
    Edf { dir: PathBuf },
    /// Synthetic dataset generated in memory from a dataset config file.
    Synth { spec: PathBuf },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Embedded {
    On,
    Off,
    #[default]
    Both,
}

impl Embedded {
    /// `false` (raw) before `true` (embedded).
    pub fn variants(self) -> Vec<bool> {
        match self {
            Embedded::On => vec![true],
            Embedded::Off => vec![false],
            Embedded::Both => vec![false, true],
        }
    }
}

impl FromStr for Embedded {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "on" => Ok(Embedded::On),
            "off" => Ok(Embedded::Off),
            "both" => Ok(Embedded::Both),
            _ => bail!("expected on, off or both, got `{s}`"),
        }
    }
}

impl fmt::Display for Embedded {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Embedded::On => "on",
            Embedded::Off => "off",
            Embedded::Both => "both",
        })
    }
}

fn default_models() -> Vec<ModelKind> {
    vec![ModelKind::Lr]
}

fn default_epoch_s() -> f64 {
    EPOCH_SECONDS
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub data: DataSource,
    /// Empty means the channels shared by all of a patient's records.
    #[serde(default)]
    pub channels: Vec<String>,
    /// Empty means every patient in the dataset.
    #[serde(default)]
    pub patients: Vec<String>,
    #[serde(default = "default_bands")]
    pub bands: Vec<BandDef>,
    /// Fixed at 1 s; present so configs can state it.
    #[serde(default = "default_epoch_s")]
    pub epoch_s: f64,
    pub split: SplitPolicy,
    #[serde(default)]
    pub transform: TransformSettings,
    #[serde(default = "default_models")]
    pub models: Vec<ModelKind>,
    #[serde(default)]
    pub embedded: Embedded,
    /// Root of every per-patient model seed.
    #[serde(default)]
    pub seed: u64,
    /// Operating threshold per model name (e.g. `SVM = 0.0`); unlisted
    /// models use 0.5, or 0 for SVM margins.
    #[serde(default)]
    pub thresholds: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_train_rows: Option<usize>,
    #[serde(default)]
    pub lr: LogisticParams,
    #[serde(default)]
    pub mlp: MlpParams,
    #[serde(default)]
    pub svm: SvmParams,
    #[serde(default)]
    pub knn: KnnParams,
    #[serde(default)]
    pub gnb: GaussianNbParams,
    #[serde(default)]
    pub bnb: BernoulliNbParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
}

/// Flag values that take precedence over the file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub out: Option<PathBuf>,
    pub models: Option<Vec<ModelKind>>,
    pub patients: Option<Vec<String>>,
    pub embedded: Option<Embedded>,
    pub seed: Option<u64>,
}

impl RunConfig {
    /// Parses `text`; relative data paths are resolved against `base`.
    pub fn from_toml(text: &str, base: &Path) -> Result<Self> {
        let mut cfg: Self = toml::from_str(text).context("parsing run config")?;
        let resolve = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match &mut cfg.data {
            DataSource::Edf { dir } => resolve(dir),
            DataSource::Synth { spec } => resolve(spec),
        }
        if let Some(out) = &mut cfg.out {
            resolve(out);
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::from_toml(&text, base).with_context(|| format!("in {}", path.display()))
    }

    pub fn apply(&mut self, o: Overrides) {
        if let Some(v) = o.out {
            self.out = Some(v);
        }
        if let Some(v) = o.models {
            self.models = v;
        }
        if let Some(v) = o.patients {
            self.patients = v;
        }
        if let Some(v) = o.embedded {
            self.embedded = v;
        }
        if let Some(v) = o.seed {
            self.seed = v;
        }
    }

    pub fn validate(&self) -> Result<()> {
        match &self.data {
            DataSource::Edf { dir } => ensure!(dir.is_dir(), "data directory {} does not exist", dir.display()),
            DataSource::Synth { spec } => ensure!(spec.is_file(), "synthetic spec {} does not exist", spec.display()),
        }
        ensure!(
            self.epoch_s == EPOCH_SECONDS,
            "epoch_s is fixed at {EPOCH_SECONDS} s, got {}",
            self.epoch_s
        );
        ensure!(!self.models.is_empty(), "no models requested");
        ensure!(!self.bands.is_empty(), "no frequency bands configured");
        self.split.validate()?;
        let t = &self.transform;
        ensure!(t.n_quantiles >= 2, "transform.n_quantiles must be at least 2");
        ensure!(t.dim >= 2 && t.dim.is_multiple_of(2), "transform.dim must be a positive even number");
        ensure!(t.sigma > 0.0 && t.sigma.is_finite(), "transform.sigma must be positive");
        for name in self.thresholds.keys() {
            name.parse::<ModelKind>()?;
        }
        for &kind in &self.models {
            self.train_config(kind, 0).validate()?;
        }
        Ok(())
    }

    pub fn threshold(&self, kind: ModelKind) -> f64 {
        self.thresholds
            .iter()
            .find(|(k, _)| k.parse::<ModelKind>().ok() == Some(kind))
            .map(|(_, &v)| v)
            .unwrap_or_else(|| kind.default_threshold())
    }

    pub fn train_config(&self, kind: ModelKind, seed: u64) -> TrainConfig {
        TrainConfig {
            kind,
            seed,
            lr: self.lr.clone(),
            mlp: self.mlp.clone(),
            svm: self.svm.clone(),
            knn: self.knn.clone(),
            gnb: self.gnb.clone(),
            bnb: self.bnb.clone(),
            max_train_rows: self.max_train_rows,
        }
    }

    /// SHA-256 of the effective configuration with the output directory
    /// removed, so the hash identifies results rather than where they went.
    pub fn hash(&self) -> String {
        let mut canonical = self.clone();
        canonical.out = None;
        let json = serde_json::to_vec(&canonical).expect("config serializes");
        hex::encode(Sha256::digest(json))
    }
}
