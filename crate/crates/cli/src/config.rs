//! Experiment configuration read from TOML.
//!
//! Every key is optional; missing keys fall back to the standard benchmark
//! protocol (L = 720, horizons 96/192/336/720, seeds 0/1/2, Adam at 5e-4,
//! batch 128, 50 epochs with early stopping).

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use lintsf::data::SplitSpec;
use lintsf::models::ModelSpec;
use lintsf::training::TrainConfig;
use serde::Deserialize;

pub const DEFAULT_HORIZONS: [usize; 4] = [96, 192, 336, 720];
pub const DEFAULT_SEEDS: [u64; 3] = [0, 1, 2];
pub const DEFAULT_CONTEXT_LEN: usize = 720;

/// Trained models of the benchmark table, in column order.
pub const TRAINED_MODELS: [&str; 7] = [
    "FITS",
    "DLinear",
    "Linear",
    "FITS+IN",
    "DLinear+IN",
    "RLinear",
    "NLinear",
];

/// Models compared against the normalised closed form in convergence runs.
pub const CONVERGENCE_MODELS: [&str; 5] =
    ["Linear+IN", "RLinear", "NLinear", "DLinear+IN", "FITS+IN"];

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub lr: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub adam_beta1: f64,
    pub adam_beta2: f64,
    pub adam_eps: f64,
    pub early_stop: bool,
}

impl Default for TrainSection {
    fn default() -> Self {
        let d = TrainConfig::default();
        Self {
            lr: d.lr,
            batch_size: d.batch_size,
            epochs: d.epochs,
            adam_beta1: d.adam_beta1,
            adam_beta2: d.adam_beta2,
            adam_eps: d.adam_eps,
            early_stop: d.early_stop,
        }
    }
}

impl TrainSection {
    pub fn to_config(&self, seed: u64) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            batch_size: self.batch_size,
            epochs: self.epochs,
            adam_beta1: self.adam_beta1,
            adam_beta2: self.adam_beta2,
            adam_eps: self.adam_eps,
            seed,
            early_stop: self.early_stop,
        }
    }
}

/// Seeded autoregressive series with an optional linear drift.
#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SyntheticAr {
    pub length: usize,
    #[serde(default = "one")]
    pub channels: usize,
    pub coeffs: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Added as `trend·t` to every channel.
    #[serde(default)]
    pub trend: f64,
}

fn one() -> usize {
    1
}

/// A dataset declared inline in the config: either a CSV file or a
/// synthetic generator. Without `split` the benchmark sizes are used for
/// the standard names and a 70/10/20 split otherwise.
#[derive(Clone, Debug, Default, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct DatasetEntry {
    pub path: Option<PathBuf>,
    pub synthetic: Option<SyntheticAr>,
    /// `[train, val, test]` row counts.
    pub split: Option<[usize; 3]>,
}

impl DatasetEntry {
    pub fn split_spec(&self) -> Option<SplitSpec> {
        self.split.map(|[a, b, c]| SplitSpec::new(a, b, c))
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergenceSection {
    pub dataset: String,
    pub context_len: usize,
    pub horizon: usize,
    pub epochs: usize,
    pub lr: f64,
    pub batch_size: usize,
    /// Keep the final parameters rather than the best validation epoch.
    pub early_stop: bool,
    /// Test windows whose forecasts are dumped.
    pub sample_forecasts: usize,
}

impl Default for ConvergenceSection {
    fn default() -> Self {
        Self {
            dataset: "synthetic-ar".into(),
            context_len: 96,
            horizon: 24,
            epochs: 200,
            lr: 5e-4,
            batch_size: 128,
            early_stop: false,
            sample_forecasts: 4,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct EquivalenceSection {
    /// `[L, T]` pairs.
    pub sizes: Vec<[usize; 2]>,
    pub trials: usize,
    pub seed: u64,
}

impl Default for EquivalenceSection {
    fn default() -> Self {
        Self {
            sizes: vec![[16, 8], [8, 4], [8, 8], [2, 8]],
            trials: 100,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct FitsBiasSection {
    pub context_len: usize,
    pub horizon: usize,
    /// Random gradient steps in the parameterisation experiment.
    pub steps: usize,
}

impl Default for FitsBiasSection {
    fn default() -> Self {
        Self {
            context_len: DEFAULT_CONTEXT_LEN,
            horizon: 96,
            steps: 1,
        }
    }
}

#[derive(Clone, Debug, Deserialize, PartialEq)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub datasets: Vec<String>,
    pub horizons: Vec<usize>,
    pub models: Vec<String>,
    pub context_len: usize,
    pub seeds: Vec<u64>,
    pub output_dir: PathBuf,
    /// Directory holding the benchmark CSVs; `LINTSF_DATA_DIR` otherwise.
    pub data_dir: Option<PathBuf>,
    /// Write a checkpoint per trained run.
    pub checkpoints: bool,
    pub train: TrainSection,
    #[serde(rename = "dataset")]
    pub dataset_entries: BTreeMap<String, DatasetEntry>,
    pub convergence: ConvergenceSection,
    pub equivalence: EquivalenceSection,
    pub fits_bias: FitsBiasSection,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let mut dataset_entries = BTreeMap::new();
        dataset_entries.insert(
            "synthetic-ar".to_string(),
            DatasetEntry {
                synthetic: Some(default_synthetic_ar()),
                ..Default::default()
            },
        );
        Self {
            datasets: SplitSpec::known_datasets().map(String::from).collect(),
            horizons: DEFAULT_HORIZONS.to_vec(),
            models: TRAINED_MODELS.iter().map(|s| s.to_string()).collect(),
            context_len: DEFAULT_CONTEXT_LEN,
            seeds: DEFAULT_SEEDS.to_vec(),
            output_dir: PathBuf::from("lintsf-out"),
            data_dir: None,
            checkpoints: true,
            train: TrainSection::default(),
            dataset_entries,
            convergence: ConvergenceSection::default(),
            equivalence: EquivalenceSection::default(),
            fits_bias: FitsBiasSection::default(),
        }
    }
}

/// Two channels of `x_t = 0.3·x_{t−1} + 0.6·x_{t−24} + ε_t` plus a drift of
/// 0.08 per step, 5000 rows: a daily-seasonal series whose targets sit away
/// from the context mean.
pub fn default_synthetic_ar() -> SyntheticAr {
    let mut coeffs = vec![0.0; 24];
    coeffs[0] = 0.3;
    coeffs[23] = 0.6;
    SyntheticAr {
        length: 5000,
        channels: 2,
        coeffs,
        seed: 7,
        trend: 0.08,
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).context("invalid experiment config")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("in {}", path.display()))
    }

    pub fn validate(&self) -> Result<()> {
        if self.horizons.contains(&0) {
            bail!("horizons must be at least 1");
        }
        if self.context_len == 0 {
            bail!("context_len must be at least 1");
        }
        for m in &self.models {
            self.model_spec(m)?;
        }
        for (name, e) in &self.dataset_entries {
            if e.path.is_some() == e.synthetic.is_some() {
                bail!("dataset `{name}` needs exactly one of `path` or `synthetic`");
            }
        }
        self.train.to_config(0).validate()?;
        Ok(())
    }

    pub fn model_spec(&self, name: &str) -> Result<ModelSpec> {
        name.parse::<ModelSpec>()
            .with_context(|| format!("model `{name}`"))
    }

    pub fn data_dir(&self) -> Option<PathBuf> {
        self.data_dir
            .clone()
            .or_else(|| std::env::var_os("LINTSF_DATA_DIR").map(PathBuf::from))
    }
}
