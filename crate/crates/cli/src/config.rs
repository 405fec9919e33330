//! Run configuration: defaults, overlaid by a JSON file, overlaid by flags.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fairsched::datagen::{PartitionAttribute, DEFAULT_CHOICE_WEIGHTS};
use fairsched::eval::InferenceMode;
use fairsched::learn::{LossKind, TrainConfig};
use fairsched::matching::BlackboxConfig;
use fairsched::oracle::LocalSearchConfig;
use serde::{Deserialize, Serialize};

use crate::exit::UsageError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub out_dir: PathBuf,
    pub datagen: DatagenSection,
    pub train: TrainSection,
    pub eval: EvalSection,
    pub bench: BenchSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            out_dir: PathBuf::from("out"),
            datagen: DatagenSection::default(),
            train: TrainSection::default(),
            eval: EvalSection::default(),
            bench: BenchSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DatagenSection {
    pub n_pools: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub partition: PartitionAttribute,
    pub choice_weights: [f64; 3],
    /// Size of the held-out test file; 0 writes no test file.
    pub test_pools: usize,
    /// Seed of the test file; derived from `seed` when absent.
    pub test_seed: Option<u64>,
    /// JSON file replacing the built-in probability tables.
    pub cpts: Option<PathBuf>,
    /// Samples drawn for the chi-square table check; 0 skips it.
    pub fidelity_samples: usize,
}

impl Default for DatagenSection {
    fn default() -> Self {
        DatagenSection {
            n_pools: 250,
            pool_size: 12,
            seed: 0,
            partition: PartitionAttribute::Individual,
            choice_weights: DEFAULT_CHOICE_WEIGHTS,
            test_pools: 0,
            test_seed: None,
            cpts: None,
            fidelity_samples: 100_000,
        }
    }
}

impl DatagenSection {
    pub fn resolved_test_seed(&self) -> u64 {
        self.test_seed.unwrap_or(self.seed.wrapping_add(1_000_003))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    /// Training file; defaults to `<out_dir>/data/train.jsonl`.
    pub dataset: Option<PathBuf>,
    pub losses: Vec<LossKind>,
    pub seeds: Vec<u64>,
    /// Fairness partitions to train for; empty uses the dataset's own.
    pub partitions: Vec<PartitionAttribute>,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub patience: usize,
    pub lambda: f64,
    pub beta: Option<f64>,
    pub hidden: usize,
    pub val_fraction: f64,
    pub val_search: LocalSearchConfig,
}

impl Default for TrainSection {
    fn default() -> Self {
        let t = TrainConfig::default();
        TrainSection {
            dataset: None,
            losses: LossKind::ALL.to_vec(),
            seeds: (1..=5).collect(),
            partitions: Vec::new(),
            learning_rate: t.learning_rate,
            batch_size: t.batch_size,
            epochs: t.epochs,
            patience: t.patience,
            lambda: BlackboxConfig::DEFAULT_LAMBDA,
            beta: None,
            hidden: t.hidden,
            val_fraction: t.val_fraction,
            val_search: t.val_search,
        }
    }
}

impl TrainSection {
    pub fn train_config(&self, loss: LossKind, seed: u64, partition: PartitionAttribute) -> TrainConfig {
        TrainConfig {
            loss,
            learning_rate: self.learning_rate,
            batch_size: self.batch_size,
            epochs: self.epochs,
            patience: self.patience,
            seed,
            lambda: self.lambda,
            beta: self.beta,
            partition,
            hidden: self.hidden,
            val_fraction: self.val_fraction,
            val_search: self.val_search,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalSection {
    /// Test file; defaults to `<out_dir>/data/test.jsonl`.
    pub test: Option<PathBuf>,
    /// Checkpoint directory; defaults to `<out_dir>/models`.
    pub models: Option<PathBuf>,
    /// Settings to score every checkpoint under; empty uses each
    /// checkpoint's training partition.
    pub settings: Vec<PartitionAttribute>,
    pub search: LocalSearchConfig,
    /// Solver that turns predictions into schedules.
    pub inference: InferenceMode,
    /// Retrain every owa_dq checkpoint with Moreau smoothing at this beta and
    /// report it next to the subgradient model.
    pub beta: Option<f64>,
}

impl Default for EvalSection {
    fn default() -> Self {
        EvalSection {
            test: None,
            models: None,
            settings: Vec::new(),
            search: LocalSearchConfig::REFERENCE,
            inference: InferenceMode::PerModel,
            beta: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BenchSection {
    pub sizes: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
}

impl Default for BenchSection {
    fn default() -> Self {
        BenchSection {
            sizes: vec![4, 6, 8, 12, 24, 48],
            repeats: 100,
            seed: 0,
        }
    }
}

impl RunConfig {
    pub fn load(path: Option<&Path>) -> Result<Self> {
        let Some(path) = path else {
            return Ok(RunConfig::default());
        };
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))
            .map_err(UsageError::wrap)?;
        serde_json::from_str(&text)
            .with_context(|| format!("invalid config {}", path.display()))
            .map_err(UsageError::wrap)
    }

    pub fn train_dataset(&self) -> PathBuf {
        self.train
            .dataset
            .clone()
            .unwrap_or_else(|| self.out_dir.join("data").join("train.jsonl"))
    }

    pub fn test_dataset(&self) -> PathBuf {
        self.eval
            .test
            .clone()
            .unwrap_or_else(|| self.out_dir.join("data").join("test.jsonl"))
    }

    pub fn models_dir(&self) -> PathBuf {
        self.eval.models.clone().unwrap_or_else(|| self.out_dir.join("models"))
    }
}

/// Parses `"1..5"` (inclusive), `"1..=5"` or `"1,3,7"`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let s = s.trim();
    if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: u64 = a.trim().parse().with_context(|| format!("bad seed range {s:?}"))?;
        let hi: u64 = b.trim().parse().with_context(|| format!("bad seed range {s:?}"))?;
        if hi < lo {
            bail!("empty seed range {s:?}");
        }
        return Ok((lo..=hi).collect());
    }
    s.split(',')
        .map(|t| t.trim().parse::<u64>().with_context(|| format!("bad seed {t:?}")))
        .collect()
}

/// Parses a comma-separated list with `FromStr`.
pub fn parse_list<T>(s: &str) -> Result<Vec<T>>
where
    T: std::str::FromStr,
    T::Err: std::error::Error + Send + Sync + 'static,
{
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| t.trim().parse::<T>().map_err(anyhow::Error::from))
        .collect()
}
