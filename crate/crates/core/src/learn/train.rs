use std::time::Instant;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::adam::{adam_step, AdamState};
use super::loss::{loss_for, DqConfig, EncodedPool, LossKind};
use super::mlp::MlpModel;
use crate::datagen::{Dataset, PartitionAttribute};
use crate::defendant::ONE_HOT_WIDTH;
use crate::error::{Error, Result};
use crate::eval::{inference_solver, reference_value, InferenceMode, Regret, ScheduleSolver};
use crate::matching::BlackboxConfig;
use crate::oracle::{owa_objective, LocalSearchConfig};
use crate::owa::{gini_weights, MoreauConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub loss: LossKind,
    pub learning_rate: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop after this many epochs without a new best validation regret;
    /// 0 disables early stopping.
    pub patience: usize,
    pub seed: u64,
    pub lambda: f64,
    /// Moreau smoothing for the OWA loss; `None` uses the subgradient.
    pub beta: Option<f64>,
    pub partition: PartitionAttribute,
    /// Width of the first hidden layer; the second is half of it.
    pub hidden: usize,
    /// Fraction of pools (taken from the end) held out for validation.
    pub val_fraction: f64,
    /// Local-search budget for validation schedules at `n > 9`.
    pub val_search: LocalSearchConfig,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            loss: LossKind::OwaDq,
            learning_rate: 0.01,
            batch_size: 64,
            epochs: 300,
            patience: 30,
            seed: 0,
            lambda: BlackboxConfig::DEFAULT_LAMBDA,
            beta: None,
            partition: PartitionAttribute::Individual,
            hidden: 64,
            val_fraction: 0.2,
            val_search: LocalSearchConfig {
                restarts: 10,
                max_iters: 5000,
                seed: 0,
            },
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::Config("batch_size must be at least 1".into()));
        }
        if !(0.0..1.0).contains(&self.val_fraction) {
            return Err(Error::Config("val_fraction must lie in [0, 1)".into()));
        }
        self.val_search.validate()?;
        self.dq_config()?;
        MlpModel::architecture(ONE_HOT_WIDTH, self.hidden, 2)?;
        Ok(())
    }

    pub fn dq_config(&self) -> Result<DqConfig> {
        Ok(DqConfig {
            blackbox: BlackboxConfig::new(self.lambda)?,
            moreau: self.beta.map(MoreauConfig::new).transpose()?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    /// Mean validation regret in percent; absent without validation pools.
    pub val_regret: Option<f64>,
    pub wall_ms: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainHistory {
    /// Mean training loss of the initial model.
    pub initial_loss: f64,
    pub initial_val_regret: Option<f64>,
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept (0 = initial model).
    pub best_epoch: usize,
    pub stopped_early: bool,
}

/// Held-out pools with their cached reference values.
struct Validation {
    pools: Vec<EncodedPool>,
    reference: Vec<f64>,
    solver_search: LocalSearchConfig,
}

impl Validation {
    fn new(pools: Vec<EncodedPool>, search: LocalSearchConfig) -> Result<Self> {
        let reference = pools
            .par_iter()
            .map(|p| {
                let w = gini_weights(p.partition.num_groups())?;
                let solver = ScheduleSolver::owa_for(p.n(), search);
                reference_value(&p.prefs, &w, &p.partition, &solver)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Validation {
            pools,
            reference,
            solver_search: search,
        })
    }

    /// Mean regret percent of the model's own inference schedules.
    fn regret(&self, model: &MlpModel, kind: LossKind) -> Result<Option<f64>> {
        if self.pools.is_empty() {
            return Ok(None);
        }
        let vals = self
            .pools
            .par_iter()
            .zip(&self.reference)
            .map(|(p, &best)| {
                let w = gini_weights(p.partition.num_groups())?;
                let pred = model.predict(&p.x)?;
                let solver = inference_solver(kind, InferenceMode::PerModel, p.n(), self.solver_search);
                let s = solver.schedule(&pred, &w, &p.partition)?;
                let got = owa_objective(&s, &p.prefs, &w, &p.partition)?;
                Ok(Regret::from_values(best, got).percent)
            })
            .collect::<Result<Vec<f64>>>()?;
        Ok(Some(vals.iter().sum::<f64>() / vals.len() as f64))
    }
}

fn mean_loss(model: &MlpModel, pools: &[EncodedPool], kind: LossKind, dq: &DqConfig) -> Result<f64> {
    let losses = pools
        .par_iter()
        .map(|p| loss_for(kind, model, p, dq).map(|o| o.loss))
        .collect::<Result<Vec<_>>>()?;
    Ok(losses.iter().sum::<f64>() / losses.len() as f64)
}

/// Initial network for a dataset of `n`-defendant pools.
pub fn init_model(n: usize, cfg: &TrainConfig) -> Result<MlpModel> {
    MlpModel::new(MlpModel::architecture(ONE_HOT_WIDTH, cfg.hidden, n)?, cfg.seed)
}

/// Mini-batch Adam training.
///
/// Each epoch shuffles the training pools with a generator seeded from
/// `cfg.seed`, averages per-pool gradients over batches of
/// `cfg.batch_size` pools and takes one Adam step per batch. The returned
/// model carries the parameters of the epoch with the lowest validation
/// regret.
pub fn train(dataset: &Dataset, cfg: &TrainConfig) -> Result<(MlpModel, TrainHistory)> {
    cfg.validate()?;
    if dataset.pools.is_empty() {
        return Err(Error::invalid("cannot train on an empty dataset"));
    }
    let dq = cfg.dq_config()?;
    let encoded = dataset
        .pools
        .iter()
        .map(|p| EncodedPool::new(p, cfg.partition))
        .collect::<Result<Vec<_>>>()?;
    let total = encoded.len();
    let n_val = if total > 1 {
        ((total as f64 * cfg.val_fraction).round() as usize).min(total - 1)
    } else {
        0
    };
    let mut train_pools = encoded;
    let val_pools = train_pools.split_off(total - n_val);
    let validation = Validation::new(val_pools, cfg.val_search)?;

    let mut model = init_model(dataset.meta.n, cfg)?;
    let initial_loss = mean_loss(&model, &train_pools, cfg.loss, &dq)?;
    if !initial_loss.is_finite() {
        return Err(Error::Numeric(format!("initial loss is {initial_loss}")));
    }
    let initial_val_regret = validation.regret(&model, cfg.loss)?;

    let mut adam = AdamState::new(model.params().len());
    let mut shuffle_rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    shuffle_rng.set_stream(1);
    let mut order: Vec<usize> = (0..train_pools.len()).collect();

    let mut best = (initial_val_regret.unwrap_or(f64::INFINITY), 0usize, model.params().to_vec());
    let mut epochs = Vec::with_capacity(cfg.epochs);
    let mut stopped_early = false;

    for epoch in 1..=cfg.epochs {
        let start = Instant::now();
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;
        for (b, batch) in order.chunks(cfg.batch_size).enumerate() {
            let outs = batch
                .par_iter()
                .map(|&k| loss_for(cfg.loss, &model, &train_pools[k], &dq))
                .collect::<Result<Vec<_>>>()?;
            let mut grad = vec![0.0; model.params().len()];
            for o in &outs {
                if !o.loss.is_finite() {
                    return Err(Error::Numeric(format!(
                        "{} loss became {} at epoch {epoch}, batch {b}",
                        cfg.loss, o.loss
                    )));
                }
                loss_sum += o.loss;
                for (g, v) in grad.iter_mut().zip(&o.grad) {
                    *g += v;
                }
            }
            let scale = 1.0 / outs.len() as f64;
            grad.iter_mut().for_each(|g| *g *= scale);
            adam_step(model.params_mut(), &grad, &mut adam, cfg.learning_rate)?;
            if model.params().iter().any(|p| !p.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite parameters after epoch {epoch}, batch {b}"
                )));
            }
        }
        let val_regret = validation.regret(&model, cfg.loss)?;
        epochs.push(EpochRecord {
            epoch,
            train_loss: loss_sum / train_pools.len() as f64,
            val_regret,
            wall_ms: start.elapsed().as_secs_f64() * 1e3,
        });
        if let Some(v) = val_regret {
            if v < best.0 - 1e-12 {
                best = (v, epoch, model.params().to_vec());
            }
            if cfg.patience > 0 && epoch - best.1 >= cfg.patience {
                stopped_early = true;
                break;
            }
        }
    }

    let best_epoch = if validation.pools.is_empty() {
        epochs.len()
    } else {
        model.params_mut().copy_from_slice(&best.2);
        best.1
    };
    Ok((
        model,
        TrainHistory {
            initial_loss,
            initial_val_regret,
            epochs,
            best_epoch,
            stopped_early,
        },
    ))
}
