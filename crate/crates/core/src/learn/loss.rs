use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::mlp::MlpModel;
use crate::datagen::{PartitionAttribute, Pool};
use crate::error::{Error, Result};
use crate::matching::{matching_backward, solve_assignment, BlackboxConfig};
use crate::owa::{gini_weights, moreau_gradient, owa_subgradient, owa_value, MoreauConfig};
use crate::schedule::{group_utilities, total_utility, GroupPartition, Matrix, PreferenceMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LossKind {
    /// Squared error on predicted preferences.
    TwoStage,
    /// Negative total utility through the matching layer.
    TuDq,
    /// Negative group OWA utility through the matching layer.
    OwaDq,
}

impl LossKind {
    pub const ALL: [LossKind; 3] = [LossKind::TwoStage, LossKind::TuDq, LossKind::OwaDq];

    pub fn as_str(self) -> &'static str {
        match self {
            LossKind::TwoStage => "two_stage",
            LossKind::TuDq => "tu_dq",
            LossKind::OwaDq => "owa_dq",
        }
    }
}

impl fmt::Display for LossKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for LossKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "two_stage" => Ok(LossKind::TwoStage),
            "tu_dq" | "tu" => Ok(LossKind::TuDq),
            "owa_dq" => Ok(LossKind::OwaDq),
            _ => Err(Error::invalid(format!(
                "unknown loss {s:?} (expected two_stage, tu_dq or owa_dq)"
            ))),
        }
    }
}

/// A pool with one-hot features and the fairness partition used for training.
#[derive(Debug, Clone)]
pub struct EncodedPool {
    pub x: Vec<Vec<f64>>,
    pub prefs: PreferenceMatrix,
    pub partition: GroupPartition,
}

impl EncodedPool {
    pub fn new(pool: &Pool, attr: PartitionAttribute) -> Result<Self> {
        Ok(EncodedPool {
            x: pool.features.iter().map(|f| f.one_hot()).collect(),
            prefs: pool.prefs.clone(),
            partition: attr.partition(&pool.features)?,
        })
    }

    pub fn n(&self) -> usize {
        self.prefs.n()
    }
}

/// Hyperparameters of the decision-quality losses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DqConfig {
    pub blackbox: BlackboxConfig,
    /// Smooth the OWA through its Moreau envelope instead of using the
    /// subgradient.
    pub moreau: Option<MoreauConfig>,
}

#[derive(Debug, Clone)]
pub struct LossOutput {
    pub loss: f64,
    pub grad: Vec<f64>,
}

/// `‖Ŷ − Y‖²_F` on softmax outputs.
pub fn loss_two_stage(model: &MlpModel, pool: &EncodedPool) -> Result<LossOutput> {
    let cache = model.forward(&pool.x)?;
    let diff = cache.output().axpy(-1.0, &pool.prefs)?;
    let loss = diff.frobenius_sq();
    let grad = model.backward(&cache, &diff.scale(2.0))?;
    Ok(LossOutput { loss, grad })
}

/// Upstream gradient `∂L/∂Π` of `L = −OWA_w(u^G(Π, Y))`: entry `(i, j)`
/// receives `−g[group(i)] · Y[i][j] / |S_group(i)|`.
pub fn owa_upstream(prefs: &Matrix, partition: &GroupPartition, group_grad: &[f64]) -> Matrix {
    let sizes: Vec<f64> = partition.groups().iter().map(|g| g.len() as f64).collect();
    Matrix::from_fn(prefs.n(), |i, j| {
        let g = partition.group_of(i);
        -group_grad[g] * prefs[(i, j)] / sizes[g]
    })
}

fn through_matching(
    model: &MlpModel,
    pool: &EncodedPool,
    cfg: &DqConfig,
    objective: impl FnOnce(&crate::schedule::Assignment) -> Result<(f64, Matrix)>,
) -> Result<LossOutput> {
    let cache = model.forward(&pool.x)?;
    let pred = cache.output();
    let schedule = solve_assignment(pred)?;
    let (loss, upstream) = objective(&schedule)?;
    let d_pred = matching_backward(pred, &schedule, &upstream, cfg.blackbox)?;
    let grad = model.backward(&cache, &d_pred)?;
    Ok(LossOutput { loss, grad })
}

/// `−Tr(Yᵀ Π(Ŷ))` with the blackbox matching gradient.
pub fn loss_tu_dq(model: &MlpModel, pool: &EncodedPool, cfg: &DqConfig) -> Result<LossOutput> {
    through_matching(model, pool, cfg, |schedule| {
        let loss = -total_utility(schedule, &pool.prefs)?;
        Ok((loss, pool.prefs.scale(-1.0)))
    })
}

/// `−OWA_w(u^G(Π(Ŷ), Y))` with Gini weights over the pool's groups.
pub fn loss_owa_dq(model: &MlpModel, pool: &EncodedPool, cfg: &DqConfig) -> Result<LossOutput> {
    through_matching(model, pool, cfg, |schedule| {
        let u = group_utilities(schedule, &pool.prefs, &pool.partition)?;
        let w = gini_weights(u.len())?;
        let loss = -owa_value(&w, &u)?;
        let g = match cfg.moreau {
            Some(m) => moreau_gradient(&w, &u, m)?,
            None => owa_subgradient(&w, &u)?,
        };
        Ok((loss, owa_upstream(&pool.prefs, &pool.partition, &g)))
    })
}

pub fn loss_for(kind: LossKind, model: &MlpModel, pool: &EncodedPool, cfg: &DqConfig) -> Result<LossOutput> {
    match kind {
        LossKind::TwoStage => loss_two_stage(model, pool),
        LossKind::TuDq => loss_tu_dq(model, pool, cfg),
        LossKind::OwaDq => loss_owa_dq(model, pool, cfg),
    }
}
