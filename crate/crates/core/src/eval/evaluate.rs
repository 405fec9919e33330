use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::metrics::{nmpd, reference_value, Regret, ScheduleSolver};
use crate::datagen::{Dataset, PartitionAttribute};
use crate::error::{Error, Result};
use crate::learn::{EncodedPool, LossKind, MlpModel};
use crate::oracle::{owa_objective, LocalSearchConfig};
use crate::owa::gini_weights;
use crate::schedule::group_utilities;

/// Which solver turns a model's predictions into a schedule.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InferenceMode {
    /// The OWA program for the two-stage model, the matching layer for the
    /// decision-quality models.
    #[default]
    PerModel,
    /// The OWA program for every model.
    Owa,
    /// The matching layer for every model.
    Matching,
}

impl InferenceMode {
    pub const ALL: [InferenceMode; 3] = [InferenceMode::PerModel, InferenceMode::Owa, InferenceMode::Matching];

    pub fn as_str(self) -> &'static str {
        match self {
            InferenceMode::PerModel => "per_model",
            InferenceMode::Owa => "owa",
            InferenceMode::Matching => "matching",
        }
    }
}

impl fmt::Display for InferenceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for InferenceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|m| m.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown inference mode {s:?} (per_model, owa, matching)")))
    }
}

/// Solver a trained model schedules with under `mode`.
pub fn inference_solver(kind: LossKind, mode: InferenceMode, n: usize, search: LocalSearchConfig) -> ScheduleSolver {
    match (mode, kind) {
        (InferenceMode::Owa, _) | (InferenceMode::PerModel, LossKind::TwoStage) => ScheduleSolver::owa_for(n, search),
        (InferenceMode::Matching, _) | (InferenceMode::PerModel, LossKind::TuDq | LossKind::OwaDq) => {
            ScheduleSolver::Matching
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub partition: PartitionAttribute,
    /// Reference and OWA inference budget when `n > 9`.
    pub search: LocalSearchConfig,
    #[serde(default)]
    pub inference: InferenceMode,
}

impl Default for EvalConfig {
    fn default() -> Self {
        EvalConfig {
            partition: PartitionAttribute::Individual,
            search: LocalSearchConfig::REFERENCE,
            inference: InferenceMode::PerModel,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PoolEval {
    pub regret_pct: f64,
    pub regret_raw: f64,
    pub reference_value: f64,
    pub reference_beaten: bool,
    /// NMPD of group utilities; absent when every group has zero utility.
    pub nmpd: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub model: LossKind,
    pub setting: PartitionAttribute,
    pub inference_solver: String,
    pub reference_solver: String,
    /// True when the reference is local search rather than the exact
    /// optimum; regrets are then proxy regrets.
    pub proxy_reference: bool,
    pub num_pools: usize,
    pub regret_pct_mean: f64,
    pub regret_pct_std: f64,
    pub regret_raw_mean: f64,
    pub regret_raw_std: f64,
    pub nmpd_mean: f64,
    pub nmpd_std: f64,
    pub nmpd_undefined: usize,
    pub reference_beaten: usize,
    pub pools: Vec<PoolEval>,
    /// Wall-clock of the evaluation; not serialized so reports stay
    /// reproducible.
    #[serde(skip)]
    pub runtime_ms: f64,
}

fn mean_std(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

/// Predicts, schedules and scores every pool of `test`.
pub fn evaluate_model(
    model: &MlpModel,
    kind: LossKind,
    test: &Dataset,
    cfg: &EvalConfig,
) -> Result<EvalReport> {
    let start = Instant::now();
    let n = test.meta.n;
    if model.output_dim() != n {
        return Err(Error::invalid(format!(
            "model schedules {} defendants but test pools have {n}",
            model.output_dim()
        )));
    }
    if test.pools.is_empty() {
        return Err(Error::invalid("empty test dataset"));
    }
    let reference = ScheduleSolver::owa_for(n, cfg.search);
    let solver = inference_solver(kind, cfg.inference, n, cfg.search);
    let pools = test
        .pools
        .par_iter()
        .map(|p| {
            let enc = EncodedPool::new(p, cfg.partition)?;
            let w = gini_weights(enc.partition.num_groups())?;
            let best = reference_value(&enc.prefs, &w, &enc.partition, &reference)?;
            let pred = model.predict(&enc.x)?;
            let s = solver.schedule(&pred, &w, &enc.partition)?;
            let got = owa_objective(&s, &enc.prefs, &w, &enc.partition)?;
            let r = Regret::from_values(best, got);
            let u = group_utilities(&s, &enc.prefs, &enc.partition)?;
            let fairness = match nmpd(&u) {
                Ok(v) => Some(v),
                Err(Error::UndefinedMetric(_)) => None,
                Err(e) => return Err(e),
            };
            Ok(PoolEval {
                regret_pct: r.percent,
                regret_raw: r.raw,
                reference_value: best,
                reference_beaten: r.reference_beaten,
                nmpd: fairness,
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let pct: Vec<f64> = pools.iter().map(|p| p.regret_pct).collect();
    let raw: Vec<f64> = pools.iter().map(|p| p.regret_raw).collect();
    let fair: Vec<f64> = pools.iter().filter_map(|p| p.nmpd).collect();
    let (regret_pct_mean, regret_pct_std) = mean_std(&pct);
    let (regret_raw_mean, regret_raw_std) = mean_std(&raw);
    let (nmpd_mean, nmpd_std) = mean_std(&fair);
    Ok(EvalReport {
        model: kind,
        setting: cfg.partition,
        inference_solver: solver.name().to_string(),
        reference_solver: reference.name().to_string(),
        proxy_reference: !reference.is_exact(),
        num_pools: pools.len(),
        regret_pct_mean,
        regret_pct_std,
        regret_raw_mean,
        regret_raw_std,
        nmpd_mean,
        nmpd_std,
        nmpd_undefined: pools.len() - fair.len(),
        reference_beaten: pools.iter().filter(|p| p.reference_beaten).count(),
        pools,
        runtime_ms: start.elapsed().as_secs_f64() * 1e3,
    })
}
