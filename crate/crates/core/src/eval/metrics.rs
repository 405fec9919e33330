use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::matching::solve_assignment;
use crate::oracle::{exact_owa_schedule, local_search_owa, owa_objective, LocalSearchConfig, ENUMERATION_LIMIT};
use crate::owa::OwaWeights;
use crate::schedule::{Assignment, GroupPartition, Matrix};

/// Solver used to turn a preference matrix into a schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ScheduleSolver {
    /// Exhaustive OWA optimum; only for `n <= 9`.
    Exact,
    /// Restarted 2-swap OWA hill climbing.
    LocalSearch(LocalSearchConfig),
    /// Maximum-total-utility assignment.
    Matching,
}

impl ScheduleSolver {
    /// Exact enumeration when it is allowed, else local search with `cfg`.
    pub fn owa_for(n: usize, cfg: LocalSearchConfig) -> Self {
        if n <= ENUMERATION_LIMIT {
            ScheduleSolver::Exact
        } else {
            ScheduleSolver::LocalSearch(cfg)
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ScheduleSolver::Exact)
    }

    pub fn name(&self) -> &'static str {
        match self {
            ScheduleSolver::Exact => "exact",
            ScheduleSolver::LocalSearch(_) => "local_search",
            ScheduleSolver::Matching => "matching",
        }
    }

    pub fn schedule(
        &self,
        prefs: &Matrix,
        weights: &OwaWeights,
        partition: &GroupPartition,
    ) -> Result<Assignment> {
        match self {
            ScheduleSolver::Exact => Ok(exact_owa_schedule(prefs, weights, partition)?.0),
            ScheduleSolver::LocalSearch(cfg) => Ok(local_search_owa(prefs, weights, partition, cfg)?.0),
            ScheduleSolver::Matching => solve_assignment(prefs),
        }
    }
}

/// Regret of one schedule against a reference optimum.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Regret {
    /// Reference OWA value minus achieved OWA value, clipped at 0.
    pub raw: f64,
    /// `raw` as a percentage of the reference value.
    pub percent: f64,
    pub reference_value: f64,
    pub achieved_value: f64,
    /// The achieved schedule beat a non-exact reference (raw regret < 0
    /// before clipping).
    pub reference_beaten: bool,
}

impl Regret {
    pub fn from_values(reference_value: f64, achieved_value: f64) -> Self {
        let diff = reference_value - achieved_value;
        let beaten = diff < -1e-12;
        let raw = diff.max(0.0);
        let percent = if reference_value > 0.0 {
            100.0 * raw / reference_value
        } else {
            0.0
        };
        Regret {
            raw,
            percent,
            reference_value,
            achieved_value,
            reference_beaten: beaten,
        }
    }
}

/// OWA value of the reference schedule for the true preferences.
pub fn reference_value(
    truth: &Matrix,
    weights: &OwaWeights,
    partition: &GroupPartition,
    reference: &ScheduleSolver,
) -> Result<f64> {
    let s = reference.schedule(truth, weights, partition)?;
    owa_objective(&s, truth, weights, partition)
}

/// `OWA(u^G(Π*(Y), Y)) − OWA(u^G(Π*(Ŷ), Y))` with both schedules from
/// `reference`.
pub fn regret(
    pred: &Matrix,
    truth: &Matrix,
    weights: &OwaWeights,
    partition: &GroupPartition,
    reference: &ScheduleSolver,
) -> Result<Regret> {
    check_len(truth.n(), pred.n())?;
    if let (ScheduleSolver::Exact, n) = (reference, truth.n()) {
        if n > ENUMERATION_LIMIT {
            return Err(Error::SizeLimit {
                n,
                limit: ENUMERATION_LIMIT,
            });
        }
    }
    let best = reference_value(truth, weights, partition, reference)?;
    let s = reference.schedule(pred, weights, partition)?;
    let got = owa_objective(&s, truth, weights, partition)?;
    let r = Regret::from_values(best, got);
    if r.reference_beaten && reference.is_exact() {
        return Err(Error::Numeric(format!(
            "schedule beat the exact optimum ({got} > {best})"
        )));
    }
    Ok(r)
}

/// Normalized mean pairwise difference `Σᵢ Σⱼ |uᵢ − uⱼ| / (n² ū)`.
pub fn nmpd(u: &[f64]) -> Result<f64> {
    if u.is_empty() {
        return Err(Error::UndefinedMetric("NMPD of an empty vector".into()));
    }
    let n = u.len() as f64;
    let mean = u.iter().sum::<f64>() / n;
    if mean <= 0.0 {
        return Err(Error::UndefinedMetric("NMPD needs a positive mean utility".into()));
    }
    // Sorted form: Σᵢ Σⱼ |uᵢ − uⱼ| = 2 Σₖ (2k − n + 1) u₍ₖ₎ for 0-based k.
    let mut s = u.to_vec();
    s.sort_by(f64::total_cmp);
    let total: f64 = s
        .iter()
        .enumerate()
        .map(|(k, v)| (2.0 * k as f64 - n + 1.0) * v)
        .sum::<f64>()
        * 2.0;
    Ok(total / (n * n * mean))
}
