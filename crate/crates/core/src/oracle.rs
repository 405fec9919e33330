//! Reference solvers for the OWA scheduling program
//! `max_Π OWA_w(u^G(Π, Y))` over permutation matrices.
//!
//! The program is NP-hard in general. [`exact_owa_schedule`] enumerates all
//! `n!` schedules and is limited to `n <= 9`; [`local_search_owa`] is a
//! restarted best-improvement 2-swap hill climber used at court-day scale.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::owa::{owa_value, OwaWeights};
use crate::schedule::{group_utilities, Assignment, GroupPartition, Matrix};

pub const ENUMERATION_LIMIT: usize = 9;

/// Improvements smaller than this do not count as progress.
const IMPROVE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LocalSearchConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl LocalSearchConfig {
    /// Settings used when local search stands in for the exact reference.
    pub const REFERENCE: LocalSearchConfig = LocalSearchConfig {
        restarts: 50,
        max_iters: 5000,
        seed: 0,
    };

    pub fn validate(&self) -> Result<()> {
        if self.restarts == 0 || self.max_iters == 0 {
            return Err(Error::invalid("local search needs restarts >= 1 and max_iters >= 1"));
        }
        Ok(())
    }
}

impl Default for LocalSearchConfig {
    fn default() -> Self {
        Self::REFERENCE
    }
}

/// OWA of group utilities for one schedule.
pub fn owa_objective(
    assignment: &Assignment,
    prefs: &Matrix,
    weights: &OwaWeights,
    partition: &GroupPartition,
) -> Result<f64> {
    let g = group_utilities(assignment, prefs, partition)?;
    owa_value(weights, &g)
}

fn check_instance(prefs: &Matrix, weights: &OwaWeights, partition: &GroupPartition) -> Result<()> {
    check_len(prefs.n(), partition.n())?;
    check_len(partition.num_groups(), weights.len())?;
    if prefs.n() == 0 {
        return Err(Error::invalid("empty scheduling instance"));
    }
    Ok(())
}

/// Evaluates group-OWA objectives with reusable buffers.
struct Evaluator<'a> {
    prefs: &'a Matrix,
    weights: &'a [f64],
    partition: &'a GroupPartition,
    inv_size: Vec<f64>,
    sums: Vec<f64>,
    scratch: Vec<f64>,
}

impl<'a> Evaluator<'a> {
    fn new(prefs: &'a Matrix, weights: &'a OwaWeights, partition: &'a GroupPartition) -> Self {
        let k = partition.num_groups();
        Evaluator {
            prefs,
            weights: weights.as_slice(),
            partition,
            inv_size: partition
                .groups()
                .iter()
                .map(|g| 1.0 / g.len() as f64)
                .collect(),
            sums: vec![0.0; k],
            scratch: vec![0.0; k],
        }
    }

    fn load(&mut self, perm: &[usize]) {
        self.sums.iter_mut().for_each(|s| *s = 0.0);
        for (i, &s) in perm.iter().enumerate() {
            self.sums[self.partition.group_of(i)] += self.prefs[(i, s)];
        }
    }

    fn value_of_sums(&mut self) -> f64 {
        for (dst, (s, inv)) in self.scratch.iter_mut().zip(self.sums.iter().zip(&self.inv_size)) {
            *dst = s * inv;
        }
        self.scratch.sort_by(f64::total_cmp);
        self.scratch.iter().zip(self.weights).map(|(u, w)| u * w).sum()
    }

    fn value(&mut self, perm: &[usize]) -> f64 {
        self.load(perm);
        self.value_of_sums()
    }

    /// Objective after swapping the slots of defendants `a` and `b`, without
    /// committing the swap. `self.sums` must match `perm`.
    fn swapped_value(&mut self, perm: &[usize], a: usize, b: usize) -> f64 {
        let (ga, gb) = (self.partition.group_of(a), self.partition.group_of(b));
        let da = self.prefs[(a, perm[b])] - self.prefs[(a, perm[a])];
        let db = self.prefs[(b, perm[a])] - self.prefs[(b, perm[b])];
        self.sums[ga] += da;
        self.sums[gb] += db;
        let v = self.value_of_sums();
        self.sums[ga] -= da;
        self.sums[gb] -= db;
        v
    }
}

/// Rearranges `p` into the next permutation in lexicographic order; returns
/// false after the last one.
fn next_permutation(p: &mut [usize]) -> bool {
    let Some(i) = p.windows(2).rposition(|w| w[0] < w[1]) else {
        return false;
    };
    let j = p.iter().rposition(|&x| x > p[i]).expect("successor exists");
    p.swap(i, j);
    p[i + 1..].reverse();
    true
}

/// Exact optimum by enumerating all schedules in lexicographic order; the
/// first schedule attaining the maximum is returned.
pub fn exact_owa_schedule(
    prefs: &Matrix,
    weights: &OwaWeights,
    partition: &GroupPartition,
) -> Result<(Assignment, f64)> {
    let n = prefs.n();
    if n > ENUMERATION_LIMIT {
        return Err(Error::SizeLimit {
            n,
            limit: ENUMERATION_LIMIT,
        });
    }
    check_instance(prefs, weights, partition)?;
    let mut eval = Evaluator::new(prefs, weights, partition);
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = perm.clone();
    let mut best_val = eval.value(&perm);
    while next_permutation(&mut perm) {
        let v = eval.value(&perm);
        if v > best_val {
            best_val = v;
            best.copy_from_slice(&perm);
        }
    }
    Ok((Assignment::from_perm(best)?, best_val))
}

/// Best-improvement 2-swap hill climbing from `cfg.restarts` random starts.
///
/// Restart `r` draws its start from stream `r` of a ChaCha generator seeded
/// with `cfg.seed`, so adding restarts never changes earlier ones. Each
/// iteration scans all `n(n-1)/2` swaps and applies the best strictly
/// improving one.
pub fn local_search_owa(
    prefs: &Matrix,
    weights: &OwaWeights,
    partition: &GroupPartition,
    cfg: &LocalSearchConfig,
) -> Result<(Assignment, f64)> {
    cfg.validate()?;
    check_instance(prefs, weights, partition)?;
    let n = prefs.n();
    if n < 2 {
        return Err(Error::invalid("local search needs n >= 2"));
    }
    let mut eval = Evaluator::new(prefs, weights, partition);
    let mut best: Option<(Vec<usize>, f64)> = None;
    for r in 0..cfg.restarts {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(r as u64);
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let val = climb(&mut eval, &mut perm, cfg.max_iters);
        if best.as_ref().is_none_or(|(_, b)| val > *b) {
            best = Some((perm, val));
        }
    }
    let (perm, val) = best.expect("restarts >= 1");
    Ok((Assignment::from_perm(perm)?, val))
}

fn climb(eval: &mut Evaluator<'_>, perm: &mut [usize], max_iters: usize) -> f64 {
    let n = perm.len();
    let mut current = eval.value(perm);
    for _ in 0..max_iters {
        let mut best_move = None;
        let mut best_val = current + IMPROVE_EPS;
        for a in 0..n {
            for b in a + 1..n {
                let v = eval.swapped_value(perm, a, b);
                if v > best_val {
                    best_val = v;
                    best_move = Some((a, b));
                }
            }
        }
        let Some((a, b)) = best_move else { break };
        perm.swap(a, b);
        eval.load(perm);
        current = eval.value_of_sums();
    }
    current
}
