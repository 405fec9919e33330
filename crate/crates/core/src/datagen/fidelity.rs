use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use super::cpt::{CptSet, TABLE_SHAPES};
use crate::error::Result;

/// Significance level of the goodness-of-fit checks.
pub const FIDELITY_ALPHA: f64 = 0.001;

/// Pearson goodness-of-fit of one table, pooled over its contexts.
#[derive(Debug, Clone, Serialize)]
pub struct ChiSquareResult {
    pub table: &'static str,
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Observations that fell on zero-probability categories.
    pub zero_violations: u64,
    pub counts: Vec<Vec<u64>>,
}

impl ChiSquareResult {
    pub fn passes(&self, alpha: f64) -> bool {
        self.zero_violations == 0 && self.p_value >= alpha
    }

    /// Observed frequency of `category` within `context`.
    pub fn frequency(&self, context: usize, category: usize) -> f64 {
        let row = &self.counts[context];
        row[category] as f64 / row.iter().sum::<u64>().max(1) as f64
    }
}

/// Samples `samples` defendants (with primary slots) and tests every table's
/// empirical conditionals against the table.
pub fn cpt_fidelity(cpts: &CptSet, samples: usize, seed: u64) -> Result<Vec<ChiSquareResult>> {
    cpts.validate()?;
    let mut counts: Vec<Vec<Vec<u64>>> = TABLE_SHAPES
        .iter()
        .map(|(_, ctx, cat)| vec![vec![0u64; *cat]; *ctx])
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let f = cpts.sample_defendant(&mut rng);
        let slot = cpts.sample_primary_slot(&f, &mut rng)?;
        let c = |x: u8| x as usize;
        let obs = [
            (0, c(f.race.code())),
            (0, c(f.age.code())),
            (0, c(f.gender.code())),
            (c(f.race.code()), c(f.transportation.code())),
            (c(f.race.code()), c(f.employment.code())),
            (c(f.employment.code()), c(f.work_hour.code())),
            (c(f.age.code()), c(f.children.code())),
            (CptSet::childcare_context(f.gender, f.children), c(f.childcare.code())),
            (CptSet::slot_context(f.transportation, f.work_hour, f.childcare), slot),
        ];
        for (t, (ctx, cat)) in obs.into_iter().enumerate() {
            counts[t][ctx][cat] += 1;
        }
    }

    Ok(cpts
        .tables()
        .into_iter()
        .zip(TABLE_SHAPES)
        .zip(counts)
        .map(|((cpt, (name, _, _)), counts)| {
            let mut statistic = 0.0;
            let mut dof = 0usize;
            let mut zero_violations = 0;
            for (ctx, row) in counts.iter().enumerate() {
                let total: u64 = row.iter().sum();
                if total == 0 {
                    continue;
                }
                let mut support = 0;
                for (&o, &p) in row.iter().zip(cpt.row(ctx)) {
                    if p <= 0.0 {
                        zero_violations += o;
                        continue;
                    }
                    let e = p * total as f64;
                    statistic += (o as f64 - e).powi(2) / e;
                    support += 1;
                }
                dof += support - 1;
            }
            let p_value = if dof == 0 {
                1.0
            } else {
                ChiSquared::new(dof as f64)
                    .expect("positive degrees of freedom")
                    .sf(statistic)
            };
            ChiSquareResult {
                table: name,
                statistic,
                dof,
                p_value,
                zero_violations,
                counts,
            }
        })
        .collect())
}
