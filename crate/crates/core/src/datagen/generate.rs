use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::cpt::{CptSet, COURT_SLOTS};
use crate::defendant::DefendantFeatures;
use crate::error::{Error, Result};
use crate::schedule::{GroupPartition, Matrix, PreferenceMatrix, SlotGrid};

pub const DEFAULT_CHOICE_WEIGHTS: [f64; 3] = [0.6, 0.3, 0.1];

/// Attribute used to group defendants for fairness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartitionAttribute {
    Individual,
    Employment,
    Transportation,
    WorkHours,
}

impl PartitionAttribute {
    pub const ALL: [PartitionAttribute; 4] = [
        PartitionAttribute::Individual,
        PartitionAttribute::Employment,
        PartitionAttribute::Transportation,
        PartitionAttribute::WorkHours,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            PartitionAttribute::Individual => "individual",
            PartitionAttribute::Employment => "employment",
            PartitionAttribute::Transportation => "transportation",
            PartitionAttribute::WorkHours => "work_hours",
        }
    }

    /// Raw group label of each defendant.
    pub fn labels(self, features: &[DefendantFeatures]) -> Vec<u32> {
        features
            .iter()
            .enumerate()
            .map(|(i, f)| match self {
                PartitionAttribute::Individual => i as u32,
                PartitionAttribute::Employment => f.employment.code() as u32,
                PartitionAttribute::Transportation => f.transportation.code() as u32,
                PartitionAttribute::WorkHours => f.work_hour.code() as u32,
            })
            .collect()
    }

    pub fn partition(self, features: &[DefendantFeatures]) -> Result<GroupPartition> {
        GroupPartition::from_labels(&self.labels(features))
    }
}

impl fmt::Display for PartitionAttribute {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PartitionAttribute {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| {
                Error::invalid(format!(
                    "unknown partition attribute {s:?} (expected individual, employment, transportation or work_hours)"
                ))
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub num_pools: usize,
    pub pool_size: usize,
    pub seed: u64,
    pub choice_weights: [f64; 3],
    pub partition: PartitionAttribute,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            num_pools: 250,
            pool_size: COURT_SLOTS,
            seed: 0,
            choice_weights: DEFAULT_CHOICE_WEIGHTS,
            partition: PartitionAttribute::Individual,
        }
    }
}

impl GenConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_pools == 0 {
            return Err(Error::Config("num_pools must be at least 1".into()));
        }
        if self.choice_weights.iter().any(|w| !(w.is_finite() && *w > 0.0)) {
            return Err(Error::Config("choice weights must be positive".into()));
        }
        grid_for(self.pool_size)?;
        Ok(())
    }
}

/// Slot grid for a pool of `n` defendants.
///
/// `n = 12` is the court day. Divisors of 12 give a coarsened day whose
/// slot `j` covers court slots `j·12/n .. (j+1)·12/n`.
pub fn grid_for(n: usize) -> Result<SlotGrid> {
    if n == COURT_SLOTS {
        return Ok(SlotGrid::court_day());
    }
    if n < 2 || !COURT_SLOTS.is_multiple_of(n) {
        return Err(Error::Config(format!(
            "pool size {n} unsupported; use 12 or a divisor of 12 that is at least 2"
        )));
    }
    let step = COURT_SLOTS / n;
    let court = SlotGrid::court_day();
    let labels = court.labels().iter().step_by(step).cloned().collect();
    SlotGrid::new(labels, n / 2)
}

/// Grid index holding court slot `k`.
fn coarse_slot(k: usize, n: usize) -> usize {
    k * n / COURT_SLOTS
}

/// Slots per hour on an `n`-slot grid (at least 1).
fn hour_offset(n: usize) -> usize {
    (2 * n / COURT_SLOTS).max(1)
}

fn nearest_free(target: usize, range: std::ops::Range<usize>, taken: &[usize]) -> Option<usize> {
    range
        .filter(|s| !taken.contains(s))
        .min_by_key(|&s| (s.abs_diff(target), s))
}

/// Slots of the first, second and third choice for primary slot `primary`.
///
/// Second and third choices sit one hour before and after the primary, are
/// clamped into the primary's block, and on collision move to the nearest
/// free slot in that block (then anywhere on the grid). A choice with no
/// free slot is dropped.
pub fn choice_slots(primary: usize, grid: &SlotGrid) -> Vec<usize> {
    let off = hour_offset(grid.len());
    let block = grid.block_of(primary);
    let mut taken = vec![primary];
    for target in [primary as isize - off as isize, (primary + off) as isize] {
        let clamped = target.clamp(block.start as isize, block.end as isize - 1) as usize;
        let slot = nearest_free(clamped, block.clone(), &taken)
            .or_else(|| nearest_free(clamped, 0..grid.len(), &taken));
        if let Some(s) = slot {
            taken.push(s);
        }
    }
    taken
}

/// One preference row: the primary slot is drawn from the slot table, the
/// three choices receive `weights` (renormalized over the choices placed)
/// and every other slot gets zero.
pub fn preference_row<R: Rng + ?Sized>(
    features: &DefendantFeatures,
    grid: &SlotGrid,
    cpts: &CptSet,
    weights: &[f64; 3],
    rng: &mut R,
) -> Result<Vec<f64>> {
    let n = grid.len();
    let primary = coarse_slot(cpts.sample_primary_slot(features, rng)?, n);
    let chosen = choice_slots(primary, grid);
    let total: f64 = weights[..chosen.len()].iter().sum();
    let mut row = vec![0.0; n];
    for (s, w) in chosen.iter().zip(weights) {
        row[*s] = w / total;
    }
    Ok(row)
}

/// One scheduling day: features, group labels and true preferences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pool {
    pub features: Vec<DefendantFeatures>,
    pub groups: Vec<u32>,
    pub prefs: PreferenceMatrix,
}

impl Pool {
    pub fn n(&self) -> usize {
        self.features.len()
    }

    pub fn partition(&self) -> Result<GroupPartition> {
        GroupPartition::from_labels(&self.groups)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetMeta {
    pub version: u32,
    pub seed: u64,
    pub n: usize,
    #[serde(rename = "N")]
    pub num_pools: usize,
    pub partition_attribute: PartitionAttribute,
    pub choice_weights: [f64; 3],
    pub grid: Vec<String>,
    pub block_boundary: usize,
    /// Free-form record of how the file was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub meta: DatasetMeta,
    pub pools: Vec<Pool>,
}

pub const DATASET_VERSION: u32 = 1;

impl Dataset {
    pub fn grid(&self) -> Result<SlotGrid> {
        SlotGrid::new(self.meta.grid.clone(), self.meta.block_boundary)
    }

    /// Copy of the dataset with groups recomputed for `attr`.
    pub fn regrouped(&self, attr: PartitionAttribute) -> Dataset {
        let mut ds = self.clone();
        ds.meta.partition_attribute = attr;
        for p in &mut ds.pools {
            p.groups = attr.labels(&p.features);
        }
        ds
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.meta.n;
        if self.meta.grid.len() != n {
            return Err(Error::invalid("grid length differs from pool size"));
        }
        if self.pools.len() != self.meta.num_pools {
            return Err(Error::invalid(format!(
                "header declares {} pools, found {}",
                self.meta.num_pools,
                self.pools.len()
            )));
        }
        for (k, p) in self.pools.iter().enumerate() {
            if p.features.len() != n || p.groups.len() != n || p.prefs.n() != n {
                return Err(Error::invalid(format!("pool {k} does not have {n} defendants")));
            }
            if p.groups != self.meta.partition_attribute.labels(&p.features) {
                return Err(Error::invalid(format!(
                    "pool {k} groups inconsistent with partition {}",
                    self.meta.partition_attribute
                )));
            }
        }
        Ok(())
    }
}

fn pool_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

/// Generates pool `index` from its own RNG stream.
pub fn generate_pool(cfg: &GenConfig, cpts: &CptSet, grid: &SlotGrid, index: usize) -> Result<Pool> {
    let mut rng = pool_rng(cfg.seed, index);
    let n = cfg.pool_size;
    let mut features = Vec::with_capacity(n);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let f = cpts.sample_defendant(&mut rng);
        rows.push(preference_row(&f, grid, cpts, &cfg.choice_weights, &mut rng)?);
        features.push(f);
    }
    Ok(Pool {
        groups: cfg.partition.labels(&features),
        features,
        prefs: PreferenceMatrix::new(Matrix::from_rows(rows)?)?,
    })
}

/// `cfg.num_pools` pools, each from RNG stream `(cfg.seed, pool index)`.
pub fn generate_dataset(cfg: &GenConfig, cpts: &CptSet) -> Result<Dataset> {
    cfg.validate()?;
    cpts.validate()?;
    let grid = grid_for(cfg.pool_size)?;
    let pools = (0..cfg.num_pools)
        .into_par_iter()
        .map(|k| generate_pool(cfg, cpts, &grid, k))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        meta: DatasetMeta {
            version: DATASET_VERSION,
            seed: cfg.seed,
            n: cfg.pool_size,
            num_pools: cfg.num_pools,
            partition_attribute: cfg.partition,
            choice_weights: cfg.choice_weights,
            grid: grid.labels().to_vec(),
            block_boundary: grid.block_boundary(),
            provenance: None,
        },
        pools,
    })
}
