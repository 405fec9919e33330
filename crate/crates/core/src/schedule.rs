//! Domain types shared by every stage of the pipeline: slot grids, preference
//! matrices, assignments, group partitions, and the utility algebra on them.

use std::ops::{Deref, Index, IndexMut};

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

/// Row sums of a preference matrix must match 1 within this tolerance.
pub const ROW_SUM_TOL: f64 = 1e-9;

/// Ordered list of appointment slots for one court day.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SlotGrid {
    labels: Vec<String>,
    /// Index of the first slot after the morning block.
    block_boundary: usize,
}

impl SlotGrid {
    pub fn new(labels: Vec<String>, block_boundary: usize) -> Result<Self> {
        if labels.len() < 2 {
            return Err(Error::invalid("slot grid needs at least 2 slots"));
        }
        if block_boundary > labels.len() {
            return Err(Error::invalid(format!(
                "block boundary {block_boundary} outside grid of {} slots",
                labels.len()
            )));
        }
        for (i, a) in labels.iter().enumerate() {
            if labels[..i].contains(a) {
                return Err(Error::invalid(format!("duplicate slot label {a:?}")));
            }
        }
        Ok(SlotGrid {
            labels,
            block_boundary,
        })
    }

    /// A single-block grid of `n` numbered slots.
    pub fn uniform(n: usize) -> Result<Self> {
        Self::new((0..n).map(|i| format!("slot{i}")).collect(), n)
    }

    /// Half-hour slots 8:00-10:30 AM and 1:00-3:30 PM.
    pub fn court_day() -> Self {
        let labels = [
            "8:00AM", "8:30AM", "9:00AM", "9:30AM", "10:00AM", "10:30AM", "1:00PM", "1:30PM",
            "2:00PM", "2:30PM", "3:00PM", "3:30PM",
        ];
        SlotGrid {
            labels: labels.iter().map(|s| s.to_string()).collect(),
            block_boundary: 6,
        }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn block_boundary(&self) -> usize {
        self.block_boundary
    }

    /// Half-open index range of the block containing `slot`.
    pub fn block_of(&self, slot: usize) -> std::ops::Range<usize> {
        if slot < self.block_boundary {
            0..self.block_boundary
        } else {
            self.block_boundary..self.labels.len()
        }
    }
}

impl Default for SlotGrid {
    fn default() -> Self {
        Self::court_day()
    }
}

/// Dense square matrix in row-major order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct Matrix {
    n: usize,
    data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(n: usize) -> Self {
        Matrix {
            n,
            data: vec![0.0; n * n],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::invalid(format!(
                    "matrix is not square: row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Matrix { n, data })
    }

    pub fn from_fn(n: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for i in 0..n {
            for j in 0..n {
                data.push(f(i, j));
            }
        }
        Matrix { n, data }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.n..(i + 1) * self.n]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.data.chunks(self.n.max(1))
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.rows().map(<[f64]>::to_vec).collect()
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    /// `self + alpha * other`.
    pub fn axpy(&self, alpha: f64, other: &Matrix) -> Result<Matrix> {
        check_len(self.n, other.n)?;
        Ok(Matrix {
            n: self.n,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + alpha * b)
                .collect(),
        })
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix {
            n: self.n,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }

    pub fn frobenius_sq(&self) -> f64 {
        self.data.iter().map(|v| v * v).sum()
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.n + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.n + j]
    }
}

impl TryFrom<Vec<Vec<f64>>> for Matrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Matrix::from_rows(rows)
    }
}

impl From<Matrix> for Vec<Vec<f64>> {
    fn from(m: Matrix) -> Self {
        m.to_rows()
    }
}

/// Row-stochastic preference matrix: row `i` is defendant `i`'s distribution
/// over slots.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Matrix", into = "Matrix")]
pub struct PreferenceMatrix(Matrix);

impl PreferenceMatrix {
    pub fn new(m: Matrix) -> Result<Self> {
        for (i, row) in m.rows().enumerate() {
            if let Some(j) = row.iter().position(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::invalid(format!(
                    "preference entry ({i},{j}) = {} outside [0,1]",
                    row[j]
                )));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_SUM_TOL {
                return Err(Error::invalid(format!(
                    "preference row {i} sums to {s}, expected 1"
                )));
            }
        }
        Ok(PreferenceMatrix(m))
    }

    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(Matrix::from_rows(rows)?)
    }

    pub fn n(&self) -> usize {
        self.0.n()
    }

    pub fn as_matrix(&self) -> &Matrix {
        &self.0
    }

    pub fn into_matrix(self) -> Matrix {
        self.0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        self.0.row(i)
    }
}

impl Deref for PreferenceMatrix {
    type Target = Matrix;

    fn deref(&self) -> &Matrix {
        &self.0
    }
}

impl TryFrom<Matrix> for PreferenceMatrix {
    type Error = Error;

    fn try_from(m: Matrix) -> Result<Self> {
        PreferenceMatrix::new(m)
    }
}

impl From<PreferenceMatrix> for Matrix {
    fn from(p: PreferenceMatrix) -> Self {
        p.0
    }
}

/// A schedule: `perm[i]` is the slot given to defendant `i`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Assignment {
    perm: Vec<usize>,
}

impl Assignment {
    pub fn from_perm(perm: Vec<usize>) -> Result<Self> {
        let n = perm.len();
        let mut seen = vec![false; n];
        for &s in &perm {
            if s >= n || std::mem::replace(&mut seen[s], true) {
                return Err(Error::invalid(format!("{perm:?} is not a permutation")));
            }
        }
        Ok(Assignment { perm })
    }

    pub fn identity(n: usize) -> Self {
        Assignment {
            perm: (0..n).collect(),
        }
    }

    pub fn n(&self) -> usize {
        self.perm.len()
    }

    pub fn slot_of(&self, defendant: usize) -> usize {
        self.perm[defendant]
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.perm
    }

    pub fn swap(&mut self, a: usize, b: usize) {
        self.perm.swap(a, b);
    }

    /// Permutation-matrix view with `Π[i][σ(i)] = 1`.
    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.n());
        for (i, &s) in self.perm.iter().enumerate() {
            m[(i, s)] = 1.0;
        }
        m
    }
}

impl TryFrom<Vec<usize>> for Assignment {
    type Error = Error;

    fn try_from(perm: Vec<usize>) -> Result<Self> {
        Assignment::from_perm(perm)
    }
}

impl From<Assignment> for Vec<usize> {
    fn from(a: Assignment) -> Self {
        a.perm
    }
}

/// Disjoint nonempty groups covering `0..n`.
///
/// Built from raw labels; groups are ordered by label value and only labels
/// that actually occur produce a group.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupPartition {
    group_of: Vec<usize>,
    groups: Vec<Vec<usize>>,
    labels: Vec<u32>,
}

impl GroupPartition {
    pub fn from_labels(raw: &[u32]) -> Result<Self> {
        if raw.is_empty() {
            return Err(Error::invalid("group partition over zero defendants"));
        }
        let mut labels: Vec<u32> = raw.to_vec();
        labels.sort_unstable();
        labels.dedup();
        let mut groups = vec![Vec::new(); labels.len()];
        let mut group_of = Vec::with_capacity(raw.len());
        for (i, l) in raw.iter().enumerate() {
            let g = labels.binary_search(l).expect("label collected above");
            groups[g].push(i);
            group_of.push(g);
        }
        Ok(GroupPartition {
            group_of,
            groups,
            labels,
        })
    }

    /// Every defendant in their own group.
    pub fn singletons(n: usize) -> Self {
        GroupPartition {
            group_of: (0..n).collect(),
            groups: (0..n).map(|i| vec![i]).collect(),
            labels: (0..n as u32).collect(),
        }
    }

    /// Build directly from index sets; they must be nonempty, disjoint, and
    /// cover `0..n`.
    pub fn from_groups(n: usize, groups: Vec<Vec<usize>>) -> Result<Self> {
        let mut group_of = vec![usize::MAX; n];
        for (g, members) in groups.iter().enumerate() {
            if members.is_empty() {
                return Err(Error::invalid(format!("group {g} is empty")));
            }
            for &i in members {
                if i >= n || group_of[i] != usize::MAX {
                    return Err(Error::invalid(format!(
                        "index {i} out of range or in two groups"
                    )));
                }
                group_of[i] = g;
            }
        }
        if let Some(i) = group_of.iter().position(|&g| g == usize::MAX) {
            return Err(Error::invalid(format!("defendant {i} not in any group")));
        }
        let labels = (0..groups.len() as u32).collect();
        Ok(GroupPartition {
            group_of,
            groups,
            labels,
        })
    }

    pub fn n(&self) -> usize {
        self.group_of.len()
    }

    pub fn num_groups(&self) -> usize {
        self.groups.len()
    }

    pub fn group_of(&self, i: usize) -> usize {
        self.group_of[i]
    }

    pub fn groups(&self) -> &[Vec<usize>] {
        &self.groups
    }

    /// Original label of each compact group index.
    pub fn labels(&self) -> &[u32] {
        &self.labels
    }
}

/// Per-defendant or per-group utilities.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct UtilityVector(pub Vec<f64>);

impl UtilityVector {
    pub fn sum(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.0.len() as f64
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for UtilityVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `u_i = Y[i][σ(i)]`, the diagonal of `Yᵀ Π`.
pub fn utility_vector(assignment: &Assignment, prefs: &Matrix) -> Result<UtilityVector> {
    check_len(prefs.n(), assignment.n())?;
    Ok(UtilityVector(
        (0..assignment.n())
            .map(|i| prefs[(i, assignment.slot_of(i))])
            .collect(),
    ))
}

/// `Tr(Yᵀ Π)`.
pub fn total_utility(assignment: &Assignment, prefs: &Matrix) -> Result<f64> {
    Ok(utility_vector(assignment, prefs)?.sum())
}

/// Mean member utility of each group.
pub fn group_utilities(
    assignment: &Assignment,
    prefs: &Matrix,
    partition: &GroupPartition,
) -> Result<UtilityVector> {
    check_len(prefs.n(), partition.n())?;
    let u = utility_vector(assignment, prefs)?;
    partition
        .groups()
        .iter()
        .enumerate()
        .map(|(g, members)| {
            if members.is_empty() {
                return Err(Error::invalid(format!("group {g} is empty")));
            }
            Ok(members.iter().map(|&i| u[i]).sum::<f64>() / members.len() as f64)
        })
        .collect::<Result<Vec<_>>>()
        .map(UtilityVector)
}
