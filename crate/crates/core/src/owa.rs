//! Ordered weighted averaging.
//!
//! `OWA_w(y) = wᵀ τ(y)` where `τ` sorts `y` ascending. With nonincreasing
//! weights the operator is concave and puts the most weight on the worst-off
//! coordinate. This module provides the value, an exact supergradient, and
//! the gradient of the Moreau-smoothed operator computed as a Euclidean
//! projection onto the permutahedron of `w`.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};

const SIMPLEX_TOL: f64 = 1e-9;

/// Nonnegative, nonincreasing weights on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct OwaWeights(Vec<f64>);

impl OwaWeights {
    /// Accepts any nonincreasing simplex vector. Uniform weights (the mean)
    /// are allowed; use [`OwaWeights::is_fair`] to require strict decrease.
    pub fn new(w: Vec<f64>) -> Result<Self> {
        if w.is_empty() {
            return Err(Error::invalid("OWA weights must be nonempty"));
        }
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::invalid("OWA weights must be finite and nonnegative"));
        }
        if w.windows(2).any(|p| p[1] > p[0]) {
            return Err(Error::invalid("OWA weights must be nonincreasing"));
        }
        let s: f64 = w.iter().sum();
        if (s - 1.0).abs() > SIMPLEX_TOL {
            return Err(Error::invalid(format!("OWA weights sum to {s}, expected 1")));
        }
        Ok(OwaWeights(w))
    }

    /// Strictly decreasing positive weights: `w₁ > w₂ > … > w_m > 0`.
    pub fn fair(w: Vec<f64>) -> Result<Self> {
        let w = Self::new(w)?;
        if !w.is_fair() {
            return Err(Error::invalid("fair OWA weights must be strictly decreasing and positive"));
        }
        Ok(w)
    }

    pub fn uniform(m: usize) -> Result<Self> {
        if m == 0 {
            return Err(Error::invalid("OWA weights must be nonempty"));
        }
        Ok(OwaWeights(vec![1.0 / m as f64; m]))
    }

    pub fn is_fair(&self) -> bool {
        self.0.windows(2).all(|p| p[0] > p[1]) && self.0.last().is_some_and(|v| *v > 0.0)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for OwaWeights {
    type Error = Error;

    fn try_from(w: Vec<f64>) -> Result<Self> {
        OwaWeights::new(w)
    }
}

impl From<OwaWeights> for Vec<f64> {
    fn from(w: OwaWeights) -> Self {
        w.0
    }
}

/// Smoothing strength of the Moreau envelope.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MoreauConfig {
    beta: f64,
}

impl MoreauConfig {
    pub fn new(beta: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::invalid(format!("beta must be positive, got {beta}")));
        }
        Ok(MoreauConfig { beta })
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }
}

/// Gini weights `(m - i + 1) / m` for `i = 1..m`, normalized to sum 1.
pub fn gini_weights(m: usize) -> Result<OwaWeights> {
    if m == 0 {
        return Err(Error::invalid("gini weights need m >= 1"));
    }
    // Raw weights sum to (m + 1) / 2.
    let total = (m + 1) as f64 / 2.0;
    let w = (1..=m)
        .map(|i| (m - i + 1) as f64 / m as f64 / total)
        .collect();
    Ok(OwaWeights(w))
}

/// Indices of `y` in ascending order of value, ties by index.
pub fn sorting_permutation(y: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..y.len()).collect();
    idx.sort_by(|&a, &b| y[a].total_cmp(&y[b]));
    idx
}

pub fn owa_value(weights: &OwaWeights, y: &[f64]) -> Result<f64> {
    check_len(weights.len(), y.len())?;
    Ok(sorting_permutation(y)
        .into_iter()
        .zip(weights.as_slice())
        .map(|(i, w)| w * y[i])
        .sum())
}

/// `w` scattered so that the k-th smallest entry of `y` receives `w_k`.
pub fn owa_subgradient(weights: &OwaWeights, y: &[f64]) -> Result<Vec<f64>> {
    check_len(weights.len(), y.len())?;
    let mut g = vec![0.0; y.len()];
    for (&i, &w) in sorting_permutation(y).iter().zip(weights.as_slice()) {
        g[i] = w;
    }
    Ok(g)
}

/// Euclidean projection of `z` onto the permutahedron of `weights` (the
/// convex hull of all permutations of `w`).
///
/// Sort `z` descending, fit a nonincreasing isotonic regression to
/// `z_sorted - w`, subtract the fit and undo the sort.
pub fn permutahedron_project(z: &[f64], weights: &OwaWeights) -> Result<Vec<f64>> {
    check_len(weights.len(), z.len())?;
    if z.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("projection input must be finite"));
    }
    let mut order: Vec<usize> = (0..z.len()).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]));
    // `weights` is already nonincreasing.
    let target: Vec<f64> = order
        .iter()
        .zip(weights.as_slice())
        .map(|(&i, w)| z[i] - w)
        .collect();
    let fit = isotonic_nonincreasing(&target);
    let mut out = vec![0.0; z.len()];
    for (k, &i) in order.iter().enumerate() {
        out[i] = z[i] - fit[k];
    }
    Ok(out)
}

/// Least-squares fit `v₁ ≥ v₂ ≥ … ≥ v_m` to `y` by pool adjacent violators.
pub fn isotonic_nonincreasing(y: &[f64]) -> Vec<f64> {
    // Blocks as (sum, count); merge while a later block mean exceeds the
    // previous one.
    let mut blocks: Vec<(f64, usize)> = Vec::with_capacity(y.len());
    for &v in y {
        blocks.push((v, 1));
        while blocks.len() > 1 {
            let (s2, c2) = blocks[blocks.len() - 1];
            let (s1, c1) = blocks[blocks.len() - 2];
            if s2 / c2 as f64 > s1 / c1 as f64 {
                blocks.pop();
                let last = blocks.last_mut().expect("len > 1");
                *last = (s1 + s2, c1 + c2);
            } else {
                break;
            }
        }
    }
    blocks
        .into_iter()
        .flat_map(|(s, c)| std::iter::repeat_n(s / c as f64, c))
        .collect()
}

/// Gradient of the Moreau envelope of the (concave) OWA operator.
///
/// The smoothed operator is `-env_β(σ_C)(-y)` with `σ_C` the support function
/// of the permutahedron, so its gradient is `proj_C(-y / β)`. As `β → 0` this
/// converges to [`owa_subgradient`] at tie-free points.
pub fn moreau_gradient(weights: &OwaWeights, y: &[f64], cfg: MoreauConfig) -> Result<Vec<f64>> {
    check_len(weights.len(), y.len())?;
    let scaled: Vec<f64> = y.iter().map(|v| -v / cfg.beta).collect();
    permutahedron_project(&scaled, weights)
}

/// Whether `v` lies in the permutahedron of `w` (majorization test).
pub fn in_permutahedron(v: &[f64], weights: &OwaWeights, tol: f64) -> bool {
    if v.len() != weights.len() {
        return false;
    }
    let mut sorted = v.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut ps = 0.0;
    let mut pw = 0.0;
    for (a, b) in sorted.iter().zip(weights.as_slice()) {
        ps += a;
        pw += b;
        if ps > pw + tol {
            return false;
        }
    }
    (ps - pw).abs() <= tol
}
