//! The matching layer: maximum-total-utility assignment and its
//! finite-difference backward pass.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, Error, Result};
use crate::schedule::{Assignment, Matrix};

/// Step size of the perturbed re-solve in the backward pass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlackboxConfig {
    lambda: f64,
}

impl BlackboxConfig {
    pub const DEFAULT_LAMBDA: f64 = 10.0;

    pub fn new(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda.is_finite()) {
            return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
        }
        Ok(BlackboxConfig { lambda })
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

impl Default for BlackboxConfig {
    fn default() -> Self {
        BlackboxConfig {
            lambda: Self::DEFAULT_LAMBDA,
        }
    }
}

/// Permutation maximizing `Tr(Pᵀ Π)` for a square profit matrix `P`.
///
/// Runs the shortest-augmenting-path Hungarian method with dual potentials
/// on the cost matrix `-P`; worst case `O(n³)`. Among equal-value optima the
/// result depends only on the input (fixed scan order).
pub fn solve_assignment(profits: &Matrix) -> Result<Assignment> {
    if !profits.is_finite() {
        return Err(Error::invalid("assignment profits must be finite"));
    }
    let n = profits.n();
    if n == 0 {
        return Err(Error::invalid("assignment over an empty matrix"));
    }
    let cost = |i: usize, j: usize| -profits[(i, j)];

    // 1-based arrays; row/column 0 is the virtual source.
    let mut u = vec![0.0f64; n + 1];
    let mut v = vec![0.0f64; n + 1];
    let mut row_of_col = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    let mut minv = vec![0.0f64; n + 1];
    let mut used = vec![false; n + 1];

    for i in 1..=n {
        row_of_col[0] = i;
        let mut j0 = 0usize;
        minv.iter_mut().for_each(|m| *m = f64::INFINITY);
        used.iter_mut().for_each(|b| *b = false);
        loop {
            used[j0] = true;
            let i0 = row_of_col[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0 - 1, j - 1) - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of_col[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of_col[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of_col[j0] = row_of_col[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut perm = vec![0usize; n];
    for j in 1..=n {
        perm[row_of_col[j] - 1] = j - 1;
    }
    Assignment::from_perm(perm)
}

/// Blackbox gradient of a loss through [`solve_assignment`].
///
/// Re-solves at `profits - λ · ∂L/∂Π` and returns `(Π - Π_λ) / λ`, the
/// gradient of the piecewise-linear interpolation of `L ∘ solve_assignment`.
/// Moving `profits` against the returned matrix lowers that loss.
pub fn matching_backward(
    profits: &Matrix,
    solution: &Assignment,
    upstream_grad: &Matrix,
    cfg: BlackboxConfig,
) -> Result<Matrix> {
    let n = profits.n();
    check_len(n, solution.n())?;
    check_len(n, upstream_grad.n())?;
    let lambda = cfg.lambda();
    let perturbed = profits.axpy(-lambda, upstream_grad)?;
    let moved = solve_assignment(&perturbed)?;
    let mut grad = Matrix::zeros(n);
    for i in 0..n {
        grad[(i, solution.slot_of(i))] += 1.0 / lambda;
        grad[(i, moved.slot_of(i))] -= 1.0 / lambda;
    }
    Ok(grad)
}
