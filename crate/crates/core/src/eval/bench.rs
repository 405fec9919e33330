use std::fmt::Write as _;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::matching::solve_assignment;
use crate::oracle::{exact_owa_schedule, ENUMERATION_LIMIT};
use crate::owa::gini_weights;
use crate::schedule::{GroupPartition, Matrix};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchRow {
    pub n: usize,
    pub repeat: usize,
    pub micros: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BenchSummary {
    pub n: usize,
    pub mean_micros: f64,
    pub p50_micros: f64,
    pub p95_micros: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct BenchTable {
    pub rows: Vec<BenchRow>,
}

impl BenchTable {
    pub fn summary(&self) -> Vec<BenchSummary> {
        let mut sizes: Vec<usize> = self.rows.iter().map(|r| r.n).collect();
        sizes.dedup();
        sizes
            .into_iter()
            .map(|n| {
                let mut t: Vec<f64> = self.rows.iter().filter(|r| r.n == n).map(|r| r.micros).collect();
                t.sort_by(f64::total_cmp);
                let pct = |q: f64| t[((t.len() - 1) as f64 * q).round() as usize];
                BenchSummary {
                    n,
                    mean_micros: t.iter().sum::<f64>() / t.len() as f64,
                    p50_micros: pct(0.5),
                    p95_micros: pct(0.95),
                }
            })
            .collect()
    }

    pub fn mean_micros(&self, n: usize) -> Option<f64> {
        self.summary().into_iter().find(|s| s.n == n).map(|s| s.mean_micros)
    }

    /// CSV with columns `n,repeat,micros`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("n,repeat,micros\n");
        for r in &self.rows {
            writeln!(out, "{},{},{:.3}", r.n, r.repeat, r.micros).expect("write to string");
        }
        out
    }
}

/// Seeded random profit matrix for size `n`, repeat `r`.
pub fn bench_matrix(n: usize, repeat: usize, seed: u64) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ (n as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    rng.set_stream(repeat as u64);
    Matrix::from_fn(n, |_, _| rng.gen())
}

fn time<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64() * 1e6))
}

fn check_sizes(sizes: &[usize], repeats: usize) -> Result<()> {
    if let Some(n) = sizes.iter().find(|&&n| n < 2) {
        return Err(Error::invalid(format!("benchmark size {n} below 2")));
    }
    if repeats == 0 {
        return Err(Error::invalid("benchmark needs at least one repeat"));
    }
    Ok(())
}

/// Wall-clock of [`solve_assignment`] on `repeats` random matrices per size.
pub fn bench_matching(sizes: &[usize], repeats: usize, seed: u64) -> Result<BenchTable> {
    check_sizes(sizes, repeats)?;
    let mut rows = Vec::with_capacity(sizes.len() * repeats);
    for &n in sizes {
        // One untimed warm-up solve per size.
        solve_assignment(&bench_matrix(n, usize::MAX, seed))?;
        for repeat in 0..repeats {
            let m = bench_matrix(n, repeat, seed);
            let (_, micros) = time(|| solve_assignment(&m))?;
            rows.push(BenchRow { n, repeat, micros });
        }
    }
    Ok(BenchTable { rows })
}

/// Wall-clock of exhaustive individual-fairness OWA scheduling; sizes above
/// the enumeration limit are skipped.
pub fn bench_enumeration(sizes: &[usize], repeats: usize, seed: u64) -> Result<BenchTable> {
    check_sizes(sizes, repeats)?;
    let mut rows = Vec::new();
    for &n in sizes.iter().filter(|&&n| n <= ENUMERATION_LIMIT) {
        let w = gini_weights(n)?;
        let part = GroupPartition::singletons(n);
        for repeat in 0..repeats {
            let m = bench_matrix(n, repeat, seed);
            let (_, micros) = time(|| exact_owa_schedule(&m, &w, &part))?;
            rows.push(BenchRow { n, repeat, micros });
        }
    }
    Ok(BenchTable { rows })
}

/// Least-squares slope of `log(mean time)` against `log(n)`.
pub fn log_log_slope(summary: &[BenchSummary]) -> f64 {
    let pts: Vec<(f64, f64)> = summary
        .iter()
        .map(|s| ((s.n as f64).ln(), s.mean_micros.max(1e-3).ln()))
        .collect();
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let cov: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = pts.iter().map(|(x, _)| (x - mx).powi(2)).sum();
    cov / var
}
