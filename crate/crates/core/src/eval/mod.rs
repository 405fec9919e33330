//! Regret and fairness metrics, model evaluation, and solver benchmarks.

mod bench;
mod evaluate;
mod metrics;

pub use bench::{
    bench_enumeration, bench_matching, bench_matrix, log_log_slope, BenchRow, BenchSummary,
    BenchTable,
};
pub use evaluate::{evaluate_model, inference_solver, EvalConfig, InferenceMode, EvalReport, PoolEval};
pub use metrics::{nmpd, reference_value, regret, Regret, ScheduleSolver};
