//! The `fairsched` command line: datagen, train, eval and bench.

mod commands;
pub mod config;
pub mod exit;
pub mod provenance;

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::OnceLock;

use anyhow::{anyhow, Result};
use clap::{Args, Parser, Subcommand};
use fairsched::datagen::PartitionAttribute;
use fairsched::eval::InferenceMode;
use fairsched::learn::LossKind;

use config::{parse_list, parse_seeds, RunConfig};
pub use exit::code_for as exit_code;
use exit::UsageError;

/// Fair court scheduling experiments: data generation, training,
/// evaluation and solver benchmarks.
#[derive(Debug, Parser)]
#[command(name = "fairsched", version)]
struct Cli {
    /// JSON run configuration; flags override its values.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root of every output file.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate train (and optionally test) pools.
    Datagen(DatagenArgs),
    /// Train one model per loss, seed and partition.
    Train(TrainArgs),
    /// Score checkpoints on the test pools.
    Eval(EvalArgs),
    /// Time the matching solver against exhaustive OWA enumeration.
    Bench(BenchArgs),
}

#[derive(Debug, Args)]
struct DatagenArgs {
    #[arg(long)]
    n_pools: Option<usize>,
    #[arg(long)]
    pool_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// individual, employment, transportation or work_hours.
    #[arg(long)]
    partition: Option<PartitionAttribute>,
    /// First, second and third choice weights, e.g. `0.6,0.3,0.1`.
    #[arg(long)]
    choice_weights: Option<String>,
    #[arg(long)]
    test_pools: Option<usize>,
    #[arg(long)]
    test_seed: Option<u64>,
    /// JSON file replacing the built-in probability tables.
    #[arg(long)]
    cpts: Option<PathBuf>,
    #[arg(long)]
    fidelity_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct TrainArgs {
    #[arg(long)]
    dataset: Option<PathBuf>,
    /// Comma-separated: two_stage, tu_dq, owa_dq.
    #[arg(long, alias = "losses")]
    loss: Option<String>,
    /// `1..5`, `1..=5` or `1,3,7`.
    #[arg(long)]
    seeds: Option<String>,
    /// Comma-separated fairness partitions.
    #[arg(long)]
    partitions: Option<String>,
    #[arg(long)]
    learning_rate: Option<f64>,
    #[arg(long)]
    batch_size: Option<usize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Moreau smoothing for owa_dq.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    val_fraction: Option<f64>,
}

#[derive(Debug, Args)]
struct EvalArgs {
    #[arg(long)]
    test: Option<PathBuf>,
    #[arg(long)]
    models: Option<PathBuf>,
    /// Comma-separated fairness settings.
    #[arg(long)]
    settings: Option<String>,
    /// Also retrain owa_dq checkpoints with Moreau smoothing at this beta.
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    search_seed: Option<u64>,
    /// per_model (OWA program for two_stage, matching for the DQ models),
    /// owa or matching.
    #[arg(long)]
    inference: Option<InferenceMode>,
}

#[derive(Debug, Args)]
struct BenchArgs {
    /// Comma-separated pool sizes.
    #[arg(long)]
    sizes: Option<String>,
    #[arg(long)]
    repeats: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn usage<T>(r: Result<T>) -> Result<T> {
    r.map_err(UsageError::wrap)
}

fn resolve(cli: &Cli) -> Result<RunConfig> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    set(&mut cfg.out_dir, cli.out_dir.clone());
    match &cli.command {
        Command::Datagen(a) => {
            let d = &mut cfg.datagen;
            set(&mut d.n_pools, a.n_pools);
            set(&mut d.pool_size, a.pool_size);
            set(&mut d.seed, a.seed);
            set(&mut d.partition, a.partition);
            set(&mut d.test_pools, a.test_pools);
            set(&mut d.fidelity_samples, a.fidelity_samples);
            if a.test_seed.is_some() {
                d.test_seed = a.test_seed;
            }
            if a.cpts.is_some() {
                d.cpts = a.cpts.clone();
            }
            if let Some(s) = &a.choice_weights {
                let w: Vec<f64> = usage(parse_list(s))?;
                d.choice_weights = w
                    .try_into()
                    .map_err(|_| UsageError::wrap(anyhow!("--choice-weights needs three values")))?;
            }
            if d.n_pools == 0 {
                return Err(UsageError::wrap(anyhow!("--n-pools must be positive")));
            }
        }
        Command::Train(a) => {
            let t = &mut cfg.train;
            if a.dataset.is_some() {
                t.dataset = a.dataset.clone();
            }
            if let Some(s) = &a.loss {
                t.losses = usage(parse_list::<LossKind>(s))?;
            }
            if let Some(s) = &a.seeds {
                t.seeds = usage(parse_seeds(s))?;
            }
            if let Some(s) = &a.partitions {
                t.partitions = usage(parse_list(s))?;
            }
            set(&mut t.learning_rate, a.learning_rate);
            set(&mut t.batch_size, a.batch_size);
            set(&mut t.epochs, a.epochs);
            set(&mut t.patience, a.patience);
            set(&mut t.lambda, a.lambda);
            set(&mut t.hidden, a.hidden);
            set(&mut t.val_fraction, a.val_fraction);
            if a.beta.is_some() {
                t.beta = a.beta;
            }
            if t.losses.is_empty() || t.seeds.is_empty() {
                return Err(UsageError::wrap(anyhow!("train needs at least one loss and one seed")));
            }
        }
        Command::Eval(a) => {
            let e = &mut cfg.eval;
            if a.test.is_some() {
                e.test = a.test.clone();
            }
            if a.models.is_some() {
                e.models = a.models.clone();
            }
            if let Some(s) = &a.settings {
                e.settings = usage(parse_list(s))?;
            }
            if a.beta.is_some() {
                e.beta = a.beta;
            }
            set(&mut e.search.restarts, a.restarts);
            set(&mut e.search.max_iters, a.max_iters);
            set(&mut e.search.seed, a.search_seed);
            set(&mut e.inference, a.inference);
            if e.beta.is_some_and(|b| !(b > 0.0 && b.is_finite())) {
                return Err(UsageError::wrap(anyhow!("--beta must be positive")));
            }
        }
        Command::Bench(a) => {
            let b = &mut cfg.bench;
            if let Some(s) = &a.sizes {
                b.sizes = usage(parse_list(s))?;
            }
            set(&mut b.repeats, a.repeats);
            set(&mut b.seed, a.seed);
        }
    }
    Ok(cfg)
}

fn configure_threads() -> Result<()> {
    static POOL: OnceLock<std::result::Result<(), String>> = OnceLock::new();
    let Ok(v) = std::env::var("FAIRSCHED_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| UsageError::wrap(anyhow!("FAIRSCHED_THREADS must be a positive integer, got {v:?}")))?;
    // The global pool can be sized once per process.
    POOL.get_or_init(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| e.to_string())
    })
    .clone()
    .map_err(|e| anyhow!("cannot size the worker pool: {e}"))
}

fn dispatch(cli: &Cli) -> Result<()> {
    configure_threads()?;
    let cfg = resolve(cli)?;
    match cli.command {
        Command::Datagen(_) => commands::datagen::run(&cfg),
        Command::Train(_) => commands::train::run(&cfg),
        Command::Eval(_) => commands::eval::run(&cfg),
        Command::Bench(_) => commands::bench::run(&cfg),
    }
}

/// Parses `args` (program name first) and runs the command. Help and
/// version requests print and succeed; other parse failures are usage
/// errors.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            print!("{e}");
            return Ok(());
        }
        Err(e) => {
            let msg = e.render().to_string();
            let msg = msg.trim_end().trim_start_matches("error: ");
            return Err(UsageError::wrap(anyhow!("{msg}")));
        }
    };
    dispatch(&cli)
}
