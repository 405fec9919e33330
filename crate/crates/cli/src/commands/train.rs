use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use fairsched::datagen::{read_dataset, Dataset, PartitionAttribute};
use fairsched::learn::{train, Checkpoint, LossKind, TrainConfig, TrainHistory};
use serde_json::json;

use super::{csv, num};
use crate::config::RunConfig;
use crate::provenance::{hash_input, write_output, InputFile, Provenance};

pub fn checkpoint_stem(loss: LossKind, partition: PartitionAttribute, seed: u64) -> String {
    format!("{}_{}_seed{}", loss.as_str(), partition.as_str(), seed)
}

/// Reads a dataset, reporting a missing file as such.
pub fn load_dataset(path: &Path) -> Result<(Dataset, InputFile)> {
    if !path.is_file() {
        anyhow::bail!("dataset file not found: {}", path.display());
    }
    let input = hash_input(path)?;
    let ds = read_dataset(path).with_context(|| format!("cannot load dataset {}", path.display()))?;
    Ok((ds, input))
}

/// Trains one model and wraps it in a checkpoint carrying `prov`.
pub fn train_one(
    ds: &Dataset,
    dataset_path: &Path,
    cfg: &TrainConfig,
    prov: &Provenance,
) -> Result<(Checkpoint, TrainHistory)> {
    let (model, history) = train(ds, cfg).with_context(|| {
        format!(
            "training {} (seed {}, partition {}) failed",
            cfg.loss, cfg.seed, cfg.partition
        )
    })?;
    let meta = json!({
        "provenance": prov,
        "dataset": dataset_path.display().to_string(),
        "best_epoch": history.best_epoch,
        "stopped_early": history.stopped_early,
    });
    Ok((Checkpoint::new(&model, cfg, meta), history))
}

fn history_csv(prov: &Provenance, h: &TrainHistory) -> String {
    let opt = |v: Option<f64>| v.map(num).unwrap_or_default();
    let mut rows = vec![vec!["0".to_string(), num(h.initial_loss), opt(h.initial_val_regret)]];
    rows.extend(
        h.epochs
            .iter()
            .map(|e| vec![e.epoch.to_string(), num(e.train_loss), opt(e.val_regret)]),
    );
    csv(&prov.csv_preamble(), "epoch,train_loss,val_regret_pct", &rows)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let dataset_path = cfg.train_dataset();
    let (ds, input) = load_dataset(&dataset_path)?;
    let prov = Provenance::new("train", cfg, vec![input]);
    let partitions = if cfg.train.partitions.is_empty() {
        vec![ds.meta.partition_attribute]
    } else {
        cfg.train.partitions.clone()
    };
    let models = cfg.out_dir.join("models");
    let mut timing = vec![];
    for &partition in &partitions {
        for &loss in &cfg.train.losses {
            for &seed in &cfg.train.seeds {
                let tc = cfg.train.train_config(loss, seed, partition);
                let (ckpt, history) = train_one(&ds, &dataset_path, &tc, &prov)?;
                let stem = checkpoint_stem(loss, partition, seed);
                let path: PathBuf = models.join(format!("{stem}.json"));
                std::fs::create_dir_all(&models).with_context(|| format!("cannot create {}", models.display()))?;
                ckpt.write(&path)?;
                write_output(&models.join(format!("{stem}.history.csv")), history_csv(&prov, &history).as_bytes())?;
                let last = history.epochs.last();
                println!(
                    "{stem}: {} epochs, best epoch {}, final loss {}",
                    history.epochs.len(),
                    history.best_epoch,
                    last.map(|e| format!("{:.6}", e.train_loss)).unwrap_or_else(|| "-".into())
                );
                for e in &history.epochs {
                    timing.push(vec![stem.clone(), e.epoch.to_string(), format!("{:.3}", e.wall_ms)]);
                }
            }
        }
    }
    // Wall-clock times vary between runs, so they live apart from the
    // reproducible outputs.
    write_output(
        &models.join("timing.csv"),
        csv("", "checkpoint,epoch,wall_ms", &timing).as_bytes(),
    )?;
    Ok(())
}
