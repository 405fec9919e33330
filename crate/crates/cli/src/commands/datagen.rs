use anyhow::{Context, Result};
use fairsched::datagen::{cpt_fidelity, generate_dataset, write_dataset, CptSet, GenConfig, FIDELITY_ALPHA};
use serde_json::json;

use crate::config::RunConfig;
use crate::exit::DataError;
use crate::provenance::{hash_input, write_json, Provenance};

fn load_cpts(cfg: &RunConfig) -> Result<(CptSet, Vec<crate::provenance::InputFile>)> {
    let Some(path) = &cfg.datagen.cpts else {
        return Ok((CptSet::default(), Vec::new()));
    };
    let load = || -> Result<_> {
        let input = hash_input(path)?;
        let text = std::fs::read_to_string(path)?;
        let cpts: CptSet =
            serde_json::from_str(&text).with_context(|| format!("invalid CPT file {}", path.display()))?;
        cpts.validate()
            .with_context(|| format!("invalid CPT file {}", path.display()))?;
        Ok((cpts, vec![input]))
    };
    load().map_err(DataError::wrap)
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let d = &cfg.datagen;
    let (cpts, inputs) = load_cpts(cfg)?;
    let prov = Provenance::new("datagen", cfg, inputs);
    let data_dir = cfg.out_dir.join("data");
    std::fs::create_dir_all(&data_dir).with_context(|| format!("cannot create {}", data_dir.display()))?;

    let gen = GenConfig {
        num_pools: d.n_pools,
        pool_size: d.pool_size,
        seed: d.seed,
        choice_weights: d.choice_weights,
        partition: d.partition,
    };
    let mut train = generate_dataset(&gen, &cpts)?;
    train.meta.provenance = Some(prov.to_json());
    let train_path = data_dir.join("train.jsonl");
    write_dataset(&train, &train_path)?;
    println!("wrote {} ({} pools of {})", train_path.display(), d.n_pools, d.pool_size);

    if d.test_pools > 0 {
        let test_cfg = GenConfig {
            num_pools: d.test_pools,
            seed: d.resolved_test_seed(),
            ..gen
        };
        let mut test = generate_dataset(&test_cfg, &cpts)?;
        test.meta.provenance = Some(prov.to_json());
        let test_path = data_dir.join("test.jsonl");
        write_dataset(&test, &test_path)?;
        println!("wrote {} ({} pools of {})", test_path.display(), d.test_pools, d.pool_size);
    }

    if d.fidelity_samples > 0 {
        let results = cpt_fidelity(&cpts, d.fidelity_samples, d.seed)?;
        println!("CPT chi-square check ({} samples, alpha {FIDELITY_ALPHA}):", d.fidelity_samples);
        for r in &results {
            println!(
                "  {:<28} chi2 {:>10.3}  dof {:>3}  p {:.4}  {}",
                r.table,
                r.statistic,
                r.dof,
                r.p_value,
                if r.passes(FIDELITY_ALPHA) { "ok" } else { "FAIL" }
            );
        }
        let path = data_dir.join("fidelity.json");
        write_json(
            &path,
            &json!({
                "provenance": prov,
                "alpha": FIDELITY_ALPHA,
                "samples": d.fidelity_samples,
                "tables": results,
            }),
        )?;
    }
    Ok(())
}
