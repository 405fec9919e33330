use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use fairsched::eval::{evaluate_model, EvalConfig, EvalReport};
use fairsched::learn::{Checkpoint, LossKind, MlpModel};
use serde_json::json;

use super::train::{load_dataset, train_one};
use super::{csv, num};
use crate::config::RunConfig;
use crate::provenance::{hash_input, write_json, write_output, InputFile, Provenance};

/// Label under which Moreau-retrained OWA models are reported.
pub const MOREAU_LABEL: &str = "owa_dq_moreau";

struct Scored {
    label: String,
    seed: u64,
    report: EvalReport,
}

fn checkpoints(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = std::fs::read_dir(dir).with_context(|| format!("checkpoint directory not found: {}", dir.display()))?;
    let mut paths = Vec::new();
    for e in entries {
        let p = e?.path();
        if p.extension().is_some_and(|x| x == "json") {
            paths.push(p);
        }
    }
    paths.sort();
    if paths.is_empty() {
        bail!("no checkpoints in {}", dir.display());
    }
    Ok(paths)
}

fn mean_pop_std(v: &[f64]) -> (f64, f64) {
    let m = v.iter().sum::<f64>() / v.len() as f64;
    let var = v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / v.len() as f64;
    (m, var.sqrt())
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let test_path = cfg.test_dataset();
    let (test, test_input) = load_dataset(&test_path)?;
    let model_paths = checkpoints(&cfg.models_dir())?;
    let reports_dir = cfg.out_dir.join("reports");
    let mut all_inputs = vec![test_input.clone()];
    let mut scored: Vec<Scored> = Vec::new();

    for path in &model_paths {
        let ckpt_input = hash_input(path)?;
        all_inputs.push(ckpt_input.clone());
        let ckpt = Checkpoint::read(path)?;
        let model = ckpt.model().with_context(|| format!("bad checkpoint {}", path.display()))?;
        let stem = path.file_stem().unwrap().to_string_lossy().into_owned();
        let mut variants: Vec<(String, String, MlpModel, Vec<InputFile>)> = vec![(
            ckpt.config.loss.as_str().to_string(),
            stem.clone(),
            model,
            vec![test_input.clone(), ckpt_input.clone()],
        )];
        if let (Some(beta), LossKind::OwaDq) = (cfg.eval.beta, ckpt.config.loss) {
            let ds_path = ckpt
                .metadata
                .get("dataset")
                .and_then(|v| v.as_str())
                .map(PathBuf::from)
                .unwrap_or_else(|| cfg.train_dataset());
            let (ds, ds_input) = load_dataset(&ds_path)?;
            if !all_inputs.contains(&ds_input) {
                all_inputs.push(ds_input.clone());
            }
            let mut tc = ckpt.config.clone();
            tc.beta = Some(beta);
            let inputs = vec![test_input.clone(), ckpt_input, ds_input];
            let prov = Provenance::new("eval", cfg, inputs.clone());
            let (retrained, _) = train_one(&ds, &ds_path, &tc, &prov)?;
            variants.push((MOREAU_LABEL.to_string(), format!("{stem}_moreau"), retrained.model()?, inputs));
        }
        let settings = if cfg.eval.settings.is_empty() {
            vec![ckpt.config.partition]
        } else {
            cfg.eval.settings.clone()
        };
        for (label, stem, model, inputs) in variants {
            for &setting in &settings {
                let ec = EvalConfig {
                    partition: setting,
                    search: cfg.eval.search,
                    inference: cfg.eval.inference,
                };
                let report = evaluate_model(&model, ckpt.config.loss, &test, &ec)
                    .with_context(|| format!("evaluating {} on {}", path.display(), test_path.display()))?;
                println!(
                    "{stem} [{setting}]: regret {:.2}% ± {:.2}  nmpd {:.4}{}",
                    report.regret_pct_mean,
                    report.regret_pct_std,
                    report.nmpd_mean,
                    if report.proxy_reference { "  (proxy reference)" } else { "" }
                );
                let prov = Provenance::new("eval", cfg, inputs.clone());
                write_json(
                    &reports_dir.join(format!("{stem}_{setting}.json")),
                    &json!({
                        "provenance": prov,
                        "label": label,
                        "seed": ckpt.config.seed,
                        "report": report,
                    }),
                )?;
                scored.push(Scored {
                    label: label.clone(),
                    seed: ckpt.config.seed,
                    report,
                });
            }
        }
    }

    let prov = Provenance::new("eval", cfg, all_inputs);
    let seed_rows: Vec<Vec<String>> = scored
        .iter()
        .map(|s| {
            vec![
                s.label.clone(),
                s.report.setting.to_string(),
                s.seed.to_string(),
                num(s.report.regret_pct_mean),
                num(s.report.regret_pct_std),
                num(s.report.nmpd_mean),
                s.report.proxy_reference.to_string(),
            ]
        })
        .collect();
    write_output(
        &reports_dir.join("seeds.csv"),
        csv(
            &prov.csv_preamble(),
            "model,setting,seed,regret_pct_mean,regret_pct_std,nmpd_mean,proxy_reference",
            &seed_rows,
        )
        .as_bytes(),
    )?;

    // One row per (model, setting): mean and population std across seeds.
    let mut keys: Vec<(String, String)> = Vec::new();
    for s in &scored {
        let k = (s.label.clone(), s.report.setting.to_string());
        if !keys.contains(&k) {
            keys.push(k);
        }
    }
    let summary: Vec<Vec<String>> = keys
        .into_iter()
        .map(|(label, setting)| {
            let group: Vec<&Scored> = scored
                .iter()
                .filter(|s| s.label == label && s.report.setting.to_string() == setting)
                .collect();
            let regret: Vec<f64> = group.iter().map(|s| s.report.regret_pct_mean).collect();
            let nmpd: Vec<f64> = group.iter().map(|s| s.report.nmpd_mean).collect();
            let (rm, rs) = mean_pop_std(&regret);
            let (nm, _) = mean_pop_std(&nmpd);
            vec![label, setting, num(rm), num(rs), num(nm)]
        })
        .collect();
    let summary_csv = csv(
        &prov.csv_preamble(),
        "model,setting,regret_pct_mean,regret_pct_std,nmpd_mean",
        &summary,
    );
    write_output(&reports_dir.join("summary.csv"), summary_csv.as_bytes())?;
    println!("summary:");
    for r in &summary {
        println!("  {}", r.join(","));
    }
    Ok(())
}
