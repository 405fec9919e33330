use anyhow::Result;
use fairsched::eval::{bench_enumeration, bench_matching, log_log_slope, BenchTable};

use super::{csv, num};
use crate::config::RunConfig;
use crate::provenance::{write_output, Provenance};

fn print_summary(name: &str, t: &BenchTable) {
    let s = t.summary();
    for r in &s {
        println!(
            "  {name:<11} n={:<4} mean {:>12.3} us  p50 {:>12.3}  p95 {:>12.3}",
            r.n, r.mean_micros, r.p50_micros, r.p95_micros
        );
    }
    if s.len() >= 2 {
        println!("  {name:<11} log-log slope {:.3}", log_log_slope(&s));
    }
}

pub fn run(cfg: &RunConfig) -> Result<()> {
    let b = &cfg.bench;
    if b.sizes.is_empty() || b.repeats == 0 {
        return Err(crate::exit::UsageError::wrap(anyhow::anyhow!(
            "bench needs at least one size and one repeat"
        )));
    }
    let matching = bench_matching(&b.sizes, b.repeats, b.seed)?;
    let enumeration = bench_enumeration(&b.sizes, b.repeats, b.seed)?;
    let rows: Vec<Vec<String>> = matching
        .rows
        .iter()
        .map(|m| {
            let e = enumeration
                .rows
                .iter()
                .find(|e| e.n == m.n && e.repeat == m.repeat)
                .map(|e| num(e.micros))
                .unwrap_or_default();
            vec![m.n.to_string(), m.repeat.to_string(), num(m.micros), e]
        })
        .collect();
    let prov = Provenance::new("bench", cfg, Vec::new());
    write_output(
        &cfg.out_dir.join("bench").join("bench.csv"),
        csv(&prov.csv_preamble(), "n,repeat,matching_micros,enumeration_micros", &rows).as_bytes(),
    )?;
    println!("bench ({} repeats):", b.repeats);
    print_summary("matching", &matching);
    print_summary("enumeration", &enumeration);
    Ok(())
}
