use std::collections::HashMap;

use fairsched::datagen::{
    choice_slots, cpt_fidelity, generate_dataset, grid_for, preference_row, read_dataset, write_dataset,
    write_dataset_to, CptSet, GenConfig, PartitionAttribute, FIDELITY_ALPHA,
};
use fairsched::defendant::{
    Children, Childcare, DefendantFeatures, Employment, Gender, Race, Transportation, WorkHour,
};
use fairsched::schedule::SlotGrid;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn with(f: impl FnOnce(&mut DefendantFeatures)) -> DefendantFeatures {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut d = CptSet::default().sample_defendant(&mut rng);
    f(&mut d);
    d
}

fn primary_histogram(f: &DefendantFeatures, draws: usize) -> HashMap<usize, usize> {
    let cpts = CptSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let mut h = HashMap::new();
    for _ in 0..draws {
        *h.entry(cpts.sample_primary_slot(f, &mut rng).unwrap()).or_default() += 1;
    }
    h
}

#[test]
fn every_table_passes_chi_square() {
    let results = cpt_fidelity(&CptSet::default(), 100_000, 42).unwrap();
    assert_eq!(results.len(), 9);
    for r in &results {
        assert!(r.passes(FIDELITY_ALPHA), "{}: p = {} ({} zero-mass hits)", r.table, r.p_value, r.zero_violations);
    }
    // Unemployed defendants never draw a shift.
    let wh = results.iter().find(|r| r.table.starts_with("work_hour")).unwrap();
    assert_eq!(wh.frequency(Employment::Unemployed.code() as usize, WorkHour::NoShift.code() as usize), 1.0);
}

#[test]
fn race_marginal_is_balanced() {
    let cpts = CptSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let white = (0..100_000)
        .filter(|_| cpts.sample_defendant(&mut rng).race == Race::White)
        .count();
    let p = white as f64 / 100_000.0;
    assert!((p - 0.5).abs() <= 0.01, "{p}");
}

#[test]
fn forced_parents_give_deterministic_children() {
    let cpts = CptSet::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..10_000 {
        let wh = cpts.work_hour.sample(Employment::Unemployed.code() as usize, &mut rng);
        assert_eq!(wh, WorkHour::NoShift.code() as usize);
        let ctx = CptSet::childcare_context(Gender::Female, Children::NoChild);
        assert_eq!(cpts.childcare.sample(ctx, &mut rng), Childcare::NoObligation.code() as usize);
    }
}

#[test]
fn public_night_shift_prefers_late_morning() {
    let f = with(|d| {
        d.transportation = Transportation::Public;
        d.employment = Employment::Employed;
        d.work_hour = WorkHour::Night;
    });
    let h = primary_histogram(&f, 30_000);
    let grid = SlotGrid::court_day();
    let mut keys: Vec<_> = h.keys().copied().collect();
    keys.sort();
    let labels: Vec<&str> = keys.iter().map(|&k| grid.labels()[k].as_str()).collect();
    assert_eq!(labels, ["9:30AM", "10:00AM", "10:30AM"]);
    for c in h.values() {
        assert!((*c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015);
    }
}

#[test]
fn private_day_shift_without_childcare_prefers_afternoon() {
    let f = with(|d| {
        d.transportation = Transportation::Private;
        d.employment = Employment::Employed;
        d.work_hour = WorkHour::Day;
        d.childcare = Childcare::NoObligation;
    });
    let h = primary_histogram(&f, 30_000);
    let grid = SlotGrid::court_day();
    let mut keys: Vec<_> = h.keys().copied().collect();
    keys.sort();
    let labels: Vec<&str> = keys.iter().map(|&k| grid.labels()[k].as_str()).collect();
    assert_eq!(labels, ["2:30PM", "3:00PM", "3:30PM"]);
    for c in h.values() {
        assert!((*c as f64 / 30_000.0 - 1.0 / 3.0).abs() < 0.015);
    }
    // Second and third choices stay in the afternoon block.
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let cpts = CptSet::default();
    for _ in 0..1000 {
        let row = preference_row(&f, &grid, &cpts, &[0.6, 0.3, 0.1], &mut rng).unwrap();
        assert!(row[..6].iter().all(|v| *v == 0.0));
    }
}

#[test]
fn generated_rows_have_at_most_three_choices() {
    let ds = generate_dataset(
        &GenConfig {
            num_pools: 100,
            seed: 3,
            ..Default::default()
        },
        &CptSet::default(),
    )
    .unwrap();
    for p in &ds.pools {
        for r in p.prefs.rows() {
            assert!(r.iter().filter(|v| **v > 0.0).count() <= 3);
            assert!((r.iter().sum::<f64>() - 1.0).abs() <= 1e-9);
        }
    }
}

#[test]
fn choices_are_distinct_and_on_grid() {
    for n in [2, 3, 4, 6, 12] {
        let grid = grid_for(n).unwrap();
        for primary in 0..n {
            let c = choice_slots(primary, &grid);
            assert_eq!(c[0], primary);
            assert!(c.iter().all(|s| *s < n));
            let mut d = c.clone();
            d.sort();
            d.dedup();
            assert_eq!(d.len(), c.len());
        }
    }
}

#[test]
fn seeded_generation_is_byte_identical() {
    let cfg = GenConfig {
        num_pools: 25,
        pool_size: 12,
        seed: 7,
        ..Default::default()
    };
    let cpts = CptSet::default();
    let mut a = Vec::new();
    let mut b = Vec::new();
    write_dataset_to(&generate_dataset(&cfg, &cpts).unwrap(), &mut a).unwrap();
    write_dataset_to(&generate_dataset(&cfg, &cpts).unwrap(), &mut b).unwrap();
    assert_eq!(a, b);
    let other = GenConfig { seed: 8, ..cfg };
    let mut c = Vec::new();
    write_dataset_to(&generate_dataset(&other, &cpts).unwrap(), &mut c).unwrap();
    assert_ne!(a, c);
}

#[test]
fn partition_labels_follow_features() {
    let cpts = CptSet::default();
    let ind = generate_dataset(
        &GenConfig {
            num_pools: 20,
            seed: 1,
            ..Default::default()
        },
        &cpts,
    )
    .unwrap();
    for p in &ind.pools {
        let part = p.partition().unwrap();
        assert_eq!(part.num_groups(), 12);
        assert!(part.groups().iter().all(|g| g.len() == 1));
    }
    let emp = ind.regrouped(PartitionAttribute::Employment);
    emp.validate().unwrap();
    for p in &emp.pools {
        for (f, g) in p.features.iter().zip(&p.groups) {
            assert_eq!(*g, f.employment.code() as u32);
        }
    }
}

#[test]
fn dataset_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("fairsched-datagen-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("pools.jsonl");
    let ds = generate_dataset(
        &GenConfig {
            num_pools: 10,
            pool_size: 6,
            seed: 5,
            partition: PartitionAttribute::WorkHours,
            ..Default::default()
        },
        &CptSet::default(),
    )
    .unwrap();
    write_dataset(&ds, &path).unwrap();
    assert_eq!(read_dataset(&path).unwrap(), ds);
    let first = std::fs::read_to_string(&path).unwrap();
    assert!(first.lines().next().unwrap().contains("\"partition_attribute\":\"work_hours\""));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn invalid_configs_are_rejected() {
    let cpts = CptSet::default();
    for cfg in [
        GenConfig {
            num_pools: 0,
            ..Default::default()
        },
        GenConfig {
            pool_size: 5,
            ..Default::default()
        },
        GenConfig {
            choice_weights: [0.6, 0.0, 0.4],
            ..Default::default()
        },
    ] {
        assert!(generate_dataset(&cfg, &cpts).is_err());
    }
}
