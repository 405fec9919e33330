use fairsched::matching::{matching_backward, solve_assignment, BlackboxConfig};
use fairsched::oracle::{exact_owa_schedule, local_search_owa, owa_objective, LocalSearchConfig};
use fairsched::owa::{gini_weights, OwaWeights};
use fairsched::schedule::{total_utility, utility_vector, Assignment, GroupPartition, Matrix, PreferenceMatrix};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn brute_force_best(m: &Matrix) -> f64 {
    let n = m.n();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut best = f64::NEG_INFINITY;
    heap_permute(&mut perm, n, &mut |p| {
        let v: f64 = p.iter().enumerate().map(|(i, &j)| m[(i, j)]).sum();
        best = best.max(v);
    });
    best
}

fn heap_permute(p: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k <= 1 {
        f(p);
        return;
    }
    for i in 0..k {
        heap_permute(p, k - 1, f);
        let j = if k.is_multiple_of(2) { i } else { 0 };
        p.swap(j, k - 1);
    }
}

fn random_prefs(n: usize, rng: &mut ChaCha8Rng) -> PreferenceMatrix {
    let rows = (0..n)
        .map(|_| {
            let r: Vec<f64> = (0..n).map(|_| rng.gen::<f64>()).collect();
            let s: f64 = r.iter().sum();
            r.into_iter().map(|v| v / s).collect()
        })
        .collect();
    PreferenceMatrix::from_rows(rows).unwrap()
}

fn random_partition(n: usize, rng: &mut ChaCha8Rng) -> GroupPartition {
    let k = rng.gen_range(1..=n);
    let mut labels: Vec<u32> = (0..n).map(|i| (i % k) as u32).collect();
    for i in (1..n).rev() {
        labels.swap(i, rng.gen_range(0..=i));
    }
    GroupPartition::from_labels(&labels).unwrap()
}

fn matrix(n: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(-10.0f64..10.0, n * n)
        .prop_map(move |v| Matrix::from_rows(v.chunks(n).map(|c| c.to_vec()).collect()).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn hungarian_matches_brute_force(m in (1usize..=6).prop_flat_map(matrix)) {
        let a = solve_assignment(&m).unwrap();
        let got = total_utility(&a, &m).unwrap();
        prop_assert!((got - brute_force_best(&m)).abs() <= 1e-9);
    }

    #[test]
    fn optimum_invariant_to_scale_and_row_shift(
        m in matrix(5),
        c in 0.1f64..10.0,
        shifts in prop::collection::vec(-3.0f64..3.0, 5),
    ) {
        let base = total_utility(&solve_assignment(&m).unwrap(), &m).unwrap();
        let t = Matrix::from_fn(5, |i, j| c * m[(i, j)] + shifts[i]);
        let a = solve_assignment(&t).unwrap();
        // Evaluate the transformed-problem solution under the original profits.
        prop_assert!((total_utility(&a, &m).unwrap() - base).abs() <= 1e-9);
    }

    #[test]
    fn backward_is_scaled_permutation_difference(
        m in matrix(4),
        up in matrix(4),
        lambda in 0.1f64..50.0,
    ) {
        let a = solve_assignment(&m).unwrap();
        let g = matching_backward(&m, &a, &up, BlackboxConfig::new(lambda).unwrap()).unwrap();
        for r in g.rows() {
            prop_assert!(r.iter().sum::<f64>().abs() <= 1e-12);
            prop_assert!(r.iter().all(|v| *v == 0.0 || (v.abs() - 1.0 / lambda).abs() <= 1e-12));
        }
    }
}

#[test]
fn backward_step_does_not_increase_interpolated_loss() {
    // Linear loss L(Π) = ⟨C, Π⟩: a small step of the profits against the
    // blackbox gradient must not worsen the solver's loss.
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut better_or_equal = 0;
    for _ in 0..50 {
        let p = Matrix::from_fn(3, |_, _| rng.gen_range(0.0..1.0));
        let c = Matrix::from_fn(3, |_, _| rng.gen_range(-1.0..1.0));
        let loss = |m: &Matrix| {
            let a = solve_assignment(m).unwrap();
            a.to_matrix().as_slice().iter().zip(c.as_slice()).map(|(x, y)| x * y).sum::<f64>()
        };
        let a = solve_assignment(&p).unwrap();
        let cfg = BlackboxConfig::new(1.0).unwrap();
        let g = matching_backward(&p, &a, &c, cfg).unwrap();
        let stepped = p.axpy(-1.0, &g).unwrap();
        if loss(&stepped) <= loss(&p) + 1e-12 {
            better_or_equal += 1;
        }
    }
    assert!(better_or_equal >= 45, "{better_or_equal}/50");
}

#[test]
fn gradient_points_toward_rewarded_schedule() {
    // 2×2: a loss that rewards the anti-diagonal should produce a gradient
    // whose descent direction raises the anti-diagonal profits.
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let mut agree = 0;
    for _ in 0..100 {
        let d = rng.gen_range(0.05..1.0);
        let p = Matrix::from_rows(vec![vec![1.0, 1.0 - d], vec![1.0 - d, 1.0]]).unwrap();
        let a = solve_assignment(&p).unwrap();
        let up = Matrix::from_rows(vec![vec![0.0, -1.0], vec![-1.0, 0.0]]).unwrap();
        let g = matching_backward(&p, &a, &up, BlackboxConfig::default()).unwrap();
        if g[(0, 1)] < 0.0 && g[(1, 0)] < 0.0 && g[(0, 0)] > 0.0 {
            agree += 1;
        }
    }
    assert!(agree >= 90, "{agree}/100");
}

#[test]
fn hungarian_handles_ties_deterministically() {
    let m = Matrix::from_fn(6, |_, _| 1.0);
    let a = solve_assignment(&m).unwrap();
    assert_eq!(a, solve_assignment(&m).unwrap());
    assert_eq!(total_utility(&a, &m).unwrap(), 6.0);
}

#[test]
fn local_search_agrees_with_exact_on_small_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let cfg = LocalSearchConfig {
        restarts: 20,
        max_iters: 5000,
        seed: 7,
    };
    let mut hits = 0;
    for _ in 0..100 {
        let n = rng.gen_range(2..=7);
        let y = random_prefs(n, &mut rng);
        let part = random_partition(n, &mut rng);
        let w = gini_weights(part.num_groups()).unwrap();
        let (_, exact) = exact_owa_schedule(&y, &w, &part).unwrap();
        let (_, ls) = local_search_owa(&y, &w, &part, &cfg).unwrap();
        assert!(ls <= exact + 1e-12);
        if (ls - exact).abs() <= 1e-9 {
            hits += 1;
        }
    }
    assert!(hits >= 95, "{hits}/100");
}

#[test]
fn uniform_weight_oracle_equals_matching_mean() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..50 {
        let n = rng.gen_range(2..=7);
        let y = random_prefs(n, &mut rng);
        let part = GroupPartition::singletons(n);
        let (_, v) = exact_owa_schedule(&y, &OwaWeights::uniform(n).unwrap(), &part).unwrap();
        let tu = total_utility(&solve_assignment(&y).unwrap(), &y).unwrap();
        assert!((v - tu / n as f64).abs() <= 1e-12);
    }
}

#[test]
fn exact_optimum_is_pareto_efficient() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..20 {
        let n = rng.gen_range(2..=6);
        let y = random_prefs(n, &mut rng);
        let part = GroupPartition::singletons(n);
        let w = gini_weights(n).unwrap();
        let (best, _) = exact_owa_schedule(&y, &w, &part).unwrap();
        let ub = utility_vector(&best, &y).unwrap();
        let mut perm: Vec<usize> = (0..n).collect();
        heap_permute(&mut perm, n, &mut |p| {
            let u = utility_vector(&Assignment::from_perm(p.to_vec()).unwrap(), &y).unwrap();
            let dominates = u.iter().zip(ub.iter()).all(|(a, b)| a >= b)
                && u.iter().zip(ub.iter()).any(|(a, b)| a > b);
            assert!(!dominates, "schedule {p:?} dominates the OWA optimum");
        });
    }
}

#[test]
fn exact_value_matches_objective_and_rejects_large_pools() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let y = random_prefs(5, &mut rng);
    let part = random_partition(5, &mut rng);
    let w = gini_weights(part.num_groups()).unwrap();
    let (a, v) = exact_owa_schedule(&y, &w, &part).unwrap();
    assert!((owa_objective(&a, &y, &w, &part).unwrap() - v).abs() <= 1e-12);

    let big = random_prefs(10, &mut rng);
    let part = GroupPartition::singletons(10);
    assert!(exact_owa_schedule(&big, &gini_weights(10).unwrap(), &part).is_err());
}

#[test]
fn local_search_is_seed_deterministic() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let y = random_prefs(12, &mut rng);
    let part = GroupPartition::singletons(12);
    let w = gini_weights(12).unwrap();
    let cfg = LocalSearchConfig::REFERENCE;
    assert_eq!(
        local_search_owa(&y, &w, &part, &cfg).unwrap(),
        local_search_owa(&y, &w, &part, &cfg).unwrap()
    );
}
