use fair_coreset::fairflow::{objective_value, ProfileConstraint};
use fair_coreset::geometry::{validate_dataset, CenterSet, CoresetParams, Dataset, Objective, Point};
use fair_coreset::harness::synthetic_mixture;
use fair_coreset::pipeline::{build_fair_coreset, uniform_coreset, validate_artifact};
use proptest::prelude::*;

fn dataset(points: Vec<(f64, f64, usize)>) -> Dataset {
    let (p, m): (Vec<Point>, Vec<Vec<usize>>) = points
        .into_iter()
        .map(|(x, y, g)| (Point::new(vec![x, y]), if g == 2 { vec![0, 1] } else { vec![g] }))
        .unzip();
    Dataset::from_memberships(p, m, 2).unwrap()
}

fn arb_dataset(max: usize) -> impl Strategy<Value = Dataset> {
    prop::collection::vec((-20.0f64..20.0, -20.0f64..20.0, 0usize..3), 1..max).prop_map(dataset)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn coreset_preserves_class_masses(d in arb_dataset(120), eps in 0.1f64..0.9, k in 1usize..4, seed in any::<u64>(), median in any::<bool>()) {
        let z = if median { Objective::KMedian } else { Objective::KMeans };
        let a = build_fair_coreset(&d, &CoresetParams::new(eps, k, z, seed)).unwrap();
        prop_assert!(validate_artifact(&a, &d).is_empty(), "{:?}", validate_artifact(&a, &d));
        prop_assert!(a.len() <= d.len());
        for (w, n) in a.points.profile_weights().iter().zip(d.class_sizes()) {
            prop_assert!((w - n as f64).abs() <= 1e-9 * n as f64);
        }
    }

    #[test]
    fn uniform_preserves_class_masses(d in arb_dataset(80), extra in 0usize..40, seed in any::<u64>()) {
        let total = d.num_profiles() + extra.min(d.len() - d.num_profiles());
        let a = uniform_coreset(&d, total, seed).unwrap();
        prop_assert_eq!(a.len(), total);
        prop_assert!(validate_artifact(&a, &d).is_empty());
    }
}

/// Every integral constraint for two clusters and the given class sizes.
fn constraints(sizes: &[usize]) -> Vec<ProfileConstraint> {
    let mut out = vec![vec![Vec::new(), Vec::new()]];
    for &n in sizes {
        out = out
            .into_iter()
            .flat_map(|q: Vec<Vec<f64>>| {
                (0..=n).map(move |a| {
                    let mut q = q.clone();
                    q[0].push(a as f64);
                    q[1].push((n - a) as f64);
                    q
                })
            })
            .collect();
    }
    out.into_iter().map(|q| ProfileConstraint::new(q).unwrap()).collect()
}

#[test]
fn six_point_sweep_within_epsilon() {
    // Two profiles of three points each; centers from a grid over the box.
    let d = dataset(vec![
        (0.0, 0.0, 0),
        (1.0, 0.5, 0),
        (6.0, 5.0, 0),
        (0.5, 1.0, 1),
        (5.0, 6.0, 1),
        (6.5, 5.5, 1),
    ]);
    assert!(validate_dataset(&d).is_empty());
    let axis: Vec<f64> = (0..6).map(|i| -1.0 + 1.7 * i as f64).collect();
    let grid: Vec<Point> = axis.iter().flat_map(|&x| axis.iter().map(move |&y| Point::new(vec![x, y]))).collect();
    for z in [Objective::KMedian, Objective::KMeans] {
        let s = build_fair_coreset(&d, &CoresetParams::new(0.3, 2, z, 11)).unwrap().points;
        let x = d.to_weighted();
        let mut worst: f64 = 0.0;
        for f in constraints(&d.class_sizes()) {
            for i in 0..grid.len() {
                for j in i..grid.len() {
                    let c = CenterSet::new(vec![grid[i].clone(), grid[j].clone()]).unwrap();
                    let kx = objective_value(&x, &f, &c, z).unwrap();
                    let ks = objective_value(&s, &f, &c, z).unwrap();
                    worst = worst.max((ks / kx - 1.0).abs());
                }
            }
        }
        assert!(worst <= 0.3, "z={}: {worst}", z.z());
    }
}

#[test]
fn coreset_error_shrinks_with_epsilon_on_mixture() {
    use fair_coreset::harness::empirical_error;
    let d = synthetic_mixture(800, 3, 21);
    for z in [Objective::KMedian, Objective::KMeans] {
        for eps in [0.2, 0.5] {
            let s = build_fair_coreset(&d, &CoresetParams::new(eps, 3, z, 2)).unwrap().points;
            let e = empirical_error(&d, &s, 3, z, 40, 8).unwrap();
            assert!(e.max_err <= eps, "z={} eps={eps}: {}", z.z(), e.max_err);
        }
    }
}
