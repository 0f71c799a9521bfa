mod common;

use common::reference_lof;
use rand::Rng as _;
use spectrum_anomaly::baselines::lof::{lof_scores, LofModel};
use spectrum_anomaly::rng::seeded;

fn random_points(rng: &mut spectrum_anomaly::rng::Rng, n: usize, dim: usize, grid: bool) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..dim)
                .map(|_| {
                    if grid {
                        rng.random_range(0..5) as f64
                    } else {
                        rng.random_range(-1.0..1.0)
                    }
                })
                .collect()
        })
        .collect()
}

#[test]
fn matches_reference_exactly() {
    let mut rng = seeded(42);
    for instance in 0..50 {
        let k = [3, 10, 20][instance % 3];
        let n = rng.random_range(k + 1..=200);
        let dim = rng.random_range(1..=6);
        // Every third instance uses integer coordinates to force distance ties.
        let grid = instance % 3 == 1;
        let train = random_points(&mut rng, n, dim, grid);
        let mut test = random_points(&mut rng, 15, dim, grid);
        test.push(train[0].clone());
        let got = lof_scores(&train, &test, k).unwrap();
        let want = reference_lof(&train, &test, k);
        assert_eq!(got, want, "instance {instance} (n {n}, k {k}, dim {dim})");
    }
}

#[test]
fn grid_interior_and_outlier() {
    let train: Vec<Vec<f64>> = (0..100).map(|i| vec![(i % 10) as f64, (i / 10) as f64]).collect();
    let model = LofModel::fit(&train, 4).unwrap();
    for p in [[4.5, 4.5], [3.0, 5.0], [5.2, 4.1]] {
        let s = model.score(&p).unwrap();
        assert!((0.9..=1.1).contains(&s), "interior {p:?}: {s}");
    }
    assert!(model.score(&[4.5, 104.5]).unwrap() > 2.0);
}
