use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use west_core::geom::{
    normalize_adjacency_weights, shared_borders_adjacency, voronoi_partition, BBox, Point,
    WeightedAdjacency,
};
use west_core::graph::{
    baseline_adjacency_binary, baseline_adjacency_centers, baseline_adjacency_traffic,
    chrono_split, renormalize, window_dataset, Scaling,
};
use west_core::mobility::TrafficSeries;
use west_core::Tensor;

fn random_adjacency(rng: &mut ChaCha8Rng, n: usize) -> WeightedAdjacency {
    let mut m = Tensor::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = if i == j {
                rng.gen_range(0.1..1.0)
            } else if rng.gen_bool(0.3) {
                0.0
            } else {
                rng.gen_range(0.0..1.0)
            };
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
    normalize_adjacency_weights(&WeightedAdjacency::new(m).unwrap()).unwrap()
}

fn dense(t: &Tensor) -> DMatrix<f64> {
    DMatrix::from_fn(t.rows(), t.cols(), |i, j| t[(i, j)])
}

#[test]
fn renormalized_spectrum_in_unit_interval() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..100 {
        let n = rng.gen_range(1..=12);
        let a = random_adjacency(&mut rng, n);
        let r = renormalize(&a).unwrap();
        assert!(r.matrix().is_symmetric(0.0));
        let eig = dense(r.matrix()).symmetric_eigen().eigenvalues;
        for ev in eig.iter() {
            assert!((-1.0 - 1e-10..=1.0 + 1e-10).contains(ev), "eigenvalue {ev}");
        }
    }
}

#[test]
fn renormalization_matches_dense_formula() {
    let mut rng = ChaCha8Rng::seed_from_u64(22);
    for _ in 0..50 {
        let n = rng.gen_range(2..=12);
        let a = random_adjacency(&mut rng, n);
        let hat = dense(a.matrix()) + DMatrix::identity(n, n);
        let d = DMatrix::from_diagonal(&hat.row_sum().transpose().map(|v| 1.0 / v.sqrt()));
        let want = &d * &hat * &d;
        let got = dense(renormalize(&a).unwrap().matrix());
        assert!((got - want).abs().max() < 1e-12);
    }
}

fn check_baseline(a: &WeightedAdjacency) {
    let n = a.n();
    for i in 0..n {
        assert_eq!(a.get(i, i), 1.0);
        for j in 0..n {
            assert_eq!(a.get(i, j), a.get(j, i));
            assert!((0.0..=1.0).contains(&a.get(i, j)));
        }
    }
}

#[test]
fn all_builders_symmetric_unit_diagonal() {
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let bbox = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
    for _ in 0..20 {
        let n = rng.gen_range(2..=10);
        let centers: Vec<Point> = (0..n)
            .map(|_| Point::new(rng.gen_range(0.1..9.9), rng.gen_range(0.1..9.9)))
            .collect();
        let regions = voronoi_partition(&centers, &bbox).unwrap();
        let tol = bbox.border_tolerance();
        check_baseline(&baseline_adjacency_binary(&regions, tol).unwrap());
        check_baseline(&baseline_adjacency_centers(&centers).unwrap());
        let counts = (0..40)
            .map(|_| (0..n).map(|_| rng.gen_range(0..50)).collect())
            .collect();
        let s = TrafficSeries::new(n, 1.0, 0.0, counts).unwrap();
        check_baseline(&baseline_adjacency_traffic(&s).unwrap());
        let sb = normalize_adjacency_weights(&shared_borders_adjacency(&regions, tol).unwrap())
            .unwrap();
        assert!(sb.matrix().is_symmetric(0.0));
        assert!(sb.matrix().data().iter().all(|v| (0.0..=1.0).contains(v)));
        assert_eq!(sb.matrix().max(), 1.0);
    }
}

proptest! {
    #[test]
    fn split_never_shares_time_indices(
        steps in 12usize..150,
        u_in in 1usize..7,
        u_out in 1usize..7,
        fraction in 0.3..0.95f64,
    ) {
        let counts = (0..steps).map(|m| vec![m as u32, (m * 7 % 5) as u32]).collect();
        let s = TrafficSeries::new(2, 1.0, 0.0, counts).unwrap();
        let Ok(ds) = window_dataset(&s, u_in, u_out, Scaling::FitOnTrain { train_fraction: fraction }) else {
            return Ok(());
        };
        let Ok(split) = chrono_split(&ds, fraction) else {
            return Ok(());
        };
        let train_targets: Vec<usize> = split.train.windows.iter().flat_map(|w| w.y_steps()).collect();
        let test_features: Vec<usize> = split.test.windows.iter().flat_map(|w| w.x_steps()).collect();
        let last_train = *train_targets.iter().max().unwrap();
        let first_test = *test_features.iter().min().unwrap();
        prop_assert!(last_train < first_test);
        prop_assert_eq!(split.train.len() + split.dropped() + split.test.len(), ds.len());
        prop_assert_eq!(split.test.windows[0].start, split.plan.boundary);
        // the scaler only ever saw training steps
        let seen_max = (last_train as f64).max(4.0);
        prop_assert!(ds.scaler.max <= seen_max);
    }
}
