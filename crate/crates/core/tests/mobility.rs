use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use west_core::geom::{voronoi_partition, BBox, Point, Region};
use west_core::mobility::{
    adjustable_hops, aggregate_traffic, classify_populations, group_tracks, position_at,
    synth_generate, GeneratorConfig, HopsOptions, HopsWindow, PopulationConfig, TrajectoryPoint,
};

fn two_speed(dwell: f64) -> GeneratorConfig {
    GeneratorConfig {
        bbox: [0.0, 0.0, 1000.0, 1000.0],
        populations: vec![
            PopulationConfig { count: 100, speed: 1.0 },
            PopulationConfig { count: 100, speed: 3.0 },
        ],
        horizon_s: 20_000.0,
        sample_period_s: 20.0,
        region_attraction: vec![1.0, 2.0, 1.0, 3.0, 1.0, 2.0],
        seed: 0,
        attractors: None,
        day_period_s: 10_000.0,
        seasonal_amplitude: 0.5,
        dwell_mean_s: dwell,
    }
}

fn grid_regions() -> Vec<Region> {
    let centers: Vec<Point> = (0..6)
        .map(|k| Point::new(170.0 + 330.0 * (k % 3) as f64, 250.0 + 500.0 * (k / 3) as f64))
        .collect();
    voronoi_partition(&centers, &BBox::new(0.0, 0.0, 1000.0, 1000.0).unwrap()).unwrap()
}

#[test]
fn synthetic_speeds_classify_back() {
    let out = synth_generate(&two_speed(0.0), 4).unwrap();
    let c = classify_populations(&out.points, &[2.0]).unwrap();
    let agree = out
        .labels
        .iter()
        .filter(|(id, label)| c.population.get(id) == Some(label))
        .count();
    let accuracy = agree as f64 / out.labels.len() as f64;
    assert!(accuracy >= 0.99, "accuracy {accuracy}");
}

#[test]
fn generator_is_deterministic_and_labelled() {
    let cfg = two_speed(200.0);
    let a = synth_generate(&cfg, 9).unwrap();
    let b = synth_generate(&cfg, 9).unwrap();
    assert_eq!(a, b);
    assert_eq!(a.labels.len(), 200);
    assert_eq!(a.labels.values().filter(|&&l| l == 1).count(), 100);
    assert_ne!(a.points, synth_generate(&cfg, 10).unwrap().points);
}

#[test]
fn counts_bounded_by_active_entities() {
    let out = synth_generate(&two_speed(150.0), 2).unwrap();
    let regions = grid_regions();
    let w = 250.0;
    let s = aggregate_traffic(&out.points, &regions, w, 0.0, 20_000.0).unwrap();
    let tracks = group_tracks(&out.points).unwrap();
    for m in 0..s.steps() {
        let instant = (m + 1) as f64 * w;
        let active = tracks.values().filter(|t| position_at(t, instant).is_some()).count();
        assert_eq!(s.step_total(m) as usize, active, "step {m}");
    }
}

#[test]
fn counts_ignore_outside_entities() {
    let regions = grid_regions();
    let pts = vec![
        TrajectoryPoint::new(1, 0.0, 10.0, 10.0),
        TrajectoryPoint::new(1, 100.0, 20.0, 10.0),
        TrajectoryPoint::new(2, 0.0, -50.0, 10.0),
        TrajectoryPoint::new(2, 100.0, -60.0, 10.0),
    ];
    let s = aggregate_traffic(&pts, &regions, 50.0, 0.0, 100.0).unwrap();
    for m in 0..s.steps() {
        assert_eq!(s.step_total(m), 1);
    }
}

#[test]
fn counts_invariant_to_record_order() {
    let out = synth_generate(&two_speed(100.0), 3).unwrap();
    let regions = grid_regions();
    let base = aggregate_traffic(&out.points, &regions, 300.0, 0.0, 20_000.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..3 {
        let mut shuffled = out.points.clone();
        shuffled.shuffle(&mut rng);
        assert_eq!(
            aggregate_traffic(&shuffled, &regions, 300.0, 0.0, 20_000.0).unwrap(),
            base
        );
    }
}

fn centers() -> impl Strategy<Value = Vec<Point>> {
    prop::collection::vec((0.0..100.0f64, 0.0..100.0f64), 2..10).prop_filter_map(
        "distinct centers",
        |v| {
            let pts: Vec<Point> = v.into_iter().map(|(x, y)| Point::new(x, y)).collect();
            let ok = pts
                .iter()
                .enumerate()
                .all(|(i, a)| pts[i + 1..].iter().all(|b| a.dist(*b) > 1e-3));
            ok.then_some(pts)
        },
    )
}

proptest! {
    #[test]
    fn speed_scaling_keeps_k(
        c in centers(),
        speeds in prop::collection::vec(0.1..20.0f64, 1..6),
        factor in 0.01..100.0f64,
    ) {
        let opts = HopsOptions::default();
        let base = adjustable_hops(&speeds, &c, 1, opts).unwrap();
        let scaled: Vec<f64> = speeds.iter().map(|s| s * factor).collect();
        let r = adjustable_hops(&scaled, &c, 1, opts).unwrap();
        let min = speeds.iter().copied().fold(f64::INFINITY, f64::min);
        for (i, s) in speeds.iter().enumerate() {
            let ratio = s / min;
            if (ratio.fract() - 0.5).abs() > 1e-9 {
                prop_assert_eq!(r.k[i], base.k[i]);
                prop_assert_eq!(r.k[i], (ratio.round() as usize).max(1));
            }
        }
    }

    #[test]
    fn slowest_population_gets_one_layer(
        c in centers(),
        speeds in prop::collection::vec(0.1..20.0f64, 1..6),
        u in 1usize..12,
    ) {
        let r = adjustable_hops(&speeds, &c, 1, HopsOptions::default()).unwrap();
        let slowest = speeds.iter().enumerate().min_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        prop_assert_eq!(r.k[slowest], 1);
        let base = HopsOptions { hops_window: HopsWindow::Base, ..HopsOptions::default() };
        let r = adjustable_hops(&speeds, &c, u, base).unwrap();
        prop_assert_eq!(r.k[slowest], 1);
        prop_assert!(r.k.iter().all(|&k| k >= 1));
    }
}

#[test]
fn hops_window_modes() {
    let c = [Point::new(0.0, 0.0), Point::new(3.0, 4.0)];
    let scaled = adjustable_hops(&[1.0, 2.0], &c, 6, HopsOptions::default()).unwrap();
    assert_eq!((scaled.d, scaled.t_window, scaled.k), (2.5, 7.5, vec![3, 6]));
    let base = HopsOptions { hops_window: HopsWindow::Base, ..HopsOptions::default() };
    let r = adjustable_hops(&[1.0, 2.0], &c, 6, base).unwrap();
    assert_eq!((r.t_window, r.k), (2.5, vec![1, 2]));
}

#[test]
fn stationary_entities_spread_over_regions() {
    let regions = grid_regions();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut pts = Vec::new();
    let mut want = vec![0u32; regions.len()];
    for id in 0..300u64 {
        let p = Point::new(rng.gen_range(1.0..999.0), rng.gen_range(1.0..999.0));
        want[west_core::geom::locate(&regions, p).unwrap()] += 1;
        pts.push(TrajectoryPoint { entity_id: id, t: 0.0, pos: p });
        pts.push(TrajectoryPoint { entity_id: id, t: 1000.0, pos: p });
    }
    let s = aggregate_traffic(&pts, &regions, 100.0, 0.0, 1000.0).unwrap();
    assert_eq!(s.steps(), 10);
    for m in 0..10 {
        assert_eq!(s.counts()[m], want);
    }
}
