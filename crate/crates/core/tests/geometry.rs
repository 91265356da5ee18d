use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use west_core::geom::{
    kmeans_centers, normalize_adjacency_weights, region_perimeter, shared_border_length,
    shared_borders_adjacency, voronoi_partition, BBox, Point, Region, Segment,
};

const TOL: f64 = 1e-9;

fn pt() -> impl Strategy<Value = Point> {
    (-100.0..100.0f64, -100.0..100.0f64).prop_map(|(x, y)| Point::new(x, y))
}

fn seg() -> impl Strategy<Value = Segment> {
    (pt(), pt())
        .prop_filter("non-degenerate", |(a, b)| a.dist(*b) > 1e-3)
        .prop_map(|(a, b)| Segment::new(a, b))
}

/// Overlap of `[a1, b1]` and `[a2, b2]` measured along the shared line.
fn interval_overlap(a1: f64, b1: f64, a2: f64, b2: f64) -> f64 {
    let (lo1, hi1) = (a1.min(b1), a1.max(b1));
    let (lo2, hi2) = (a2.min(b2), a2.max(b2));
    (hi1.min(hi2) - lo1.max(lo2)).max(0.0)
}

#[test]
fn collinear_pairs_match_interval_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..10_000 {
        let o = Point::new(rng.gen_range(-50.0..50.0), rng.gen_range(-50.0..50.0));
        let th: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
        let (dx, dy) = (th.cos(), th.sin());
        let at = |s: f64| Point::new(o.x + s * dx, o.y + s * dy);
        let p: Vec<f64> = (0..4).map(|_| rng.gen_range(-20.0..20.0)).collect();
        let s1 = Segment::new(at(p[0]), at(p[1]));
        let s2 = Segment::new(at(p[2]), at(p[3]));
        let want = interval_overlap(p[0], p[1], p[2], p[3]);
        let got = shared_border_length(&s1, &s2, TOL);
        assert!((got - want).abs() < 1e-9, "{s1:?} {s2:?}: {got} vs {want}");
    }
}

#[test]
fn crossing_and_skew_pairs_are_zero() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let mut checked = 0;
    while checked < 10_000 {
        let mut p = || Point::new(rng.gen_range(-10.0..10.0), rng.gen_range(-10.0..10.0));
        let s1 = Segment::new(p(), p());
        let s2 = Segment::new(p(), p());
        let d1 = (s1.p2.x - s1.p1.x, s1.p2.y - s1.p1.y);
        let d2 = (s2.p2.x - s2.p1.x, s2.p2.y - s2.p1.y);
        let sin = (d1.0 * d2.1 - d1.1 * d2.0) / (s1.length() * s2.length());
        if sin.abs() < 1e-3 {
            continue;
        }
        assert_eq!(shared_border_length(&s1, &s2, TOL), 0.0);
        checked += 1;
    }
}

#[test]
fn parallel_offset_pairs_are_zero() {
    let s1 = Segment::new(Point::new(0.0, 0.0), Point::new(4.0, 0.0));
    let s2 = Segment::new(Point::new(1.0, 1e-3), Point::new(3.0, 1e-3));
    assert_eq!(shared_border_length(&s1, &s2, TOL), 0.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn length_is_symmetric(a in seg(), b in seg()) {
        prop_assert_eq!(shared_border_length(&a, &b, TOL), shared_border_length(&b, &a, TOL));
    }
}

proptest! {
    #[test]
    fn self_overlap_is_length(s in seg()) {
        prop_assert!((shared_border_length(&s, &s, TOL) - s.length()).abs() < 1e-9);
    }

    #[test]
    fn endpoint_swap_and_translation(
        o in pt(), th in 0.0..std::f64::consts::TAU,
        p in prop::array::uniform4(-20.0..20.0f64),
        shift in pt(),
    ) {
        let at = |s: f64| Point::new(o.x + s * th.cos(), o.y + s * th.sin());
        let s1 = Segment::new(at(p[0]), at(p[1]));
        let s2 = Segment::new(at(p[2]), at(p[3]));
        let base = shared_border_length(&s1, &s2, TOL);
        prop_assert!((shared_border_length(&s1.reversed(), &s2, TOL) - base).abs() < 1e-9);
        prop_assert!((shared_border_length(&s1, &s2.reversed(), TOL) - base).abs() < 1e-9);
        let mv = |s: &Segment| Segment::new(
            Point::new(s.p1.x + shift.x, s.p1.y + shift.y),
            Point::new(s.p2.x + shift.x, s.p2.y + shift.y),
        );
        prop_assert!((shared_border_length(&mv(&s1), &mv(&s2), TOL) - base).abs() < 1e-9);
    }
}

fn unit_grid() -> Vec<Region> {
    let sq = |i, x: f64, y: f64| {
        Region::new(
            i,
            Point::new(x + 0.5, y + 0.5),
            vec![
                Point::new(x, y),
                Point::new(x + 1.0, y),
                Point::new(x + 1.0, y + 1.0),
                Point::new(x, y + 1.0),
            ],
        )
        .unwrap()
    };
    vec![sq(0, 0.0, 0.0), sq(1, 1.0, 0.0), sq(2, 0.0, 1.0), sq(3, 1.0, 1.0)]
}

#[test]
fn unit_grid_fixture_is_exact() {
    let raw = shared_borders_adjacency(&unit_grid(), TOL).unwrap();
    let norm = normalize_adjacency_weights(&raw).unwrap();
    let diagonal_pairs = [(0, 3), (1, 2)];
    for i in 0..4 {
        for j in 0..4 {
            let (want_raw, want_norm) = if i == j {
                (4.0, 1.0)
            } else if diagonal_pairs.contains(&(i.min(j), i.max(j))) {
                (0.0, 0.0)
            } else {
                (1.0, 0.25)
            };
            assert_eq!(raw.get(i, j), want_raw, "raw ({i},{j})");
            assert_eq!(norm.get(i, j), want_norm, "normalized ({i},{j})");
        }
    }
}

fn random_partition(seed: u64, n: usize) -> (BBox, Vec<Point>, Vec<Region>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let bbox = BBox::new(0.0, 0.0, 100.0, 60.0).unwrap();
    let centers: Vec<Point> = (0..n)
        .map(|_| Point::new(rng.gen_range(1.0..99.0), rng.gen_range(1.0..59.0)))
        .collect();
    let regions = voronoi_partition(&centers, &bbox).unwrap();
    (bbox, centers, regions)
}

#[test]
fn voronoi_matches_nearest_center() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let (_, centers, regions) = random_partition(4, 9);
    let mut disagreements = 0;
    let mut checked = 0;
    while checked < 10_000 {
        let p = Point::new(rng.gen_range(0.0..100.0), rng.gen_range(0.0..60.0));
        let mut d: Vec<(f64, usize)> = centers.iter().map(|c| c.dist(p)).zip(0..).collect();
        d.sort_by(|a, b| a.0.total_cmp(&b.0));
        if d[1].0 - d[0].0 < 1e-9 {
            continue;
        }
        checked += 1;
        let inside: Vec<usize> = regions.iter().filter(|r| r.contains(p)).map(|r| r.index).collect();
        if inside != vec![d[0].1] {
            disagreements += 1;
        }
    }
    assert_eq!(disagreements, 0);
}

#[test]
fn voronoi_areas_tile_box() {
    for seed in 0..20 {
        let (bbox, _, regions) = random_partition(seed, 2 + seed as usize % 10);
        let area: f64 = regions.iter().map(Region::area).sum();
        assert!((area - bbox.width() * bbox.height()).abs() < 1e-6);
    }
}

/// Regions `i` and `j` are Voronoi neighbours when some point of their common
/// border is strictly closer to both centers than to any third one.
fn voronoi_neighbors(centers: &[Point], i: usize, j: usize, a: &Region) -> bool {
    a.borders().iter().any(|b| {
        let m = b.p1.lerp(b.p2, 0.5);
        let di = m.dist(centers[i]);
        let dj = m.dist(centers[j]);
        (di - dj).abs() < 1e-6
            && centers
                .iter()
                .enumerate()
                .all(|(k, c)| k == i || k == j || c.dist(m) > di + 1e-9)
    })
}

#[test]
fn voronoi_adjacency_invariants() {
    for seed in 0..30 {
        let n = 2 + (seed as usize * 7) % 11;
        let (bbox, centers, regions) = random_partition(seed, n);
        let tol = bbox.border_tolerance();
        let a = shared_borders_adjacency(&regions, tol).unwrap();
        for i in 0..n {
            let per = region_perimeter(&regions[i]);
            assert_eq!(a.get(i, i), per);
            let mut off = 0.0;
            for j in 0..n {
                assert_eq!(a.get(i, j), a.get(j, i));
                assert!(a.get(i, j) >= 0.0);
                if i != j {
                    off += a.get(i, j);
                    if a.get(i, j) > 0.0 {
                        assert!(voronoi_neighbors(&centers, i, j, &regions[i]), "seed {seed} ({i},{j})");
                    }
                }
            }
            let on_box: f64 = regions[i]
                .borders()
                .iter()
                .filter(|s| {
                    let same = |u: f64, v: f64| (u - v).abs() < 1e-9;
                    (same(s.p1.x, s.p2.x) && (same(s.p1.x, bbox.xmin) || same(s.p1.x, bbox.xmax)))
                        || (same(s.p1.y, s.p2.y)
                            && (same(s.p1.y, bbox.ymin) || same(s.p1.y, bbox.ymax)))
                })
                .map(Segment::length)
                .sum();
            assert!(off <= per + 1e-9);
            if on_box > 1e-9 {
                assert!(off < per);
            }
        }
    }
}

#[test]
fn normalization_keeps_argmax_set() {
    for seed in 0..30 {
        let (bbox, _, regions) = random_partition(100 + seed, 2 + seed as usize % 9);
        let a = shared_borders_adjacency(&regions, bbox.border_tolerance()).unwrap();
        let b = normalize_adjacency_weights(&a).unwrap();
        let argmax = |m: &west_core::Tensor| {
            let top = m.max();
            (0..m.len()).filter(|&k| m.data()[k] == top).collect::<Vec<_>>()
        };
        assert_eq!(argmax(a.matrix()), argmax(b.matrix()));
        assert_eq!(b.matrix().max(), 1.0);
    }
}

#[test]
fn kmeans_recovers_gaussian_blobs() {
    use rand_distr::{Distribution, Normal};
    let truth = [Point::new(10.0, 10.0), Point::new(80.0, 20.0), Point::new(40.0, 70.0)];
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let noise = Normal::new(0.0, 2.0).unwrap();
    let points: Vec<Point> = truth
        .iter()
        .flat_map(|c| {
            (0..300)
                .map(|_| Point::new(c.x + noise.sample(&mut rng), c.y + noise.sample(&mut rng)))
                .collect::<Vec<_>>()
        })
        .collect();
    let found = kmeans_centers(&points, 3, 1, 100).unwrap();
    assert_eq!(found, kmeans_centers(&points, 3, 1, 100).unwrap());
    for c in truth {
        let best = found.iter().map(|f| f.dist(c)).fold(f64::INFINITY, f64::min);
        assert!(best < 0.5, "{c:?} -> {found:?}");
    }
}
