use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{GeomError, Point};

const CONVERGENCE: f64 = 1e-9;

/// Index of the nearest center to `p`; ties go to the lowest index.
pub fn nearest_index(centers: &[Point], p: Point) -> usize {
    let mut best = 0;
    let mut best_d = f64::INFINITY;
    for (i, c) in centers.iter().enumerate() {
        let d = c.dist2(p);
        if d < best_d {
            best_d = d;
            best = i;
        }
    }
    best
}

fn distinct_points(points: &[Point]) -> Vec<Point> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y)));
    pts.dedup();
    pts
}

/// Seeded Lloyd k-means returning exactly `k` centroids.
///
/// Initialization draws one distinct input point from the seed, then adds the
/// distinct point farthest from the chosen set until `k` are selected. Lloyd
/// iterations stop when no centroid moves more than 1e-9 or after `max_iter`.
pub fn kmeans_centers(
    points: &[Point],
    k: usize,
    seed: u64,
    max_iter: usize,
) -> Result<Vec<Point>, GeomError> {
    if points.is_empty() {
        return Err(GeomError::EmptyInput);
    }
    if k == 0 || max_iter == 0 {
        return Err(GeomError::InvalidArgument(format!(
            "k ({k}) and max_iter ({max_iter}) must be at least 1"
        )));
    }
    if points.iter().any(|p| !p.is_finite()) {
        return Err(GeomError::InvalidArgument("non-finite point".into()));
    }
    let distinct = distinct_points(points);
    if distinct.len() < k {
        return Err(GeomError::DegenerateInput {
            distinct: distinct.len(),
            k,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut centers = vec![distinct[rng.gen_range(0..distinct.len())]];
    let mut min_d: Vec<f64> = distinct.iter().map(|p| p.dist2(centers[0])).collect();
    while centers.len() < k {
        let (far, _) = min_d
            .iter()
            .enumerate()
            .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, &d)| {
                if d > bd {
                    (i, d)
                } else {
                    (bi, bd)
                }
            });
        let c = distinct[far];
        centers.push(c);
        for (d, p) in min_d.iter_mut().zip(&distinct) {
            *d = d.min(p.dist2(c));
        }
    }

    let mut assignment = vec![0usize; points.len()];
    for _ in 0..max_iter {
        for (a, p) in assignment.iter_mut().zip(points) {
            *a = nearest_index(&centers, *p);
        }
        let mut sums = vec![(0.0, 0.0, 0usize); k];
        for (a, p) in assignment.iter().zip(points) {
            sums[*a].0 += p.x;
            sums[*a].1 += p.y;
            sums[*a].2 += 1;
        }
        let mut next: Vec<Point> = sums
            .iter()
            .zip(&centers)
            .map(|(&(sx, sy, n), &c)| {
                if n == 0 {
                    c
                } else {
                    Point::new(sx / n as f64, sy / n as f64)
                }
            })
            .collect();
        // Empty clusters take the point worst served by its current centroid.
        for ci in 0..k {
            if sums[ci].2 == 0 {
                let worst = points
                    .iter()
                    .enumerate()
                    .map(|(i, p)| (i, p.dist2(next[nearest_index(&next, *p)])))
                    .fold((0, f64::NEG_INFINITY), |(bi, bd), (i, d)| {
                        if d > bd {
                            (i, d)
                        } else {
                            (bi, bd)
                        }
                    })
                    .0;
                next[ci] = points[worst];
            }
        }
        let motion = centers
            .iter()
            .zip(&next)
            .map(|(a, b)| a.dist(*b))
            .fold(0.0, f64::max);
        centers = next;
        if motion < CONVERGENCE {
            break;
        }
    }
    Ok(centers)
}
