use super::{BBox, GeomError, Point, Region};

/// Keeps the part of a convex polygon where `(p - mid) . normal <= 0`.
fn clip_half_plane(poly: &[Point], mid: Point, normal: Point) -> Vec<Point> {
    let side = |p: Point| p.sub(mid).dot(normal);
    let n = poly.len();
    let mut out = Vec::with_capacity(n + 1);
    for i in 0..n {
        let a = poly[i];
        let b = poly[(i + 1) % n];
        let (fa, fb) = (side(a), side(b));
        if fa <= 0.0 {
            out.push(a);
        }
        if (fa < 0.0 && fb > 0.0) || (fa > 0.0 && fb < 0.0) {
            out.push(a.lerp(b, fa / (fa - fb)));
        }
    }
    out
}

fn dedup_ring(poly: Vec<Point>, eps: f64) -> Vec<Point> {
    let mut out: Vec<Point> = Vec::with_capacity(poly.len());
    for p in poly {
        if out.last().map_or(true, |q| q.dist(p) > eps) {
            out.push(p);
        }
    }
    while out.len() > 1 && out[0].dist(*out.last().unwrap()) <= eps {
        out.pop();
    }
    out
}

/// One Voronoi cell per center, each the intersection of `bbox` with the
/// half-planes closer to its center than to every other center.
pub fn voronoi_partition(centers: &[Point], bbox: &BBox) -> Result<Vec<Region>, GeomError> {
    if centers.len() < 2 {
        return Err(GeomError::TooFewCenters(centers.len()));
    }
    for (i, c) in centers.iter().enumerate() {
        if !c.is_finite() || !bbox.strictly_contains(*c) {
            return Err(GeomError::CenterOutsideBox(i));
        }
    }
    for i in 0..centers.len() {
        for j in (i + 1)..centers.len() {
            if centers[i].dist(centers[j]) <= 1e-12 {
                return Err(GeomError::DuplicateCenters(i, j));
            }
        }
    }

    let eps = 1e-12 * bbox.diagonal();
    centers
        .iter()
        .enumerate()
        .map(|(i, &ci)| {
            let mut poly = bbox.corners();
            for (j, &cj) in centers.iter().enumerate() {
                if i == j {
                    continue;
                }
                let mid = ci.lerp(cj, 0.5);
                poly = clip_half_plane(&poly, mid, cj.sub(ci));
            }
            Region::new(i, ci, dedup_ring(poly, eps))
        })
        .collect()
}
