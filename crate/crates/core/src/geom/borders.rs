use std::cmp::Ordering;

use super::{GeomError, Point, Region, Segment};
use crate::tensor::Tensor;

/// Square, symmetric, nonnegative edge-weight matrix over regions.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedAdjacency {
    matrix: Tensor,
}

impl WeightedAdjacency {
    pub fn new(matrix: Tensor) -> Result<Self, GeomError> {
        if matrix.rows() != matrix.cols() || matrix.rows() == 0 {
            return Err(GeomError::InvalidAdjacency(format!(
                "expected a non-empty square matrix, got {:?}",
                matrix.shape()
            )));
        }
        if !matrix.is_finite() || matrix.data().iter().any(|&v| v < 0.0) {
            return Err(GeomError::InvalidAdjacency(
                "entries must be finite and nonnegative".into(),
            ));
        }
        let tol = 1e-12 * matrix.max_abs().max(1.0);
        if !matrix.is_symmetric(tol) {
            return Err(GeomError::InvalidAdjacency("matrix is not symmetric".into()));
        }
        Ok(Self { matrix })
    }

    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.matrix[(i, j)]
    }
}

fn cmp_point(a: &Point, b: &Point) -> Ordering {
    a.x.total_cmp(&b.x).then(a.y.total_cmp(&b.y))
}

/// Endpoints sorted lexicographically, so the representation ignores direction.
fn canonical(s: &Segment) -> Segment {
    if cmp_point(&s.p1, &s.p2) == Ordering::Greater {
        s.reversed()
    } else {
        *s
    }
}

fn line_distance(seg: &Segment, p: Point) -> f64 {
    let d = seg.p2.sub(seg.p1);
    d.cross(p.sub(seg.p1)).abs() / d.dot(d).sqrt()
}

/// Overlapping part of two segments when they lie on a common line (every
/// endpoint within `tol` of the other segment's carrier line) and overlap
/// with positive length.
///
/// The overlap is measured along the dominant axis of the reference segment,
/// which handles vertical borders without slopes. The reference is chosen by
/// a canonical ordering so the result does not depend on argument order or
/// endpoint order.
pub fn shared_border_overlap(s1: &Segment, s2: &Segment, tol: f64) -> Option<Segment> {
    let (a, b) = (canonical(s1), canonical(s2));
    let (r, o) = match cmp_point(&a.p1, &b.p1).then(cmp_point(&a.p2, &b.p2)) {
        Ordering::Greater => (b, a),
        _ => (a, b),
    };
    if r.length() == 0.0 || o.length() == 0.0 {
        return None;
    }
    let collinear = line_distance(&r, o.p1) < tol
        && line_distance(&r, o.p2) < tol
        && line_distance(&o, r.p1) < tol
        && line_distance(&o, r.p2) < tol;
    if !collinear {
        return None;
    }

    let d = r.p2.sub(r.p1);
    let use_x = d.x.abs() >= d.y.abs();
    let coord = |p: Point| if use_x { p.x } else { p.y };
    let (r0, r1) = (coord(r.p1), coord(r.p2));
    let (o0, o1) = (coord(o.p1).min(coord(o.p2)), coord(o.p1).max(coord(o.p2)));
    let (rlo, rhi) = (r0.min(r1), r0.max(r1));
    let lo = rlo.max(o0);
    let hi = rhi.min(o1);
    if hi <= lo {
        return None;
    }
    let extent = r1 - r0;
    let at = |c: f64| r.p1.lerp(r.p2, (c - r0) / extent);
    Some(Segment::new(at(lo), at(hi)))
}

/// Length of the collinear overlap of two segments; 0 when they are not
/// collinear within `tol` or do not overlap.
pub fn shared_border_length(s1: &Segment, s2: &Segment, tol: f64) -> f64 {
    shared_border_overlap(s1, s2, tol).map_or(0.0, |s| s.length())
}

pub fn region_perimeter(region: &Region) -> f64 {
    region.borders().iter().map(Segment::length).sum()
}

/// Shared-border weights between every pair of regions, with each diagonal
/// entry set to the region's perimeter. Not normalized.
pub fn shared_borders_adjacency(
    regions: &[Region],
    tol: f64,
) -> Result<WeightedAdjacency, GeomError> {
    let n = regions.len();
    if n < 2 {
        return Err(GeomError::TooFewCenters(n));
    }
    let borders: Vec<Vec<Segment>> = regions.iter().map(Region::borders).collect();
    let mut m = Tensor::zeros(n, n);
    for i in 0..n {
        m[(i, i)] = region_perimeter(&regions[i]);
        for j in (i + 1)..n {
            let total: f64 = borders[i]
                .iter()
                .flat_map(|a| borders[j].iter().map(move |b| (a, b)))
                .map(|(a, b)| shared_border_length(a, b, tol))
                .sum();
            m[(i, j)] = total;
            m[(j, i)] = total;
        }
    }
    WeightedAdjacency::new(m)
}

/// Divides every entry by the global maximum so the largest becomes 1.
pub fn normalize_adjacency_weights(a: &WeightedAdjacency) -> Result<WeightedAdjacency, GeomError> {
    let max = a.matrix.max();
    if max <= 0.0 {
        return Err(GeomError::AllZero);
    }
    Ok(WeightedAdjacency {
        matrix: a.matrix.map(|v| v / max),
    })
}
