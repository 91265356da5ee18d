//! Planar regions: k-means centers, Voronoi cells clipped to a bounding box,
//! and the shared-border weighted adjacency between cells.

mod borders;
pub mod io;
mod kmeans;
mod voronoi;

pub use borders::{
    normalize_adjacency_weights, region_perimeter, shared_border_length, shared_border_overlap,
    shared_borders_adjacency, WeightedAdjacency,
};
pub use kmeans::{kmeans_centers, nearest_index};
pub use voronoi::voronoi_partition;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("no input points")]
    EmptyInput,
    #[error("only {distinct} distinct points for k = {k}")]
    DegenerateInput { distinct: usize, k: usize },
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("centers {0} and {1} coincide")]
    DuplicateCenters(usize, usize),
    #[error("center {0} is not strictly inside the bounding box")]
    CenterOutsideBox(usize),
    #[error("need at least 2 centers, got {0}")]
    TooFewCenters(usize),
    #[error("adjacency matrix is all zero")]
    AllZero,
    #[error("region {index} is invalid: {reason}")]
    InvalidRegion { index: usize, reason: String },
    #[error("invalid adjacency: {0}")]
    InvalidAdjacency(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn dist(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }

    pub fn dist2(self, other: Point) -> f64 {
        let (dx, dy) = (self.x - other.x, self.y - other.y);
        dx * dx + dy * dy
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }

    pub fn lerp(self, other: Point, t: f64) -> Point {
        Point::new(
            self.x + (other.x - self.x) * t,
            self.y + (other.y - self.y) * t,
        )
    }

    pub(crate) fn sub(self, o: Point) -> Point {
        Point::new(self.x - o.x, self.y - o.y)
    }

    pub(crate) fn dot(self, o: Point) -> f64 {
        self.x * o.x + self.y * o.y
    }

    pub(crate) fn cross(self, o: Point) -> f64 {
        self.x * o.y - self.y * o.x
    }
}

impl From<[f64; 2]> for Point {
    fn from([x, y]: [f64; 2]) -> Self {
        Point::new(x, y)
    }
}

impl From<Point> for [f64; 2] {
    fn from(p: Point) -> Self {
        [p.x, p.y]
    }
}

impl Serialize for Point {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        [self.x, self.y].serialize(s)
    }
}

impl<'de> Deserialize<'de> for Point {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        <[f64; 2]>::deserialize(d).map(Point::from)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment {
    pub p1: Point,
    pub p2: Point,
}

impl Segment {
    pub const fn new(p1: Point, p2: Point) -> Self {
        Self { p1, p2 }
    }

    pub fn length(&self) -> f64 {
        self.p1.dist(self.p2)
    }

    pub fn reversed(&self) -> Segment {
        Segment::new(self.p2, self.p1)
    }
}

/// Axis-aligned rectangle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BBox {
    pub xmin: f64,
    pub ymin: f64,
    pub xmax: f64,
    pub ymax: f64,
}

impl BBox {
    pub fn new(xmin: f64, ymin: f64, xmax: f64, ymax: f64) -> Result<Self, GeomError> {
        let vals = [xmin, ymin, xmax, ymax];
        if vals.iter().any(|v| !v.is_finite()) || xmax <= xmin || ymax <= ymin {
            return Err(GeomError::InvalidArgument(format!(
                "bounding box {vals:?} must be finite with positive extent"
            )));
        }
        Ok(Self {
            xmin,
            ymin,
            xmax,
            ymax,
        })
    }

    /// Extent of `points` grown by `fraction` of the width/height on each side.
    pub fn around(points: &[Point], fraction: f64) -> Result<Self, GeomError> {
        if points.is_empty() {
            return Err(GeomError::EmptyInput);
        }
        let mut b = [f64::INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY];
        for p in points {
            b[0] = b[0].min(p.x);
            b[1] = b[1].min(p.y);
            b[2] = b[2].max(p.x);
            b[3] = b[3].max(p.y);
        }
        // Degenerate extents (all points on a line) still get a usable box.
        let w = (b[2] - b[0]).max(1e-9 * (1.0 + b[2].abs()));
        let h = (b[3] - b[1]).max(1e-9 * (1.0 + b[3].abs()));
        BBox::new(
            b[0] - fraction * w,
            b[1] - fraction * h,
            b[2] + fraction * w,
            b[3] + fraction * h,
        )
    }

    pub fn width(&self) -> f64 {
        self.xmax - self.xmin
    }

    pub fn height(&self) -> f64 {
        self.ymax - self.ymin
    }

    pub fn diagonal(&self) -> f64 {
        self.width().hypot(self.height())
    }

    /// Default collinearity tolerance for border comparisons in this box.
    pub fn border_tolerance(&self) -> f64 {
        1e-9 * self.diagonal()
    }

    pub fn contains(&self, p: Point) -> bool {
        p.x >= self.xmin && p.x <= self.xmax && p.y >= self.ymin && p.y <= self.ymax
    }

    pub fn strictly_contains(&self, p: Point) -> bool {
        p.x > self.xmin && p.x < self.xmax && p.y > self.ymin && p.y < self.ymax
    }

    /// Corners in counter-clockwise order starting at the minimum corner.
    pub fn corners(&self) -> Vec<Point> {
        vec![
            Point::new(self.xmin, self.ymin),
            Point::new(self.xmax, self.ymin),
            Point::new(self.xmax, self.ymax),
            Point::new(self.xmin, self.ymax),
        ]
    }

    pub fn to_array(&self) -> [f64; 4] {
        [self.xmin, self.ymin, self.xmax, self.ymax]
    }
}

/// A convex polygonal cell acting as one graph node.
///
/// Vertices are stored counter-clockwise; the borders are the closed cycle of
/// segments between consecutive vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Region {
    pub index: usize,
    pub center: Point,
    vertices: Vec<Point>,
}

impl Region {
    /// Validates that `vertices` form a convex counter-clockwise polygon with
    /// positive-length edges containing `center`.
    pub fn new(index: usize, center: Point, vertices: Vec<Point>) -> Result<Self, GeomError> {
        let invalid = |reason: &str| GeomError::InvalidRegion {
            index,
            reason: reason.to_string(),
        };
        if vertices.len() < 3 {
            return Err(invalid("fewer than 3 vertices"));
        }
        if !center.is_finite() || vertices.iter().any(|v| !v.is_finite()) {
            return Err(invalid("non-finite coordinate"));
        }
        let scale = vertices
            .iter()
            .map(|v| v.x.abs().max(v.y.abs()))
            .fold(1.0, f64::max);
        let eps = 1e-9 * scale;
        let n = vertices.len();
        let mut area2 = 0.0;
        for i in 0..n {
            let a = vertices[i];
            let b = vertices[(i + 1) % n];
            let c = vertices[(i + 2) % n];
            if a.dist(b) <= 1e-12 * scale {
                return Err(invalid("zero-length border"));
            }
            if b.sub(a).cross(c.sub(b)) < -eps * scale {
                return Err(invalid("polygon is not convex counter-clockwise"));
            }
            area2 += a.cross(b);
        }
        if area2 <= 0.0 {
            return Err(invalid("polygon has non-positive area"));
        }
        let region = Self {
            index,
            center,
            vertices,
        };
        if !region.contains_with(center, eps) {
            return Err(invalid("center lies outside the polygon"));
        }
        Ok(region)
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn borders(&self) -> Vec<Segment> {
        let n = self.vertices.len();
        (0..n)
            .map(|i| Segment::new(self.vertices[i], self.vertices[(i + 1) % n]))
            .collect()
    }

    /// Point-in-polygon test; boundary points count as inside.
    pub fn contains(&self, p: Point) -> bool {
        self.contains_with(p, 1e-12)
    }

    /// Inclusive containment allowing `eps` of slack per edge (length units).
    pub fn contains_with(&self, p: Point, eps: f64) -> bool {
        let n = self.vertices.len();
        (0..n).all(|i| {
            let a = self.vertices[i];
            let b = self.vertices[(i + 1) % n];
            let e = b.sub(a);
            e.cross(p.sub(a)) >= -eps * e.dot(e).sqrt()
        })
    }

    pub fn area(&self) -> f64 {
        let n = self.vertices.len();
        0.5 * (0..n)
            .map(|i| self.vertices[i].cross(self.vertices[(i + 1) % n]))
            .sum::<f64>()
    }

    /// Vertex-average centroid; always inside a convex polygon.
    pub fn vertex_centroid(&self) -> Point {
        let n = self.vertices.len() as f64;
        let (sx, sy) = self
            .vertices
            .iter()
            .fold((0.0, 0.0), |(sx, sy), v| (sx + v.x, sy + v.y));
        Point::new(sx / n, sy / n)
    }

    pub fn bounds(&self) -> BBox {
        let mut b = BBox {
            xmin: f64::INFINITY,
            ymin: f64::INFINITY,
            xmax: f64::NEG_INFINITY,
            ymax: f64::NEG_INFINITY,
        };
        for v in &self.vertices {
            b.xmin = b.xmin.min(v.x);
            b.ymin = b.ymin.min(v.y);
            b.xmax = b.xmax.max(v.x);
            b.ymax = b.ymax.max(v.y);
        }
        b
    }
}

/// Index of the first region (lowest index) containing `p`, if any.
pub fn locate(regions: &[Region], p: Point) -> Option<usize> {
    regions.iter().position(|r| r.contains(p))
}
