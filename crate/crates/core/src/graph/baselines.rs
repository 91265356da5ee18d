//! Comparison adjacencies: neighbour indicator, inverse center distance, and
//! training-period traffic correlation. Each has unit diagonal and entries in `[0, 1]`.

use super::GraphError;
use crate::geom::{shared_borders_adjacency, GeomError, Point, Region, WeightedAdjacency};
use crate::mobility::TrafficSeries;
use crate::tensor::Tensor;

pub fn baseline_adjacency_binary(
    regions: &[Region],
    tol: f64,
) -> Result<WeightedAdjacency, GraphError> {
    let shared = shared_borders_adjacency(regions, tol)?;
    let n = shared.n();
    let m = Tensor::from_fn(n, n, |i, j| {
        if i == j || shared.get(i, j) > 0.0 {
            1.0
        } else {
            0.0
        }
    });
    Ok(WeightedAdjacency::new(m)?)
}

pub fn baseline_adjacency_centers(centers: &[Point]) -> Result<WeightedAdjacency, GraphError> {
    let n = centers.len();
    if n < 2 {
        return Err(GeomError::TooFewCenters(n).into());
    }
    let mut inv = Tensor::zeros(n, n);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = centers[i].dist(centers[j]);
            if d <= 1e-12 {
                return Err(GeomError::DuplicateCenters(i, j).into());
            }
            inv[(i, j)] = 1.0 / d;
            inv[(j, i)] = 1.0 / d;
        }
    }
    let max = inv.max();
    let mut m = inv.map(|v| v / max);
    for i in 0..n {
        m[(i, i)] = 1.0;
    }
    Ok(WeightedAdjacency::new(m)?)
}

fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let (ma, mb) = (a.iter().sum::<f64>() / n, b.iter().sum::<f64>() / n);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        let (dx, dy) = (x - ma, y - mb);
        sab += dx * dy;
        saa += dx * dx;
        sbb += dy * dy;
    }
    if saa <= 0.0 || sbb <= 0.0 {
        return 0.0;
    }
    sab / (saa.sqrt() * sbb.sqrt())
}

/// Pearson correlation between regional count series, negatives clipped to 0.
/// Pass only the training portion of the series.
pub fn baseline_adjacency_traffic(
    train_series: &TrafficSeries,
) -> Result<WeightedAdjacency, GraphError> {
    let n = train_series.n_regions;
    let counts = train_series.to_tensor();
    let cols: Vec<Vec<f64>> = (0..n).map(|r| counts.column(r)).collect();
    let mut m = Tensor::identity(n);
    for i in 0..n {
        for j in (i + 1)..n {
            let c = pearson(&cols[i], &cols[j]).clamp(0.0, 1.0);
            m[(i, j)] = c;
            m[(j, i)] = c;
        }
    }
    Ok(WeightedAdjacency::new(m)?)
}
