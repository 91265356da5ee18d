use serde::{Deserialize, Serialize};

use super::MobilityError;
use crate::geom::Point;

/// How the mean center distance is averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DistanceMode {
    /// Sum over all ordered pairs, self-pairs included, divided by N².
    #[default]
    Ordered,
    /// Mean over the N(N-1)/2 distinct unordered pairs.
    Unordered,
}

/// Whether the step duration is stretched for multi-step horizons.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HopsWindow {
    /// `D / MinSpeed * U / 2` when `U > 1`.
    #[default]
    #[serde(alias = "alg3")]
    Scaled,
    /// `D / MinSpeed` regardless of the horizon.
    Base,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct HopsOptions {
    #[serde(default)]
    pub distance_mode: DistanceMode,
    #[serde(default)]
    pub hops_window: HopsWindow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HopsResult {
    /// Average center distance.
    pub d: f64,
    pub min_speed: f64,
    pub t_window: f64,
    /// Stacked graph-convolution layers per population, same order as the speeds.
    pub k: Vec<usize>,
}

pub fn average_center_distance(centers: &[Point]) -> Result<f64, MobilityError> {
    average_center_distance_with(centers, DistanceMode::Ordered)
}

pub fn average_center_distance_with(
    centers: &[Point],
    mode: DistanceMode,
) -> Result<f64, MobilityError> {
    let n = centers.len();
    if n < 2 {
        return Err(MobilityError::TooFewCenters(n));
    }
    let mut unordered = 0.0;
    for i in 0..n {
        for j in (i + 1)..n {
            unordered += centers[i].dist(centers[j]);
        }
    }
    Ok(match mode {
        DistanceMode::Ordered => 2.0 * unordered / (n * n) as f64,
        DistanceMode::Unordered => unordered / (n * (n - 1) / 2) as f64,
    })
}

/// Step duration and per-population hop counts.
///
/// The slowest population sets the window so that it crosses about one
/// region per step; every other population gets `K = round(speed * t_window / D)`
/// (half-way rounds away from zero), floored at 1.
pub fn adjustable_hops(
    speeds: &[f64],
    centers: &[Point],
    u: usize,
    opts: HopsOptions,
) -> Result<HopsResult, MobilityError> {
    if speeds.is_empty() {
        return Err(MobilityError::InvalidArgument("no population speeds".into()));
    }
    if u == 0 {
        return Err(MobilityError::InvalidArgument(
            "prediction horizon must be at least 1".into(),
        ));
    }
    for (index, &speed) in speeds.iter().enumerate() {
        if !(speed > 0.0) || !speed.is_finite() {
            return Err(MobilityError::NonPositiveSpeed { index, speed });
        }
    }
    let d = average_center_distance_with(centers, opts.distance_mode)?;
    let min_speed = speeds.iter().copied().fold(speeds[0], f64::min);
    let base = d / min_speed;
    let t_window = match opts.hops_window {
        HopsWindow::Scaled if u > 1 => base * (u as f64 / 2.0),
        _ => base,
    };
    let k = speeds
        .iter()
        .map(|s| ((s * t_window / d).round() as usize).max(1))
        .collect();
    Ok(HopsResult {
        d,
        min_speed,
        t_window,
        k,
    })
}
