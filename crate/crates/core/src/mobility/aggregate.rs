use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{MobilityError, TrajectoryPoint};
use crate::geom::{locate, Point, Region};
use crate::tensor::Tensor;

/// Time-sorted samples of one entity.
pub type Track = Vec<(f64, Point)>;

/// Per-step regional occupancy counts, one row per time-step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrafficSeries {
    pub n_regions: usize,
    pub t_window: f64,
    pub t_start: f64,
    counts: Vec<Vec<u32>>,
}

impl TrafficSeries {
    pub fn new(
        n_regions: usize,
        t_window: f64,
        t_start: f64,
        counts: Vec<Vec<u32>>,
    ) -> Result<Self, MobilityError> {
        if counts.is_empty() {
            return Err(MobilityError::InvalidArgument("series has no steps".into()));
        }
        if !(t_window > 0.0) {
            return Err(MobilityError::InvalidArgument(format!(
                "t_window must be positive, got {t_window}"
            )));
        }
        if let Some(bad) = counts.iter().position(|r| r.len() != n_regions) {
            return Err(MobilityError::InvalidArgument(format!(
                "step {bad} has {} regions, expected {n_regions}",
                counts[bad].len()
            )));
        }
        Ok(Self {
            n_regions,
            t_window,
            t_start,
            counts,
        })
    }

    pub fn steps(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[Vec<u32>] {
        &self.counts
    }

    pub fn get(&self, step: usize, region: usize) -> u32 {
        self.counts[step][region]
    }

    pub fn step_total(&self, step: usize) -> u32 {
        self.counts[step].iter().sum()
    }

    /// Counts as a `steps x n_regions` real matrix.
    pub fn to_tensor(&self) -> Tensor {
        Tensor::from_fn(self.steps(), self.n_regions, |m, n| self.counts[m][n] as f64)
    }

    /// The first `steps` rows (at least one, at most all).
    pub fn truncated(&self, steps: usize) -> TrafficSeries {
        let steps = steps.clamp(1, self.steps());
        Self {
            counts: self.counts[..steps].to_vec(),
            ..self.clone()
        }
    }

    /// Elementwise sum of series with identical shape and timing.
    pub fn sum(series: &[TrafficSeries]) -> Result<TrafficSeries, MobilityError> {
        let first = series
            .first()
            .ok_or_else(|| MobilityError::InvalidArgument("no series to sum".into()))?;
        let mut counts = first.counts.clone();
        for s in &series[1..] {
            if s.n_regions != first.n_regions || s.steps() != first.steps() {
                return Err(MobilityError::InvalidArgument(
                    "series shapes differ".into(),
                ));
            }
            for (row, other) in counts.iter_mut().zip(&s.counts) {
                for (a, b) in row.iter_mut().zip(other) {
                    *a += b;
                }
            }
        }
        TrafficSeries::new(first.n_regions, first.t_window, first.t_start, counts)
    }
}

/// Groups samples by entity and sorts each track by time. Timestamps must be
/// finite, nonnegative and strictly increasing within an entity.
pub fn group_tracks(
    trajectories: &[TrajectoryPoint],
) -> Result<BTreeMap<u64, Track>, MobilityError> {
    let mut tracks: BTreeMap<u64, Track> = BTreeMap::new();
    for p in trajectories {
        if !p.t.is_finite() || p.t < 0.0 || !p.pos.is_finite() {
            return Err(MobilityError::NonMonotonicTrack(p.entity_id));
        }
        tracks.entry(p.entity_id).or_default().push((p.t, p.pos));
    }
    for (id, track) in tracks.iter_mut() {
        track.sort_by(|a, b| a.0.total_cmp(&b.0));
        if track.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(MobilityError::NonMonotonicTrack(*id));
        }
    }
    Ok(tracks)
}

/// Linearly interpolated position at time `t`, or `None` when `t` lies
/// outside the sampled span (with a relative slack of 1e-9).
pub fn position_at(track: &[(f64, Point)], t: f64) -> Option<Point> {
    let (first, last) = (track.first()?, track.last()?);
    let slack = 1e-9 * t.abs().max(1.0);
    if t < first.0 - slack || t > last.0 + slack {
        return None;
    }
    if t <= first.0 {
        return Some(first.1);
    }
    if t >= last.0 {
        return Some(last.1);
    }
    let hi = track.partition_point(|s| s.0 < t);
    let (t1, p1) = track[hi];
    if t1 == t {
        return Some(p1);
    }
    let (t0, p0) = track[hi - 1];
    Some(p0.lerp(p1, (t - t0) / (t1 - t0)))
}

/// Counts, for each step `[t_start + m w, t_start + (m + 1) w)`, the distinct
/// entities whose position at the step's end instant falls in each region.
///
/// Points on a shared boundary go to the lowest region index; entities not
/// sampled at that instant or outside every region are not counted.
pub fn aggregate_traffic(
    trajectories: &[TrajectoryPoint],
    regions: &[Region],
    t_window: f64,
    t_start: f64,
    t_end: f64,
) -> Result<TrafficSeries, MobilityError> {
    if !(t_window > 0.0) || !t_window.is_finite() {
        return Err(MobilityError::InvalidArgument(format!(
            "t_window must be positive, got {t_window}"
        )));
    }
    let span = t_end - t_start;
    if !(span >= t_window) {
        return Err(MobilityError::EmptyWindow { span, t_window });
    }
    let steps = (span / t_window * (1.0 + 1e-12)).floor() as usize;
    let tracks = group_tracks(trajectories)?;
    let mut counts = vec![vec![0u32; regions.len()]; steps];
    for track in tracks.values() {
        for (m, row) in counts.iter_mut().enumerate() {
            let instant = t_start + (m + 1) as f64 * t_window;
            if let Some(r) = position_at(track, instant).and_then(|p| locate(regions, p)) {
                row[r] += 1;
            }
        }
    }
    TrafficSeries::new(regions.len(), t_window, t_start, counts)
}
