//! Seeded random-waypoint trajectories over weighted attraction cells.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{position_at, MobilityError, TrajectoryPoint};
use crate::geom::{nearest_index, BBox, Point};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PopulationConfig {
    pub count: usize,
    pub speed: f64,
}

fn default_day() -> f64 {
    86_400.0
}

fn default_amplitude() -> f64 {
    0.5
}

/// Generator settings, stored as JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorConfig {
    pub bbox: [f64; 4],
    pub populations: Vec<PopulationConfig>,
    pub horizon_s: f64,
    pub sample_period_s: f64,
    /// Relative pull of each attraction cell when choosing destinations.
    pub region_attraction: Vec<f64>,
    #[serde(default)]
    pub seed: u64,
    /// Attraction cell sites; laid out on a grid over the box when absent.
    #[serde(default)]
    pub attractors: Option<Vec<Point>>,
    #[serde(default = "default_day")]
    pub day_period_s: f64,
    /// Relative swing of the daily sinusoid, in `[0, 1)`.
    #[serde(default = "default_amplitude")]
    pub seasonal_amplitude: f64,
    /// Mean pause at each waypoint before the next trip departs.
    #[serde(default)]
    pub dwell_mean_s: f64,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct SyntheticTrajectories {
    /// Sorted by `(entity_id, t)`.
    pub points: Vec<TrajectoryPoint>,
    /// Generating population per entity.
    pub labels: BTreeMap<u64, usize>,
}

fn invalid(key: impl Into<String>, reason: impl Into<String>) -> MobilityError {
    MobilityError::InvalidConfig {
        key: key.into(),
        reason: reason.into(),
    }
}

pub(crate) fn check_populations(pops: &[PopulationConfig]) -> Result<(), MobilityError> {
    if pops.is_empty() {
        return Err(invalid("populations", "at least one population is required"));
    }
    for (i, p) in pops.iter().enumerate() {
        if !(p.speed > 0.0) || !p.speed.is_finite() {
            return Err(invalid(format!("populations[{i}].speed"), "must be positive"));
        }
    }
    Ok(())
}

pub(crate) fn check_timing(
    horizon_s: f64,
    sample_period_s: f64,
    day_period_s: f64,
    amplitude: f64,
    dwell_mean_s: f64,
) -> Result<(), MobilityError> {
    if !(horizon_s > 0.0) || !horizon_s.is_finite() {
        return Err(invalid("horizon_s", "must be positive"));
    }
    if !(sample_period_s > 0.0) || !sample_period_s.is_finite() {
        return Err(invalid("sample_period_s", "must be positive"));
    }
    if !(day_period_s > 0.0) || !day_period_s.is_finite() {
        return Err(invalid("day_period_s", "must be positive"));
    }
    if !(0.0..1.0).contains(&amplitude) {
        return Err(invalid("seasonal_amplitude", "must lie in [0, 1)"));
    }
    if !(dwell_mean_s >= 0.0) || !dwell_mean_s.is_finite() {
        return Err(invalid("dwell_mean_s", "must be nonnegative"));
    }
    Ok(())
}

impl GeneratorConfig {
    pub fn validate(&self) -> Result<BBox, MobilityError> {
        let [x0, y0, x1, y1] = self.bbox;
        let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| invalid("bbox", e.to_string()))?;
        check_populations(&self.populations)?;
        check_timing(
            self.horizon_s,
            self.sample_period_s,
            self.day_period_s,
            self.seasonal_amplitude,
            self.dwell_mean_s,
        )?;
        if self.region_attraction.is_empty()
            || self.region_attraction.iter().any(|w| !(*w >= 0.0) || !w.is_finite())
            || self.region_attraction.iter().sum::<f64>() <= 0.0
        {
            return Err(invalid(
                "region_attraction",
                "needs nonnegative weights with a positive sum",
            ));
        }
        if let Some(att) = &self.attractors {
            if att.len() != self.region_attraction.len() {
                return Err(invalid(
                    "attractors",
                    "must have one site per region_attraction weight",
                ));
            }
            if att.iter().any(|p| !bbox.contains(*p)) {
                return Err(invalid("attractors", "sites must lie inside bbox"));
            }
        }
        Ok(bbox)
    }

    /// Attraction sites: explicit, or the centers of a near-square grid of cells.
    pub fn attraction_sites(&self, bbox: &BBox) -> Vec<Point> {
        if let Some(att) = &self.attractors {
            return att.clone();
        }
        let m = self.region_attraction.len();
        let cols = (m as f64).sqrt().ceil() as usize;
        let rows = m.div_ceil(cols);
        (0..m)
            .map(|k| {
                let (c, r) = (k % cols, k / cols);
                Point::new(
                    bbox.xmin + bbox.width() * (c as f64 + 0.5) / cols as f64,
                    bbox.ymin + bbox.height() * (r as f64 + 0.5) / rows as f64,
                )
            })
            .collect()
    }
}

/// Samples a piecewise-linear keyframe path at `0, period, 2 period, ...` up to the horizon.
pub(crate) fn sample_path(
    entity_id: u64,
    keys: &[(f64, Point)],
    period: f64,
    horizon: f64,
) -> Vec<TrajectoryPoint> {
    let n = (horizon / period + 1e-9).floor() as usize;
    (0..=n)
        .filter_map(|k| {
            let t = k as f64 * period;
            position_at(keys, t).map(|pos| TrajectoryPoint { entity_id, t, pos })
        })
        .collect()
}

/// Exponential variate with the given mean.
pub(crate) fn exponential(rng: &mut ChaCha8Rng, mean: f64) -> f64 {
    if mean <= 0.0 {
        return 0.0;
    }
    let u: f64 = rng.gen();
    -(1.0 - u).ln() * mean
}

pub(crate) fn weighted_choice(rng: &mut ChaCha8Rng, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    let mut x = rng.gen::<f64>() * total;
    for (i, w) in weights.iter().enumerate() {
        if x < *w {
            return i;
        }
        x -= w;
    }
    weights.iter().rposition(|w| *w > 0.0).unwrap_or(0)
}

pub(crate) fn entity_rng(seed: u64, entity: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(entity);
    rng
}

/// Random-waypoint trajectories. Each entity travels at its population's
/// speed between destinations drawn from attraction cells whose weights swing
/// sinusoidally over the day (each cell with its own phase); trip departures
/// follow a daily intensity when `dwell_mean_s > 0`. Deterministic for a seed.
pub fn synth_generate(
    config: &GeneratorConfig,
    seed: u64,
) -> Result<SyntheticTrajectories, MobilityError> {
    let bbox = config.validate()?;
    let sites = config.attraction_sites(&bbox);
    let m = sites.len();
    let amp = config.seasonal_amplitude;
    let day = config.day_period_s;

    let sample_in_cell = |rng: &mut ChaCha8Rng, cell: usize| -> Point {
        for _ in 0..10_000 {
            let p = Point::new(
                rng.gen_range(bbox.xmin..=bbox.xmax),
                rng.gen_range(bbox.ymin..=bbox.ymax),
            );
            if nearest_index(&sites, p) == cell {
                return p;
            }
        }
        sites[cell]
    };
    let destination = |rng: &mut ChaCha8Rng, t: f64| -> Point {
        let weights: Vec<f64> = config
            .region_attraction
            .iter()
            .enumerate()
            .map(|(j, a)| a * (1.0 + amp * (TAU * t / day + TAU * j as f64 / m as f64).sin()))
            .collect();
        let cell = weighted_choice(rng, &weights);
        sample_in_cell(rng, cell)
    };

    let mut out = SyntheticTrajectories::default();
    let mut entity: u64 = 0;
    for (pop, population) in config.populations.iter().enumerate() {
        for _ in 0..population.count {
            let mut rng = entity_rng(seed, entity);
            let mut t = 0.0;
            let mut pos = destination(&mut rng, 0.0);
            let mut keys = vec![(0.0, pos)];
            while t < config.horizon_s {
                let intensity = 1.0 + amp * (TAU * t / day).sin();
                let dwell = exponential(&mut rng, config.dwell_mean_s / intensity);
                if dwell > 0.0 {
                    t += dwell;
                    keys.push((t, pos));
                }
                let dest = destination(&mut rng, t);
                let travel = pos.dist(dest) / population.speed;
                if travel > 0.0 {
                    t += travel;
                    keys.push((t, dest));
                    pos = dest;
                }
            }
            out.points.extend(sample_path(
                entity,
                &keys,
                config.sample_period_s,
                config.horizon_s,
            ));
            out.labels.insert(entity, pop);
            entity += 1;
        }
    }
    Ok(out)
}
