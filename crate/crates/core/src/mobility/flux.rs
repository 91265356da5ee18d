//! Trajectories whose region-to-region flow is proportional to shared border length.

use std::collections::BTreeMap;
use std::f64::consts::TAU;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::synth::{
    check_populations, check_timing, entity_rng, exponential, sample_path, weighted_choice,
    PopulationConfig, SyntheticTrajectories,
};
use super::MobilityError;
use crate::geom::{shared_border_overlap, BBox, Point, Region, Segment};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FluxConfig {
    pub populations: Vec<PopulationConfig>,
    pub horizon_s: f64,
    pub sample_period_s: f64,
    pub day_period_s: f64,
    pub seasonal_amplitude: f64,
    /// Mean stay in a region between hops, before seasonal modulation.
    pub dwell_mean_s: f64,
}

fn uniform_in(rng: &mut ChaCha8Rng, region: &Region) -> Point {
    let b = region.bounds();
    for _ in 0..10_000 {
        let p = Point::new(rng.gen_range(b.xmin..=b.xmax), rng.gen_range(b.ymin..=b.ymax));
        if region.contains(p) {
            return p;
        }
    }
    region.vertex_centroid()
}

/// Seeded walkers hopping between neighbouring regions.
///
/// From region `i` the next region `j` is drawn with weight proportional to
/// the shared border length times a daily sinusoid with a per-region phase;
/// the walker crosses at a uniform point of the shared border and continues
/// to a uniform point inside `j`. Stays are exponential with a mean that
/// follows the same sinusoid of the current region.
pub fn border_flux_generate(
    regions: &[Region],
    config: &FluxConfig,
    seed: u64,
) -> Result<SyntheticTrajectories, MobilityError> {
    check_populations(&config.populations)?;
    check_timing(
        config.horizon_s,
        config.sample_period_s,
        config.day_period_s,
        config.seasonal_amplitude,
        config.dwell_mean_s,
    )?;
    let n = regions.len();
    if n < 2 {
        return Err(MobilityError::TooFewCenters(n));
    }
    let all: Vec<Point> = regions.iter().flat_map(|r| r.vertices().to_vec()).collect();
    let tol = BBox::around(&all, 0.0)
        .map_err(|e| MobilityError::InvalidArgument(e.to_string()))?
        .border_tolerance();

    // shared border pieces for each ordered pair
    let mut shared: BTreeMap<(usize, usize), Vec<Segment>> = BTreeMap::new();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pieces: Vec<Segment> = regions[i]
                .borders()
                .iter()
                .flat_map(|a| {
                    regions[j]
                        .borders()
                        .into_iter()
                        .filter_map(move |b| shared_border_overlap(a, &b, tol))
                })
                .collect();
            if !pieces.is_empty() {
                shared.insert((i, j), pieces);
            }
        }
    }
    let border_len = |i: usize, j: usize| -> f64 {
        shared
            .get(&(i, j))
            .map_or(0.0, |v| v.iter().map(Segment::length).sum())
    };
    if let Some(isolated) = (0..n).find(|&i| (0..n).all(|j| border_len(i, j) == 0.0)) {
        return Err(MobilityError::InvalidArgument(format!(
            "region {isolated} shares no border with any other region"
        )));
    }

    let amp = config.seasonal_amplitude;
    let day = config.day_period_s;
    let season = |t: f64, r: usize| 1.0 + amp * (TAU * t / day + TAU * r as f64 / n as f64).sin();

    let mut out = SyntheticTrajectories::default();
    let mut entity: u64 = 0;
    for (pop, population) in config.populations.iter().enumerate() {
        for _ in 0..population.count {
            let mut rng = entity_rng(seed, entity);
            let mut region = rng.gen_range(0..n);
            let mut pos = uniform_in(&mut rng, &regions[region]);
            let mut t = 0.0;
            let mut keys = vec![(0.0, pos)];
            while t < config.horizon_s {
                let stay = exponential(&mut rng, config.dwell_mean_s * season(t, region));
                if stay > 0.0 {
                    t += stay;
                    keys.push((t, pos));
                }
                let weights: Vec<f64> = (0..n)
                    .map(|j| border_len(region, j) * season(t, j))
                    .collect();
                let next = weighted_choice(&mut rng, &weights);
                let pieces = &shared[&(region, next)];
                let lens: Vec<f64> = pieces.iter().map(Segment::length).collect();
                let piece = pieces[weighted_choice(&mut rng, &lens)];
                let crossing = piece.p1.lerp(piece.p2, rng.gen::<f64>());
                let dest = uniform_in(&mut rng, &regions[next]);
                for waypoint in [crossing, dest] {
                    let travel = pos.dist(waypoint) / population.speed;
                    if travel > 0.0 {
                        t += travel;
                        keys.push((t, waypoint));
                        pos = waypoint;
                    }
                }
                region = next;
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

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{locate, voronoi_partition};

    fn regions() -> Vec<Region> {
        let centers = [
            Point::new(2.0, 2.0),
            Point::new(8.0, 3.0),
            Point::new(5.0, 8.0),
        ];
        voronoi_partition(&centers, &BBox::new(0.0, 0.0, 10.0, 10.0).unwrap()).unwrap()
    }

    fn config() -> FluxConfig {
        FluxConfig {
            populations: vec![
                PopulationConfig { count: 5, speed: 1.0 },
                PopulationConfig { count: 5, speed: 3.0 },
            ],
            horizon_s: 200.0,
            sample_period_s: 1.0,
            day_period_s: 50.0,
            seasonal_amplitude: 0.5,
            dwell_mean_s: 2.0,
        }
    }

    #[test]
    fn stays_inside_and_respects_speed() {
        let regs = regions();
        let out = border_flux_generate(&regs, &config(), 4).unwrap();
        assert_eq!(out.points.len(), 10 * 201);
        for w in out.points.windows(2) {
            assert!(locate(&regs, w[0].pos).is_some());
            if w[0].entity_id == w[1].entity_id {
                let speed = [1.0, 3.0][out.labels[&w[0].entity_id]];
                assert!(w[0].pos.dist(w[1].pos) <= speed * (w[1].t - w[0].t) + 1e-9);
            }
        }
        assert_eq!(out, border_flux_generate(&regs, &config(), 4).unwrap());
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = config();
        cfg.seasonal_amplitude = 1.5;
        assert!(border_flux_generate(&regions(), &cfg, 0).is_err());
    }
}
