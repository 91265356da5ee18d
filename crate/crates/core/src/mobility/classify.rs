use std::collections::BTreeMap;

use super::{group_tracks, MobilityError, TrajectoryPoint};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Classification {
    /// Population index per entity.
    pub population: BTreeMap<u64, usize>,
    /// Path length over elapsed time, per entity.
    pub mean_speed: BTreeMap<u64, f64>,
    /// Entities with fewer than two samples, left unassigned.
    pub singletons: Vec<u64>,
}

impl Classification {
    /// Average of the member mean speeds per population; `None` for empty ones.
    pub fn population_speeds(&self, n_populations: usize) -> Vec<Option<f64>> {
        let mut acc = vec![(0.0, 0usize); n_populations];
        for (id, &p) in &self.population {
            if p < n_populations {
                acc[p].0 += self.mean_speed[id];
                acc[p].1 += 1;
            }
        }
        acc.into_iter()
            .map(|(s, n)| (n > 0).then(|| s / n as f64))
            .collect()
    }
}

/// Assigns each entity to the speed bucket its mean speed falls in.
///
/// With boundaries `b_0 < b_1 < ...`, bucket 0 holds speeds below `b_0`,
/// bucket `i` holds `[b_{i-1}, b_i)`, and the last bucket everything above.
pub fn classify_populations(
    trajectories: &[TrajectoryPoint],
    boundaries: &[f64],
) -> Result<Classification, MobilityError> {
    if boundaries.iter().any(|b| !b.is_finite()) || boundaries.windows(2).any(|w| w[1] <= w[0]) {
        return Err(MobilityError::InvalidBoundaries);
    }
    let tracks = group_tracks(trajectories)?;
    let mut out = Classification::default();
    for (id, track) in tracks {
        if track.len() < 2 {
            out.singletons.push(id);
            continue;
        }
        let path: f64 = track.windows(2).map(|w| w[0].1.dist(w[1].1)).sum();
        let elapsed = track.last().unwrap().0 - track[0].0;
        let speed = path / elapsed;
        let bucket = boundaries.partition_point(|&b| b <= speed);
        out.population.insert(id, bucket);
        out.mean_speed.insert(id, speed);
    }
    Ok(out)
}
