//! Moving populations: speed classes, hop counts per population, regional
//! occupancy counts, and synthetic trajectory generators.

mod aggregate;
mod classify;
mod flux;
mod hops;
pub mod io;
mod synth;

pub use aggregate::{aggregate_traffic, group_tracks, position_at, Track, TrafficSeries};
pub use classify::{classify_populations, Classification};
pub use flux::{border_flux_generate, FluxConfig};
pub use hops::{
    adjustable_hops, average_center_distance, average_center_distance_with, DistanceMode,
    HopsOptions, HopsResult, HopsWindow,
};
pub use synth::{synth_generate, GeneratorConfig, PopulationConfig, SyntheticTrajectories};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geom::Point;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MobilityError {
    #[error("speed of population {index} is not positive ({speed})")]
    NonPositiveSpeed { index: usize, speed: f64 },
    #[error("need at least 2 centers, got {0}")]
    TooFewCenters(usize),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("entity {0} has non-increasing or invalid timestamps")]
    NonMonotonicTrack(u64),
    #[error("speed boundaries must be finite and strictly increasing")]
    InvalidBoundaries,
    #[error("horizon {span} is shorter than one window of {t_window}")]
    EmptyWindow { span: f64, t_window: f64 },
    #[error("invalid config key `{key}`: {reason}")]
    InvalidConfig { key: String, reason: String },
}

/// One sampled position of a moving entity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryPoint {
    pub entity_id: u64,
    pub t: f64,
    pub pos: Point,
}

impl TrajectoryPoint {
    pub fn new(entity_id: u64, t: f64, x: f64, y: f64) -> Self {
        Self {
            entity_id,
            t,
            pos: Point::new(x, y),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PopulationSpec {
    pub population_id: usize,
    pub speed: f64,
}
