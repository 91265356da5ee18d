//! Discrete-time dynamic graph datasets: propagation operator, sliding
//! windows over regional counts, chronological splits, and the comparison
//! adjacency builders.

mod baselines;
mod dataset;
pub mod io;
mod renorm;

pub use baselines::{baseline_adjacency_binary, baseline_adjacency_centers, baseline_adjacency_traffic};
pub use dataset::{
    chrono_split, split_plan, window_dataset, DTDGDataset, SampleWindow, Scaler, Scaling, Split,
    SplitPlan,
};
pub use renorm::{renormalize, RenormalizedAdjacency};

use thiserror::Error;

use crate::geom::GeomError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GraphError {
    #[error("adjacency must be normalized to [0, 1]: {0}")]
    NotNormalized(String),
    #[error("series has {steps} steps, need at least {needed}")]
    TooShort { steps: usize, needed: usize },
    #[error("split leaves an empty {0} set")]
    EmptySplit(&'static str),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Geom(#[from] GeomError),
}
