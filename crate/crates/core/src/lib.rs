//! Regional traffic forecasting with a weighted stacked GCN-LSTM.
//!
//! Pipeline: raw trajectories are clustered into Voronoi regions
//! ([`geom`]), counted per region and time-step ([`mobility`]), windowed into
//! a discrete-time dynamic graph dataset ([`graph`]), and fitted with the
//! GCN-LSTM model ([`model`], [`training`]) built on a small reverse-mode
//! differentiation engine ([`autodiff`]).

pub mod autodiff;
pub mod geom;
pub mod graph;
pub mod mobility;
pub mod model;
pub mod tensor;
pub mod training;

use std::path::{Path, PathBuf};

use thiserror::Error;

pub use tensor::Tensor;

#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Geom(#[from] geom::GeomError),
    #[error(transparent)]
    Mobility(#[from] mobility::MobilityError),
    #[error(transparent)]
    Graph(#[from] graph::GraphError),
    #[error(transparent)]
    Model(#[from] model::ModelError),
    #[error(transparent)]
    Train(#[from] training::TrainError),
    #[error(transparent)]
    Autodiff(#[from] autodiff::AutodiffError),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Format { path: PathBuf, message: String },
}

impl Error {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Error::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    pub(crate) fn format(path: &Path, message: impl Into<String>) -> Self {
        Error::Format {
            path: path.to_path_buf(),
            message: message.into(),
        }
    }
}
