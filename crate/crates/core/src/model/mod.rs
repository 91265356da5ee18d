//! The GCN-LSTM forecaster: stacked graph convolutions over the renormalized
//! adjacency, an LSTM over the encoded sequence, and a dense multi-step head.

mod checkpoint;
mod config;
mod network;
mod params;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, FORMAT_VERSION};
pub use config::{EncoderMode, HeadMode, WestConfig};
pub use network::{
    forward, forward_batch, gcn_encode, lstm_decode, stack_node_major, unstack_node_major,
};
pub use params::{init_params, param_shapes, WestParams};

use std::path::PathBuf;

use thiserror::Error;

use crate::autodiff::AutodiffError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid model config `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("parameters do not match the config: {0}")]
    ParamMismatch(String),
    #[error(transparent)]
    Autodiff(#[from] AutodiffError),
    #[error("corrupt checkpoint {path}: {reason}")]
    CorruptCheckpoint { path: PathBuf, reason: String },
    #[error("checkpoint {path} has format_version {found}, this build reads {expected}")]
    VersionMismatch {
        path: PathBuf,
        found: u64,
        expected: u64,
    },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
}
