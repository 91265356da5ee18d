use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{forward, ModelError, WestConfig, WestParams};
use crate::graph::{RenormalizedAdjacency, Scaler};
use crate::tensor::Tensor;

pub const FORMAT_VERSION: u64 = 1;

/// Everything needed to reproduce predictions: architecture, propagation
/// operator, weights and the feature scaler. Floats are stored as
/// shortest round-trip decimal strings, so loading is bit-exact.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format_version: u64,
    pub config: WestConfig,
    pub adjacency: RenormalizedAdjacency,
    pub params: WestParams,
    pub scaler: Scaler,
}

impl Checkpoint {
    pub fn new(
        config: WestConfig,
        adjacency: RenormalizedAdjacency,
        params: WestParams,
        scaler: Scaler,
    ) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            config,
            adjacency,
            params,
            scaler,
        }
    }

    /// Scaled input block to scaled predictions.
    pub fn predict_scaled(&self, x: &Tensor) -> Result<Tensor, ModelError> {
        forward(x, &self.adjacency, &self.params, &self.config)
    }

    /// Raw counts in, counts out.
    pub fn predict_counts(&self, x_counts: &Tensor) -> Result<Tensor, ModelError> {
        let y = self.predict_scaled(&self.scaler.scale_tensor(x_counts))?;
        Ok(self.scaler.inverse_tensor(&y))
    }
}

pub fn save_checkpoint(path: &Path, ckpt: &Checkpoint) -> Result<(), ModelError> {
    let text = serde_json::to_string(ckpt).map_err(|e| ModelError::CorruptCheckpoint {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })?;
    fs::write(path, text).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint, ModelError> {
    let corrupt = |reason: String| ModelError::CorruptCheckpoint {
        path: path.to_path_buf(),
        reason,
    };
    let text = fs::read_to_string(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let value: serde_json::Value = serde_json::from_str(&text).map_err(|e| corrupt(e.to_string()))?;
    let found = value
        .get("format_version")
        .and_then(serde_json::Value::as_u64)
        .ok_or_else(|| corrupt("missing format_version".into()))?;
    if found != FORMAT_VERSION {
        return Err(ModelError::VersionMismatch {
            path: path.to_path_buf(),
            found,
            expected: FORMAT_VERSION,
        });
    }
    let ckpt: Checkpoint = serde_json::from_value(value).map_err(|e| corrupt(e.to_string()))?;
    ckpt.config.validate()?;
    let params = WestParams::from_parts(&ckpt.config, ckpt.params.as_slice().to_vec())
        .map_err(|e| corrupt(e.to_string()))?;
    let adjacency = RenormalizedAdjacency::from_matrix(ckpt.adjacency.matrix().clone())
        .map_err(|e| corrupt(e.to_string()))?;
    if adjacency.n() != ckpt.config.n_regions {
        return Err(corrupt(format!(
            "adjacency is {0}x{0} but config has {1} regions",
            adjacency.n(),
            ckpt.config.n_regions
        )));
    }
    Ok(Checkpoint {
        params,
        adjacency,
        ..ckpt
    })
}
