//! Fitting, evaluation and the per-hop-count model ensemble.

mod metrics;
mod optim;
mod pipeline;
mod trainer;

pub use metrics::{compute_metrics, ErrorStats, MetricsReport};
pub use optim::{Optimizer, OptimizerState};
pub use pipeline::{
    evaluate_checkpoints, fit_groups, forecast_latest, per_k_pipeline, prepare_groups, Evaluation,
    GroupResult, GroupSeries, PipelineConfig, PipelineResult, PreparedGroups,
};
pub use trainer::{
    evaluate, predict_dataset, train, train_logged, AccessLog, EpochRecord, Phase, TrainHistory,
    WindowRead,
};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::GraphError;
use crate::mobility::MobilityError;
use crate::model::ModelError;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("loss became non-finite at epoch {epoch}")]
    Diverged { epoch: usize },
    #[error("invalid training config `{key}`: {reason}")]
    InvalidConfig { key: &'static str, reason: String },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Mobility(#[from] MobilityError),
}

impl From<crate::autodiff::AutodiffError> for TrainError {
    fn from(e: crate::autodiff::AutodiffError) -> Self {
        TrainError::Model(e.into())
    }
}

fn default_epochs() -> usize {
    200
}
fn default_lr() -> f64 {
    1e-3
}
fn default_batch() -> usize {
    32
}
fn default_patience() -> usize {
    20
}
fn default_val() -> f64 {
    0.1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_lr")]
    pub learning_rate: f64,
    #[serde(default = "default_batch")]
    pub batch_size: usize,
    #[serde(default)]
    pub optimizer: Optimizer,
    /// Epochs without validation improvement before stopping; 0 disables.
    #[serde(default = "default_patience")]
    pub early_stop_patience: usize,
    /// Trailing share of the training windows held out for early stopping.
    #[serde(default = "default_val")]
    pub validation_fraction: f64,
    #[serde(default)]
    pub shuffle: bool,
    #[serde(default)]
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: default_epochs(),
            learning_rate: default_lr(),
            batch_size: default_batch(),
            optimizer: Optimizer::default(),
            early_stop_patience: default_patience(),
            validation_fraction: default_val(),
            shuffle: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        let bad = |key, reason: &str| {
            Err(TrainError::InvalidConfig {
                key,
                reason: reason.into(),
            })
        };
        if self.epochs == 0 {
            return bad("epochs", "must be at least 1");
        }
        if !(self.learning_rate >= 0.0) || !self.learning_rate.is_finite() {
            return bad("learning_rate", "must be a finite nonnegative number");
        }
        if self.batch_size == 0 {
            return bad("batch_size", "must be at least 1");
        }
        if !(0.0..1.0).contains(&self.validation_fraction) {
            return bad("validation_fraction", "must lie in [0, 1)");
        }
        if let Optimizer::Adam { beta1, beta2, eps } = self.optimizer {
            if !(beta1 > 0.0 && beta1 < 1.0) {
                return bad("optimizer.beta1", "must lie in (0, 1)");
            }
            if !(beta2 > 0.0 && beta2 < 1.0) {
                return bad("optimizer.beta2", "must lie in (0, 1)");
            }
            if !(eps > 0.0) {
                return bad("optimizer.eps", "must be positive");
            }
        }
        Ok(())
    }
}
