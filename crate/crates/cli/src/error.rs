use std::fmt;

use west_core::geom::GeomError;
use west_core::graph::GraphError;
use west_core::mobility::MobilityError;
use west_core::model::ModelError;
use west_core::training::TrainError;

pub const CONFIG: u8 = 2;
pub const MISSING: u8 = 3;
pub const NUMERIC: u8 = 4;

/// A failed command: the stage it failed in, the exit code and a message.
#[derive(Debug)]
pub struct CliError {
    pub stage: &'static str,
    pub code: u8,
    pub message: String,
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} failed: {}", self.stage, self.message)
    }
}

impl CliError {
    pub fn new(stage: &'static str, code: u8, message: impl Into<String>) -> Self {
        Self {
            stage,
            code,
            message: message.into(),
        }
    }

    pub fn config(stage: &'static str, message: impl Into<String>) -> Self {
        Self::new(stage, CONFIG, message)
    }

    pub fn missing(stage: &'static str, message: impl Into<String>) -> Self {
        Self::new(stage, MISSING, message)
    }
}

fn geom_code(e: &GeomError) -> u8 {
    match e {
        GeomError::AllZero => NUMERIC,
        _ => CONFIG,
    }
}

fn train_code(e: &TrainError) -> u8 {
    match e {
        TrainError::Diverged { .. } => NUMERIC,
        TrainError::Model(m) => model_code(m),
        TrainError::Graph(GraphError::Geom(g)) => geom_code(g),
        _ => CONFIG,
    }
}

fn model_code(e: &ModelError) -> u8 {
    match e {
        ModelError::Io { .. } | ModelError::CorruptCheckpoint { .. } => MISSING,
        ModelError::VersionMismatch { .. } => MISSING,
        _ => CONFIG,
    }
}

/// Maps library errors onto exit codes.
pub trait Stage<T> {
    fn stage(self, stage: &'static str) -> Result<T, CliError>;
}

impl<T> Stage<T> for Result<T, west_core::Error> {
    fn stage(self, stage: &'static str) -> Result<T, CliError> {
        self.map_err(|e| {
            let code = match &e {
                west_core::Error::Io { .. } | west_core::Error::Format { .. } => MISSING,
                west_core::Error::Geom(g) => geom_code(g),
                west_core::Error::Train(t) => train_code(t),
                west_core::Error::Model(m) => model_code(m),
                _ => CONFIG,
            };
            CliError::new(stage, code, e.to_string())
        })
    }
}

macro_rules! stage_via_core {
    ($($t:ty),*) => {$(
        impl<T> Stage<T> for Result<T, $t> {
            fn stage(self, stage: &'static str) -> Result<T, CliError> {
                self.map_err(west_core::Error::from).stage(stage)
            }
        }
    )*};
}

stage_via_core!(GeomError, GraphError, MobilityError, ModelError, TrainError);
