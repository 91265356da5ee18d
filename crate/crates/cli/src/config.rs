use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use west_core::mobility::{GeneratorConfig, HopsOptions, PopulationConfig};
use west_core::model::{EncoderMode, HeadMode};
use west_core::training::TrainConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AdjacencyMode {
    SharedBorders,
    Binary,
    Centers,
    Traffic,
}

impl AdjacencyMode {
    pub const ALL: [AdjacencyMode; 4] = [
        AdjacencyMode::SharedBorders,
        AdjacencyMode::Binary,
        AdjacencyMode::Centers,
        AdjacencyMode::Traffic,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AdjacencyMode::SharedBorders => "shared_borders",
            AdjacencyMode::Binary => "binary",
            AdjacencyMode::Centers => "centers",
            AdjacencyMode::Traffic => "traffic",
        }
    }
}

/// Artifact locations, relative to `work_dir` unless absolute.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Paths {
    pub trajectories: PathBuf,
    pub regions: PathBuf,
    pub adjacency: PathBuf,
    pub hops: PathBuf,
    pub checkpoints: PathBuf,
    pub reports: PathBuf,
    pub predictions: PathBuf,
}

impl Default for Paths {
    fn default() -> Self {
        Self {
            trajectories: "trajectories.csv".into(),
            regions: "regions.json".into(),
            adjacency: "adjacency.csv".into(),
            hops: "hops.json".into(),
            checkpoints: "models".into(),
            reports: "reports".into(),
            predictions: "predictions.csv".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ModelOptions {
    pub gcn_hidden: usize,
    pub lstm_hidden: usize,
    pub encoder_mode: EncoderMode,
    pub head: HeadMode,
    pub use_bias: bool,
}

impl Default for ModelOptions {
    fn default() -> Self {
        Self {
            gcn_hidden: 32,
            lstm_hidden: 64,
            encoder_mode: EncoderMode::PerStep,
            head: HeadMode::PerNode,
            use_bias: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Seeds {
    pub simulate: u64,
    pub regions: u64,
    pub model: u64,
    pub train: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RunConfig {
    pub work_dir: PathBuf,
    pub paths: Paths,
    pub simulator: GeneratorConfig,
    pub n_regions: usize,
    pub kmeans_max_iter: usize,
    /// Region bounding box `[xmin, ymin, xmax, ymax]`; the simulator box when absent.
    pub bbox: Option<[f64; 4]>,
    /// Speed class boundaries; clustered from measured entity speeds when absent.
    pub speed_boundaries: Option<Vec<f64>>,
    pub u_in: usize,
    pub u_out: usize,
    pub train_fraction: f64,
    pub adjacency_mode: AdjacencyMode,
    pub hops: HopsOptions,
    /// One model per distinct K when true, else one `single_k`-layer model.
    pub per_k: bool,
    pub single_k: usize,
    pub model: ModelOptions,
    pub train: TrainConfig,
    pub seeds: Seeds,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            work_dir: "run".into(),
            paths: Paths::default(),
            simulator: GeneratorConfig {
                bbox: [0.0, 0.0, 1000.0, 1000.0],
                populations: vec![
                    PopulationConfig {
                        count: 200,
                        speed: 1.0,
                    },
                    PopulationConfig {
                        count: 200,
                        speed: 3.0,
                    },
                ],
                horizon_s: 200_000.0,
                sample_period_s: 60.0,
                region_attraction: vec![1.0, 2.0, 1.0, 3.0, 1.0, 2.0],
                seed: 0,
                attractors: None,
                day_period_s: 28_800.0,
                seasonal_amplitude: 0.5,
                dwell_mean_s: 300.0,
            },
            n_regions: 6,
            kmeans_max_iter: 100,
            bbox: None,
            speed_boundaries: None,
            u_in: 6,
            u_out: 6,
            train_fraction: 0.8,
            adjacency_mode: AdjacencyMode::SharedBorders,
            hops: HopsOptions::default(),
            per_k: true,
            single_k: 1,
            model: ModelOptions::default(),
            train: TrainConfig::default(),
            seeds: Seeds::default(),
        }
    }
}

fn config_error(key: impl Into<String>, reason: impl std::fmt::Display) -> CliError {
    CliError::config("config", format!("`{}`: {reason}", key.into()))
}

/// Sets `path` (dot separated, numeric segments index arrays) in `root`.
/// The key must already exist.
fn set_path(root: &mut Value, path: &str, value: Value) -> Result<(), CliError> {
    let mut cur = root;
    for seg in path.split('.') {
        cur = match cur {
            Value::Object(map) => map
                .get_mut(seg)
                .ok_or_else(|| config_error(path, "unknown config key"))?,
            Value::Array(items) => {
                let i: usize = seg
                    .parse()
                    .map_err(|_| config_error(path, format!("`{seg}` is not an array index")))?;
                let len = items.len();
                items
                    .get_mut(i)
                    .ok_or_else(|| config_error(path, format!("index {i} out of range ({len} items)")))?
            }
            _ => return Err(config_error(path, "unknown config key")),
        };
    }
    *cur = value;
    Ok(())
}

fn parse_override(arg: &str) -> Result<(&str, Value), CliError> {
    let (key, raw) = arg
        .split_once('=')
        .ok_or_else(|| config_error(arg, "override must look like key=value"))?;
    let value = serde_json::from_str(raw).unwrap_or_else(|_| Value::String(raw.to_string()));
    Ok((key.trim(), value))
}

impl RunConfig {
    /// Defaults, then the optional file, then `--set` overrides, then `--seed`.
    pub fn load(
        file: Option<&Path>,
        overrides: &[String],
        seed: Option<u64>,
    ) -> Result<RunConfig, CliError> {
        let base: RunConfig = match file {
            Some(path) => {
                let text = std::fs::read_to_string(path).map_err(|e| {
                    CliError::missing("config", format!("cannot read {}: {e}", path.display()))
                })?;
                let de = &mut serde_json::Deserializer::from_str(&text);
                serde_path_to_error::deserialize(de).map_err(|e| {
                    CliError::config(
                        "config",
                        format!("{}: `{}`: {}", path.display(), e.path(), e.inner()),
                    )
                })?
            }
            None => RunConfig::default(),
        };
        let mut value = serde_json::to_value(&base).expect("config serializes");
        for arg in overrides {
            let (key, v) = parse_override(arg)?;
            set_path(&mut value, key, v)?;
        }
        let mut cfg: RunConfig = serde_path_to_error::deserialize(value)
            .map_err(|e| config_error(e.path().to_string(), e.inner()))?;
        if let Some(s) = seed {
            cfg.seeds = Seeds {
                simulate: s,
                regions: s,
                model: s,
                train: s,
            };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.n_regions < 2 {
            return Err(config_error("n_regions", "must be at least 2"));
        }
        if self.kmeans_max_iter == 0 {
            return Err(config_error("kmeans_max_iter", "must be at least 1"));
        }
        if self.u_in == 0 {
            return Err(config_error("u_in", "must be at least 1"));
        }
        if self.u_out == 0 {
            return Err(config_error("u_out", "must be at least 1"));
        }
        if !(self.train_fraction > 0.0 && self.train_fraction < 1.0) {
            return Err(config_error("train_fraction", "must lie in (0, 1)"));
        }
        if self.single_k == 0 {
            return Err(config_error("single_k", "must be at least 1"));
        }
        if self.model.gcn_hidden == 0 {
            return Err(config_error("model.gcn_hidden", "must be at least 1"));
        }
        if self.model.lstm_hidden == 0 {
            return Err(config_error("model.lstm_hidden", "must be at least 1"));
        }
        if let Some(b) = &self.speed_boundaries {
            if b.iter().any(|v| !v.is_finite()) || b.windows(2).any(|w| w[1] <= w[0]) {
                return Err(config_error("speed_boundaries", "must be finite and strictly increasing"));
            }
        }
        self.train.validate().map_err(|e| match e {
            west_core::training::TrainError::InvalidConfig { key, reason } => {
                config_error(format!("train.{key}"), reason)
            }
            other => config_error("train", other),
        })?;
        Ok(())
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.work_dir.join(p)
        }
    }

    pub fn checkpoint_path(&self, k: usize) -> PathBuf {
        self.resolve(&self.paths.checkpoints).join(format!("model_k{k}.json"))
    }

    pub fn history_path(&self, k: usize) -> PathBuf {
        self.resolve(&self.paths.reports).join(format!("history_k{k}.csv"))
    }

    pub fn report_path(&self, name: &str) -> PathBuf {
        self.resolve(&self.paths.reports).join(name)
    }

    /// Number of distinct simulator speeds.
    pub fn n_speed_classes(&self) -> usize {
        let mut speeds: Vec<f64> = self.simulator.populations.iter().map(|p| p.speed).collect();
        speeds.sort_by(f64::total_cmp);
        speeds.dedup();
        speeds.len()
    }
}
