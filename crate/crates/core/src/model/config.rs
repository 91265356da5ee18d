use serde::{Deserialize, Serialize};

use super::ModelError;

/// How the look-back block reaches the LSTM.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EncoderMode {
    /// The encoder runs on each look-back step (an `n x 1` signal) with shared
    /// weights; the LSTM consumes the `u_in` encoded states.
    #[default]
    PerStep,
    /// One encoder pass over the whole `n x u_in` block; the LSTM consumes its
    /// `gcn_hidden` output columns.
    Block,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeadMode {
    /// One `lstm_hidden x u_out` map shared by all nodes.
    #[default]
    PerNode,
    /// A single map from all final hidden states to all outputs.
    Global,
}

fn default_gcn_hidden() -> usize {
    32
}

fn default_lstm_hidden() -> usize {
    64
}

fn default_true() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WestConfig {
    pub n_regions: usize,
    pub u_in: usize,
    pub u_out: usize,
    pub k_layers: usize,
    #[serde(default = "default_gcn_hidden")]
    pub gcn_hidden: usize,
    #[serde(default = "default_lstm_hidden")]
    pub lstm_hidden: usize,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub encoder_mode: EncoderMode,
    #[serde(default)]
    pub head: HeadMode,
    #[serde(default = "default_true")]
    pub use_bias: bool,
}

impl WestConfig {
    pub fn new(n_regions: usize, u_in: usize, u_out: usize, k_layers: usize) -> Self {
        Self {
            n_regions,
            u_in,
            u_out,
            k_layers,
            gcn_hidden: default_gcn_hidden(),
            lstm_hidden: default_lstm_hidden(),
            seed: 0,
            encoder_mode: EncoderMode::default(),
            head: HeadMode::default(),
            use_bias: true,
        }
    }

    pub fn validate(&self) -> Result<(), ModelError> {
        let fields = [
            ("n_regions", self.n_regions),
            ("u_in", self.u_in),
            ("u_out", self.u_out),
            ("k_layers", self.k_layers),
            ("gcn_hidden", self.gcn_hidden),
            ("lstm_hidden", self.lstm_hidden),
        ];
        for (key, v) in fields {
            if v == 0 {
                return Err(ModelError::InvalidConfig {
                    key,
                    reason: "must be at least 1".into(),
                });
            }
        }
        Ok(())
    }

    /// Width of the first encoder layer's input.
    pub(crate) fn encoder_input(&self) -> usize {
        match self.encoder_mode {
            EncoderMode::PerStep => 1,
            EncoderMode::Block => self.u_in,
        }
    }

    /// Width of each LSTM input step.
    pub(crate) fn lstm_input(&self) -> usize {
        match self.encoder_mode {
            EncoderMode::PerStep => self.gcn_hidden,
            EncoderMode::Block => 1,
        }
    }
}
