use rand::distributions::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{HeadMode, ModelError, WestConfig};
use crate::autodiff::Parameter;
use crate::tensor::Tensor;

const GATES: [&str; 4] = ["f", "i", "c", "o"];

/// Named shapes in layout order. The boolean marks bias vectors.
pub fn param_shapes(config: &WestConfig) -> Vec<(String, (usize, usize), bool)> {
    let (gh, lh) = (config.gcn_hidden, config.lstm_hidden);
    let mut out = Vec::new();
    for l in 0..config.k_layers {
        let rows = if l == 0 { config.encoder_input() } else { gh };
        out.push((format!("gcn_w{l}"), (rows, gh), false));
    }
    for g in GATES {
        out.push((format!("lstm_w_{g}"), (config.lstm_input(), lh), false));
    }
    for g in GATES {
        out.push((format!("lstm_u_{g}"), (lh, lh), false));
    }
    if config.use_bias {
        for g in GATES {
            out.push((format!("lstm_b_{g}"), (1, lh), true));
        }
    }
    let (din, dout) = match config.head {
        HeadMode::PerNode => (lh, config.u_out),
        HeadMode::Global => (config.n_regions * lh, config.n_regions * config.u_out),
    };
    out.push(("dense_w".into(), (din, dout), false));
    out.push(("dense_b".into(), (1, dout), true));
    out
}

/// All trainable tensors of one model, in the order given by [`param_shapes`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WestParams {
    params: Vec<Parameter>,
}

/// Positions of each parameter group within [`WestParams`].
#[derive(Debug, Clone)]
pub(crate) struct Slots {
    pub gcn: Vec<usize>,
    pub w: [usize; 4],
    pub u: [usize; 4],
    pub b: Option<[usize; 4]>,
    pub dense_w: usize,
    pub dense_b: usize,
}

impl Slots {
    pub fn new(config: &WestConfig) -> Self {
        let k = config.k_layers;
        let b = config.use_bias.then(|| [k + 8, k + 9, k + 10, k + 11]);
        let dense_w = if config.use_bias { k + 12 } else { k + 8 };
        Self {
            gcn: (0..k).collect(),
            w: [k, k + 1, k + 2, k + 3],
            u: [k + 4, k + 5, k + 6, k + 7],
            b,
            dense_w,
            dense_b: dense_w + 1,
        }
    }
}

impl WestParams {
    /// Wraps parameters after checking names and shapes against `config`.
    pub fn from_parts(config: &WestConfig, params: Vec<Parameter>) -> Result<Self, ModelError> {
        let shapes = param_shapes(config);
        if shapes.len() != params.len() {
            return Err(ModelError::ParamMismatch(format!(
                "expected {} tensors, found {}",
                shapes.len(),
                params.len()
            )));
        }
        for ((name, shape, _), p) in shapes.iter().zip(&params) {
            if &p.name != name || p.value.shape() != *shape {
                return Err(ModelError::ParamMismatch(format!(
                    "expected {name} {shape:?}, found {} {:?}",
                    p.name,
                    p.value.shape()
                )));
            }
            if !p.value.is_finite() {
                return Err(ModelError::ParamMismatch(format!("{name} has non-finite entries")));
            }
        }
        let mut params = params;
        params.iter_mut().for_each(Parameter::zero_grad);
        Ok(Self { params })
    }

    pub fn as_slice(&self) -> &[Parameter] {
        &self.params
    }

    pub fn as_mut_slice(&mut self) -> &mut [Parameter] {
        &mut self.params
    }

    pub fn get(&self, name: &str) -> Option<&Parameter> {
        self.params.iter().find(|p| p.name == name)
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Parameter> {
        self.params.iter_mut().find(|p| p.name == name)
    }

    /// Total number of scalar parameters.
    pub fn count(&self) -> usize {
        self.params.iter().map(|p| p.value.len()).sum()
    }

    pub fn zero_grad(&mut self) {
        self.params.iter_mut().for_each(Parameter::zero_grad);
    }
}

/// Glorot-uniform weights, zero biases.
pub fn init_params(config: &WestConfig, seed: u64) -> Result<WestParams, ModelError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let params = param_shapes(config)
        .into_iter()
        .map(|(name, (r, c), bias)| {
            let value = if bias {
                Tensor::zeros(r, c)
            } else {
                let a = (6.0 / (r + c) as f64).sqrt();
                let dist = Uniform::new_inclusive(-a, a);
                Tensor::from_fn(r, c, |_, _| dist.sample(&mut rng))
            };
            Parameter::new(name, value)
        })
        .collect();
    Ok(WestParams { params })
}
