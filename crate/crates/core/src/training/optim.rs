use serde::{Deserialize, Serialize};

use crate::autodiff::Parameter;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Optimizer {
    Sgd,
    Adam { beta1: f64, beta2: f64, eps: f64 },
}

impl Default for Optimizer {
    fn default() -> Self {
        Optimizer::Adam {
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
        }
    }
}

/// Per-parameter optimizer moments.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    kind: Optimizer,
    m: Vec<Tensor>,
    v: Vec<Tensor>,
    t: i32,
}

impl OptimizerState {
    pub fn new(kind: Optimizer, params: &[Parameter]) -> Self {
        let zeros = || params.iter().map(|p| Tensor::zeros(p.value.rows(), p.value.cols())).collect();
        Self {
            kind,
            m: zeros(),
            v: zeros(),
            t: 0,
        }
    }

    /// Applies one update from the accumulated gradients, then clears them.
    pub fn step(&mut self, params: &mut [Parameter], lr: f64) {
        self.t += 1;
        for (k, p) in params.iter_mut().enumerate() {
            let g = p.grad().clone();
            match self.kind {
                Optimizer::Sgd => {
                    for (w, gi) in p.value.data_mut().iter_mut().zip(g.data()) {
                        *w -= lr * gi;
                    }
                }
                Optimizer::Adam { beta1, beta2, eps } => {
                    let c1 = 1.0 - beta1.powi(self.t);
                    let c2 = 1.0 - beta2.powi(self.t);
                    let m = self.m[k].data_mut();
                    let v = self.v[k].data_mut();
                    for (idx, w) in p.value.data_mut().iter_mut().enumerate() {
                        let gi = g.data()[idx];
                        m[idx] = beta1 * m[idx] + (1.0 - beta1) * gi;
                        v[idx] = beta2 * v[idx] + (1.0 - beta2) * gi * gi;
                        let mh = m[idx] / c1;
                        let vh = v[idx] / c2;
                        *w -= lr * mh / (vh.sqrt() + eps);
                    }
                }
            }
            p.zero_grad();
        }
    }
}
