use serde::{Deserialize, Serialize};

use super::GraphError;
use crate::geom::WeightedAdjacency;
use crate::tensor::Tensor;

/// `D^-1/2 (A + I) D^-1/2`, with `D` the degree matrix of `A + I`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct RenormalizedAdjacency {
    matrix: Tensor,
}

impl RenormalizedAdjacency {
    pub fn n(&self) -> usize {
        self.matrix.rows()
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    /// Reorders nodes: entry `(i, j)` of the result is entry `(perm[i], perm[j])`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            matrix: Tensor::from_fn(self.n(), self.n(), |i, j| self.matrix[(perm[i], perm[j])]),
        }
    }

    /// Wraps an operator that is already renormalized, e.g. one read from a checkpoint.
    pub fn from_matrix(matrix: Tensor) -> Result<Self, GraphError> {
        if matrix.rows() != matrix.cols() || !matrix.is_finite() || !matrix.is_symmetric(1e-12) {
            return Err(GraphError::NotNormalized(
                "operator must be a finite symmetric square matrix".into(),
            ));
        }
        Ok(Self { matrix })
    }
}

pub fn renormalize(a: &WeightedAdjacency) -> Result<RenormalizedAdjacency, GraphError> {
    let m = a.matrix();
    if m.max() > 1.0 + 1e-12 {
        return Err(GraphError::NotNormalized(format!(
            "largest entry is {}",
            m.max()
        )));
    }
    let n = a.n();
    let mut hat = m.clone();
    for i in 0..n {
        hat[(i, i)] += 1.0;
    }
    // self-loops keep every degree >= 1
    let deg: Vec<f64> = (0..n).map(|i| hat.row(i).iter().sum()).collect();
    let matrix = Tensor::from_fn(n, n, |i, j| hat[(i, j)] / (deg[i] * deg[j]).sqrt());
    Ok(RenormalizedAdjacency { matrix })
}
