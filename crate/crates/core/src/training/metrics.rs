use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ErrorStats {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
}

impl ErrorStats {
    fn from_sums(abs: f64, sq: f64, count: usize) -> Self {
        let n = count.max(1) as f64;
        let mse = sq / n;
        Self {
            mae: abs / n,
            mse,
            rmse: mse.sqrt(),
        }
    }
}

/// Errors over every (sample, region, step) triple, plus per-region and
/// per-step marginals.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub mae: f64,
    pub mse: f64,
    pub rmse: f64,
    pub per_region: Vec<ErrorStats>,
    pub per_step: Vec<ErrorStats>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub window_hash: Option<String>,
}

impl MetricsReport {
    pub fn headline(&self) -> ErrorStats {
        ErrorStats {
            mae: self.mae,
            mse: self.mse,
            rmse: self.rmse,
        }
    }
}

/// Each tensor is one sample, `regions x steps`, in count units.
pub fn compute_metrics(pred: &[Tensor], truth: &[Tensor]) -> Result<MetricsReport, TrainError> {
    if pred.len() != truth.len() {
        return Err(TrainError::ShapeMismatch(format!(
            "{} predictions for {} targets",
            pred.len(),
            truth.len()
        )));
    }
    let shape = truth.first().map_or((0, 0), Tensor::shape);
    if let Some((p, t)) = pred
        .iter()
        .zip(truth)
        .find(|(p, t)| p.shape() != shape || t.shape() != shape)
    {
        return Err(TrainError::ShapeMismatch(format!(
            "prediction {:?} vs target {:?}, expected {shape:?}",
            p.shape(),
            t.shape()
        )));
    }
    let (rows, cols) = shape;
    let mut region = vec![(0.0, 0.0); rows];
    let mut step = vec![(0.0, 0.0); cols];
    let (mut abs, mut sq) = (0.0, 0.0);
    for (p, t) in pred.iter().zip(truth) {
        for i in 0..rows {
            for j in 0..cols {
                let e = p[(i, j)] - t[(i, j)];
                abs += e.abs();
                sq += e * e;
                region[i].0 += e.abs();
                region[i].1 += e * e;
                step[j].0 += e.abs();
                step[j].1 += e * e;
            }
        }
    }
    let samples = pred.len();
    let total = ErrorStats::from_sums(abs, sq, samples * rows * cols);
    Ok(MetricsReport {
        mae: total.mae,
        mse: total.mse,
        rmse: total.rmse,
        per_region: region
            .into_iter()
            .map(|(a, s)| ErrorStats::from_sums(a, s, samples * cols))
            .collect(),
        per_step: step
            .into_iter()
            .map(|(a, s)| ErrorStats::from_sums(a, s, samples * rows))
            .collect(),
        k: None,
        window_hash: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction() {
        let t = vec![Tensor::from_rows(&[[1.0, 2.0], [3.0, 4.0]])];
        let r = compute_metrics(&t, &t).unwrap();
        assert_eq!((r.mae, r.mse, r.rmse), (0.0, 0.0, 0.0));
    }

    #[test]
    fn hand_example() {
        let r = compute_metrics(
            &[Tensor::from_rows(&[[0.0, 0.0]])],
            &[Tensor::from_rows(&[[1.0, 3.0]])],
        )
        .unwrap();
        assert_eq!(r.mae, 2.0);
        assert_eq!(r.mse, 5.0);
        assert!((r.rmse - 2.2360679774997896).abs() < 1e-15);
        assert_eq!(r.per_step[1].mse, 9.0);
        assert_eq!(r.per_region[0].mae, 2.0);
    }

    #[test]
    fn marginals_average_to_headline() {
        let pred: Vec<Tensor> = (0..4)
            .map(|s| Tensor::from_fn(3, 2, |i, j| ((s * 5 + i * 3 + j) % 7) as f64))
            .collect();
        let truth: Vec<Tensor> = (0..4)
            .map(|s| Tensor::from_fn(3, 2, |i, j| ((s + i + 2 * j) % 4) as f64))
            .collect();
        let r = compute_metrics(&pred, &truth).unwrap();
        let mean_region: f64 = r.per_region.iter().map(|e| e.mse).sum::<f64>() / 3.0;
        let mean_step: f64 = r.per_step.iter().map(|e| e.mae).sum::<f64>() / 2.0;
        assert!((mean_region - r.mse).abs() < 1e-12);
        assert!((mean_step - r.mae).abs() < 1e-12);
        assert!(r.mae <= r.rmse);
    }

    #[test]
    fn shape_errors() {
        let a = Tensor::zeros(2, 2);
        let b = Tensor::zeros(2, 3);
        assert!(compute_metrics(&[a.clone()], &[b]).is_err());
        assert!(compute_metrics(&[a.clone(), a.clone()], &[a]).is_err());
    }
}
