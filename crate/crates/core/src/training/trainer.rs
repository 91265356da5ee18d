use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{compute_metrics, MetricsReport, OptimizerState, TrainConfig, TrainError};
use crate::autodiff::Tape;
use crate::graph::{DTDGDataset, RenormalizedAdjacency, SampleWindow};
use crate::model::{
    forward_batch, init_params, stack_node_major, unstack_node_major, WestConfig, WestParams,
};
use crate::tensor::Tensor;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Phase {
    Fit,
    Validate,
    Predict,
}

/// One window read: the phase, the window start, and the last time-step
/// whose value was touched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WindowRead {
    pub phase: Phase,
    pub start: usize,
    pub last_step: usize,
}

/// Record of every window the training and prediction code touched.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct AccessLog {
    reads: Vec<WindowRead>,
}

impl AccessLog {
    pub fn new() -> Self {
        Self::default()
    }

    fn record(&mut self, phase: Phase, w: &SampleWindow) {
        self.reads.push(WindowRead {
            phase,
            start: w.start,
            last_step: w.y_steps().end - 1,
        });
    }

    pub fn reads(&self) -> &[WindowRead] {
        &self.reads
    }

    pub fn phase(&self, phase: Phase) -> impl Iterator<Item = &WindowRead> {
        self.reads.iter().filter(move |r| r.phase == phase)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_loss: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct TrainHistory {
    pub epochs: Vec<EpochRecord>,
    /// Epoch whose parameters were kept.
    pub best_epoch: usize,
    pub stopped_early: bool,
}

impl TrainHistory {
    /// `epoch,train_loss,val_loss`; the last column is empty without validation.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("epoch,train_loss,val_loss\n");
        for r in &self.epochs {
            let val = r.val_loss.map(|v| format!("{v:?}")).unwrap_or_default();
            out.push_str(&format!("{},{:?},{val}\n", r.epoch, r.train_loss));
        }
        out
    }

    pub fn final_train_loss(&self) -> Option<f64> {
        self.epochs.last().map(|r| r.train_loss)
    }
}

fn batch_loss(
    config: &WestConfig,
    a_norm: &RenormalizedAdjacency,
    params: &mut WestParams,
    batch: &[&SampleWindow],
    grad: bool,
) -> Result<f64, TrainError> {
    let mut tape = Tape::new();
    let vars = tape.params(params.as_slice());
    let xs: Vec<&Tensor> = batch.iter().map(|w| &w.x).collect();
    let ys: Vec<&Tensor> = batch.iter().map(|w| &w.y).collect();
    let pred = forward_batch(&mut tape, &vars, config, a_norm, &xs)?;
    let target = tape.constant(stack_node_major(&ys));
    let loss = tape.mse_loss(pred, target)?;
    let value = tape.value(loss)[(0, 0)];
    if grad && value.is_finite() {
        tape.backward(loss, params.as_mut_slice())?;
    }
    Ok(value)
}

fn mean_loss(
    config: &WestConfig,
    a_norm: &RenormalizedAdjacency,
    params: &mut WestParams,
    windows: &[&SampleWindow],
    chunk: usize,
) -> Result<f64, TrainError> {
    let mut total = 0.0;
    for b in windows.chunks(chunk) {
        total += batch_loss(config, a_norm, params, b, false)? * b.len() as f64;
    }
    Ok(total / windows.len() as f64)
}

pub fn train(
    config: &WestConfig,
    dataset: &DTDGDataset,
    a_norm: &RenormalizedAdjacency,
    tcfg: &TrainConfig,
) -> Result<(WestParams, TrainHistory), TrainError> {
    train_logged(config, dataset, a_norm, tcfg, &mut AccessLog::new())
}

/// Minimizes scaled-unit MSE over `dataset`, which must hold training windows
/// only. The trailing `validation_fraction` of windows drives early stopping;
/// the parameters of the best epoch are returned.
pub fn train_logged(
    config: &WestConfig,
    dataset: &DTDGDataset,
    a_norm: &RenormalizedAdjacency,
    tcfg: &TrainConfig,
    log: &mut AccessLog,
) -> Result<(WestParams, TrainHistory), TrainError> {
    tcfg.validate()?;
    config.validate()?;
    if dataset.is_empty() {
        return Err(TrainError::Graph(crate::graph::GraphError::EmptySplit("train")));
    }
    if dataset.n_regions != config.n_regions
        || dataset.u_in != config.u_in
        || dataset.u_out != config.u_out
    {
        return Err(TrainError::ShapeMismatch(format!(
            "dataset is {} regions, {} -> {} steps; model expects {}, {} -> {}",
            dataset.n_regions,
            dataset.u_in,
            dataset.u_out,
            config.n_regions,
            config.u_in,
            config.u_out
        )));
    }
    let n_val = (tcfg.validation_fraction * dataset.len() as f64).floor() as usize;
    let n_val = if n_val == dataset.len() { 0 } else { n_val };
    let (fit, val) = dataset.windows.split_at(dataset.len() - n_val);

    let mut params = init_params(config, config.seed)?;
    let mut opt = OptimizerState::new(tcfg.optimizer, params.as_slice());
    let mut rng = ChaCha8Rng::seed_from_u64(tcfg.seed);
    let mut order: Vec<usize> = (0..fit.len()).collect();

    let mut history = TrainHistory::default();
    let mut best: Option<(f64, WestParams)> = None;
    let mut since_best = 0;

    for epoch in 1..=tcfg.epochs {
        if tcfg.shuffle {
            order.shuffle(&mut rng);
        }
        let mut total = 0.0;
        for idx in order.chunks(tcfg.batch_size) {
            let batch: Vec<&SampleWindow> = idx.iter().map(|&i| &fit[i]).collect();
            for w in &batch {
                log.record(super::Phase::Fit, w);
            }
            let loss = batch_loss(config, a_norm, &mut params, &batch, true)?;
            if !loss.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            opt.step(params.as_mut_slice(), tcfg.learning_rate);
            total += loss * batch.len() as f64;
        }
        let train_loss = total / fit.len() as f64;

        let val_loss = if val.is_empty() {
            None
        } else {
            let refs: Vec<&SampleWindow> = val.iter().collect();
            for w in &refs {
                log.record(super::Phase::Validate, w);
            }
            let v = mean_loss(config, a_norm, &mut params, &refs, tcfg.batch_size.max(64))?;
            if !v.is_finite() {
                return Err(TrainError::Diverged { epoch });
            }
            Some(v)
        };
        history.epochs.push(EpochRecord {
            epoch,
            train_loss,
            val_loss,
        });

        let score = val_loss.unwrap_or(train_loss);
        if best.as_ref().map_or(true, |(b, _)| score < *b) {
            best = Some((score, params.clone()));
            history.best_epoch = epoch;
            since_best = 0;
        } else {
            since_best += 1;
            if tcfg.early_stop_patience > 0 && since_best >= tcfg.early_stop_patience {
                history.stopped_early = true;
                break;
            }
        }
    }
    let mut params = best.map(|(_, p)| p).expect("at least one epoch ran");
    params.zero_grad();
    Ok((params, history))
}

/// Scaled predictions for every window, in order.
pub fn predict_dataset(
    config: &WestConfig,
    a_norm: &RenormalizedAdjacency,
    params: &WestParams,
    dataset: &DTDGDataset,
    log: &mut AccessLog,
) -> Result<Vec<Tensor>, TrainError> {
    let mut out = Vec::with_capacity(dataset.len());
    for chunk in dataset.windows.chunks(128) {
        let mut tape = Tape::new();
        let vars = tape.params(params.as_slice());
        let xs: Vec<&Tensor> = chunk
            .iter()
            .map(|w| {
                log.record(Phase::Predict, w);
                &w.x
            })
            .collect();
        let pred = forward_batch(&mut tape, &vars, config, a_norm, &xs)?;
        out.extend(unstack_node_major(tape.value(pred), chunk.len()));
    }
    Ok(out)
}

/// Metrics in count units over `dataset`, tagged with its content hash.
pub fn evaluate(
    config: &WestConfig,
    a_norm: &RenormalizedAdjacency,
    params: &WestParams,
    dataset: &DTDGDataset,
    log: &mut AccessLog,
) -> Result<MetricsReport, TrainError> {
    let pred: Vec<Tensor> = predict_dataset(config, a_norm, params, dataset, log)?
        .iter()
        .map(|p| dataset.scaler.inverse_tensor(p))
        .collect();
    let truth: Vec<Tensor> = dataset
        .windows
        .iter()
        .map(|w| dataset.scaler.inverse_tensor(&w.y))
        .collect();
    let mut report = compute_metrics(&pred, &truth)?;
    report.k = Some(config.k_layers);
    report.window_hash = Some(dataset.content_hash());
    Ok(report)
}
