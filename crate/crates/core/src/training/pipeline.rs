use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::trainer::{predict_dataset, train_logged, AccessLog, TrainHistory};
use super::{compute_metrics, MetricsReport, TrainConfig, TrainError};
use crate::geom::{Point, Region, WeightedAdjacency};
use crate::graph::{chrono_split, renormalize, window_dataset, Scaler, Scaling, Split, SplitPlan};
use crate::mobility::{
    adjustable_hops, aggregate_traffic, HopsOptions, HopsResult, TrafficSeries, TrajectoryPoint,
};
use crate::model::{Checkpoint, WestConfig};
use crate::tensor::Tensor;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub u_in: usize,
    pub u_out: usize,
    pub train_fraction: f64,
    /// Architecture template; `n_regions` and `k_layers` are set per group.
    pub model: WestConfig,
    pub train: TrainConfig,
    #[serde(default)]
    pub hops: HopsOptions,
    /// `None` trains one model per distinct hop count. `Some(k)` trains a
    /// single `k`-layer model on the combined traffic.
    #[serde(default)]
    pub single_k: Option<usize>,
    #[serde(default)]
    pub t_start: Option<f64>,
    #[serde(default)]
    pub t_end: Option<f64>,
}

/// Traffic of the entities whose population maps to one hop count.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupSeries {
    pub k: usize,
    pub populations: Vec<usize>,
    pub series: TrafficSeries,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PreparedGroups {
    pub hops: HopsResult,
    pub groups: Vec<GroupSeries>,
    /// Combined traffic of every classified entity.
    pub total: TrafficSeries,
}

#[derive(Debug, Clone)]
pub struct GroupResult {
    pub k: usize,
    pub populations: Vec<usize>,
    pub checkpoint: Checkpoint,
    pub history: TrainHistory,
    pub metrics: MetricsReport,
    pub access: AccessLog,
    pub plan: SplitPlan,
    /// Test predictions and targets in counts, one `regions x u_out` per window.
    pub predictions: Vec<Tensor>,
    pub truth: Vec<Tensor>,
}

#[derive(Debug, Clone)]
pub struct PipelineResult {
    pub hops: HopsResult,
    pub groups: Vec<GroupResult>,
    /// Summed group predictions against total traffic.
    pub aggregate: MetricsReport,
    pub test_starts: Vec<usize>,
    pub predictions: Vec<Tensor>,
    pub truth: Vec<Tensor>,
}

fn time_span(traj: &[TrajectoryPoint]) -> (f64, f64) {
    traj.iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), p| (lo.min(p.t), hi.max(p.t)))
}

/// Runs the hop policy and counts traffic separately for each hop-count group.
/// `assignment` maps entity id to population index; unassigned entities are ignored.
pub fn prepare_groups(
    trajectories: &[TrajectoryPoint],
    regions: &[Region],
    assignment: &BTreeMap<u64, usize>,
    speeds: &[f64],
    cfg: &PipelineConfig,
) -> Result<PreparedGroups, TrainError> {
    let centers: Vec<Point> = regions.iter().map(|r| r.center).collect();
    let hops = adjustable_hops(speeds, &centers, cfg.u_out, cfg.hops)?;
    if let Some((&id, &pop)) = assignment.iter().find(|(_, &p)| p >= speeds.len()) {
        return Err(TrainError::InvalidConfig {
            key: "populations",
            reason: format!("entity {id} belongs to population {pop} with no speed"),
        });
    }
    let (lo, hi) = time_span(trajectories);
    let t_start = cfg.t_start.unwrap_or(lo);
    let t_end = cfg.t_end.unwrap_or(hi);

    let mut by_k: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    match cfg.single_k {
        Some(k) => {
            by_k.insert(k, (0..speeds.len()).collect());
        }
        None => {
            for (pop, &k) in hops.k.iter().enumerate() {
                by_k.entry(k).or_default().push(pop);
            }
        }
    }

    let count = |pops: &BTreeSet<usize>| -> Result<TrafficSeries, TrainError> {
        let traj: Vec<TrajectoryPoint> = trajectories
            .iter()
            .filter(|p| assignment.get(&p.entity_id).is_some_and(|q| pops.contains(q)))
            .copied()
            .collect();
        Ok(aggregate_traffic(&traj, regions, hops.t_window, t_start, t_end)?)
    };
    let mut groups = Vec::new();
    for (k, pops) in by_k {
        let series = count(&pops.iter().copied().collect())?;
        groups.push(GroupSeries {
            k,
            populations: pops,
            series,
        });
    }
    let total = count(&(0..speeds.len()).collect())?;
    Ok(PreparedGroups {
        hops,
        groups,
        total,
    })
}

fn group_split(series: &TrafficSeries, cfg: &PipelineConfig) -> Result<(Scaler, Split), TrainError> {
    let ds = window_dataset(
        series,
        cfg.u_in,
        cfg.u_out,
        Scaling::FitOnTrain {
            train_fraction: cfg.train_fraction,
        },
    )?;
    let split = chrono_split(&ds, cfg.train_fraction)?;
    Ok((ds.scaler, split))
}

fn fit_one(
    group: &GroupSeries,
    a_norm: &crate::graph::RenormalizedAdjacency,
    cfg: &PipelineConfig,
) -> Result<GroupResult, TrainError> {
    let (scaler, split) = group_split(&group.series, cfg)?;
    let model = WestConfig {
        n_regions: group.series.n_regions,
        u_in: cfg.u_in,
        u_out: cfg.u_out,
        k_layers: group.k,
        ..cfg.model.clone()
    };
    let mut access = AccessLog::new();
    let (params, history) = train_logged(&model, &split.train, a_norm, &cfg.train, &mut access)?;
    let predictions: Vec<Tensor> = predict_dataset(&model, a_norm, &params, &split.test, &mut access)?
        .iter()
        .map(|p| scaler.inverse_tensor(p))
        .collect();
    let starts: Vec<usize> = split.test.windows.iter().map(|w| w.start).collect();
    let truth = raw_targets(&group.series, &starts, cfg);
    let mut metrics = compute_metrics(&predictions, &truth)?;
    metrics.k = Some(group.k);
    metrics.window_hash = Some(split.test.content_hash());
    Ok(GroupResult {
        k: group.k,
        populations: group.populations.clone(),
        checkpoint: Checkpoint::new(model, a_norm.clone(), params, scaler),
        history,
        metrics,
        access,
        plan: split.plan,
        predictions,
        truth,
    })
}

fn raw_targets(series: &TrafficSeries, starts: &[usize], cfg: &PipelineConfig) -> Vec<Tensor> {
    starts
        .iter()
        .map(|&s| {
            Tensor::from_fn(series.n_regions, cfg.u_out, |i, j| {
                series.get(s + cfg.u_in + j, i) as f64
            })
        })
        .collect()
}

/// Trains every group (concurrently) against one adjacency and sums their
/// test predictions.
pub fn fit_groups(
    prepared: &PreparedGroups,
    adjacency: &WeightedAdjacency,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, TrainError> {
    let a_norm = renormalize(adjacency)?;
    let results: Vec<Result<GroupResult, TrainError>> = std::thread::scope(|s| {
        let handles: Vec<_> = prepared
            .groups
            .iter()
            .map(|g| s.spawn(|| fit_one(g, &a_norm, cfg)))
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("training thread panicked"))
            .collect()
    });
    let groups = results.into_iter().collect::<Result<Vec<_>, _>>()?;

    let first = groups.first().ok_or(TrainError::InvalidConfig {
        key: "populations",
        reason: "no population groups".into(),
    })?;
    let test_starts: Vec<usize> = (first.plan.boundary..first.plan.boundary + first.truth.len()).collect();
    let parts: Vec<&[Tensor]> = groups.iter().map(|g| g.predictions.as_slice()).collect();
    let (aggregate, predictions, truth) = aggregate_metrics(prepared, &parts, &test_starts, cfg)?;
    Ok(PipelineResult {
        hops: prepared.hops.clone(),
        groups,
        aggregate,
        test_starts,
        predictions,
        truth,
    })
}

fn aggregate_metrics(
    prepared: &PreparedGroups,
    parts: &[&[Tensor]],
    test_starts: &[usize],
    cfg: &PipelineConfig,
) -> Result<(MetricsReport, Vec<Tensor>, Vec<Tensor>), TrainError> {
    let mut predictions = parts[0].to_vec();
    for part in &parts[1..] {
        for (acc, p) in predictions.iter_mut().zip(part.iter()) {
            acc.add_assign(p);
        }
    }
    let truth = raw_targets(&prepared.total, test_starts, cfg);
    let mut aggregate = compute_metrics(&predictions, &truth)?;
    let total_ds = window_dataset(&prepared.total, cfg.u_in, cfg.u_out, Scaling::None)?;
    aggregate.window_hash = Some(chrono_split(&total_ds, cfg.train_fraction)?.test.content_hash());
    Ok((aggregate, predictions, truth))
}

/// Test metrics of trained group models.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub groups: Vec<MetricsReport>,
    pub aggregate: MetricsReport,
    pub test_starts: Vec<usize>,
}

fn checkpoint_for<'a>(k: usize, checkpoints: &'a [Checkpoint]) -> Result<&'a Checkpoint, TrainError> {
    checkpoints
        .iter()
        .find(|c| c.config.k_layers == k)
        .ok_or(TrainError::InvalidConfig {
            key: "checkpoints",
            reason: format!("no model with k_layers = {k}"),
        })
}

/// Re-evaluates saved group models on the same test windows used in training.
pub fn evaluate_checkpoints(
    prepared: &PreparedGroups,
    checkpoints: &[Checkpoint],
    cfg: &PipelineConfig,
) -> Result<Evaluation, TrainError> {
    let mut groups = Vec::new();
    let mut parts = Vec::new();
    let mut test_starts = Vec::new();
    for g in &prepared.groups {
        let ck = checkpoint_for(g.k, checkpoints)?;
        let (_, split) = group_split(&g.series, cfg)?;
        let mut log = AccessLog::new();
        let pred: Vec<Tensor> =
            predict_dataset(&ck.config, &ck.adjacency, &ck.params, &split.test, &mut log)?
                .iter()
                .map(|p| ck.scaler.inverse_tensor(p))
                .collect();
        test_starts = split.test.windows.iter().map(|w| w.start).collect();
        let truth = raw_targets(&g.series, &test_starts, cfg);
        let mut m = compute_metrics(&pred, &truth)?;
        m.k = Some(g.k);
        m.window_hash = Some(split.test.content_hash());
        groups.push(m);
        parts.push(pred);
    }
    if parts.is_empty() {
        return Err(TrainError::InvalidConfig {
            key: "populations",
            reason: "no population groups".into(),
        });
    }
    let refs: Vec<&[Tensor]> = parts.iter().map(Vec::as_slice).collect();
    let (aggregate, _, _) = aggregate_metrics(prepared, &refs, &test_starts, cfg)?;
    Ok(Evaluation {
        groups,
        aggregate,
        test_starts,
    })
}

/// Forecast of the next `u_out` steps after the end of each group series,
/// summed over groups, in counts (`regions x u_out`).
pub fn forecast_latest(
    prepared: &PreparedGroups,
    checkpoints: &[Checkpoint],
) -> Result<Tensor, TrainError> {
    let mut total: Option<Tensor> = None;
    for g in &prepared.groups {
        let ck = checkpoint_for(g.k, checkpoints)?;
        let (n, u_in) = (g.series.n_regions, ck.config.u_in);
        let steps = g.series.steps();
        if steps < u_in {
            return Err(crate::graph::GraphError::TooShort {
                steps,
                needed: u_in,
            }
            .into());
        }
        let x = Tensor::from_fn(n, u_in, |i, j| g.series.get(steps - u_in + j, i) as f64);
        let y = ck.predict_counts(&x)?;
        match &mut total {
            Some(t) => t.add_assign(&y),
            None => total = Some(y),
        }
    }
    total.ok_or(TrainError::InvalidConfig {
        key: "populations",
        reason: "no population groups".into(),
    })
}

pub fn per_k_pipeline(
    trajectories: &[TrajectoryPoint],
    regions: &[Region],
    assignment: &BTreeMap<u64, usize>,
    speeds: &[f64],
    adjacency: &WeightedAdjacency,
    cfg: &PipelineConfig,
) -> Result<PipelineResult, TrainError> {
    let prepared = prepare_groups(trajectories, regions, assignment, speeds, cfg)?;
    fit_groups(&prepared, adjacency, cfg)
}
