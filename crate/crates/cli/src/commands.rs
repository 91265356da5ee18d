use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::json;
use west_core::geom::io::{adjacency_to_csv, fmt_f64, load_adjacency, load_regions, save_adjacency, save_regions};
use west_core::geom::{
    kmeans_centers, normalize_adjacency_weights, shared_borders_adjacency, voronoi_partition, BBox,
    Point, Region, WeightedAdjacency,
};
use west_core::graph::{
    baseline_adjacency_binary, baseline_adjacency_centers, baseline_adjacency_traffic, split_plan,
};
use west_core::mobility::io::{load_trajectories, save_trajectories};
use west_core::mobility::{classify_populations, synth_generate, TrafficSeries, TrajectoryPoint};
use west_core::model::{load_checkpoint, save_checkpoint, Checkpoint, WestConfig};
use west_core::training::{
    evaluate_checkpoints, fit_groups, forecast_latest, prepare_groups, MetricsReport,
    PipelineConfig, PreparedGroups,
};

use crate::config::{AdjacencyMode, RunConfig};
use crate::error::{CliError, Stage};

fn require(stage: &'static str, path: &Path) -> Result<(), CliError> {
    if path.exists() {
        Ok(())
    } else {
        Err(CliError::missing(
            stage,
            format!("missing artifact {}", path.display()),
        ))
    }
}

fn write_file(stage: &'static str, path: &Path, contents: &str) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir)
            .map_err(|e| CliError::new(stage, 1, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, contents).map_err(|e| CliError::new(stage, 1, format!("{}: {e}", path.display())))
}

fn ensure_parent(stage: &'static str, path: &Path) -> Result<(), CliError> {
    match path.parent() {
        Some(dir) => fs::create_dir_all(dir)
            .map_err(|e| CliError::new(stage, 1, format!("{}: {e}", dir.display()))),
        None => Ok(()),
    }
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("report serializes");
    s.push('\n');
    s
}

pub fn config_init(cfg: &RunConfig, out: Option<&Path>) -> Result<(), CliError> {
    let text = to_json(cfg);
    match out {
        Some(path) => {
            write_file("config", path, &text)?;
            println!("wrote {}", path.display());
        }
        None => print!("{text}"),
    }
    Ok(())
}

pub fn simulate(cfg: &RunConfig) -> Result<(), CliError> {
    const STAGE: &str = "simulate";
    cfg.simulator.validate().map_err(|e| CliError::config(STAGE, e.to_string()))?;
    let out = synth_generate(&cfg.simulator, cfg.seeds.simulate).stage(STAGE)?;
    let path = cfg.resolve(&cfg.paths.trajectories);
    ensure_parent(STAGE, &path)?;
    save_trajectories(&path, &out.points).stage(STAGE)?;
    println!(
        "entities {} points {} -> {}",
        out.labels.len(),
        out.points.len(),
        path.display()
    );
    for (i, p) in cfg.simulator.populations.iter().enumerate() {
        let n = out.labels.values().filter(|&&l| l == i).count();
        println!("population {i}: {n} entities, speed {}", p.speed);
    }
    Ok(())
}

fn read_trajectories(stage: &'static str, cfg: &RunConfig) -> Result<Vec<TrajectoryPoint>, CliError> {
    let path = cfg.resolve(&cfg.paths.trajectories);
    require(stage, &path)?;
    load_trajectories(&path).stage(stage)
}

fn read_regions(stage: &'static str, cfg: &RunConfig) -> Result<(BBox, Vec<Region>), CliError> {
    let path = cfg.resolve(&cfg.paths.regions);
    require(stage, &path)?;
    load_regions(&path).stage(stage)
}

pub fn regions(cfg: &RunConfig) -> Result<(), CliError> {
    const STAGE: &str = "regions";
    let traj = read_trajectories(STAGE, cfg)?;
    let [x0, y0, x1, y1] = cfg.bbox.unwrap_or(cfg.simulator.bbox);
    let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| CliError::config(STAGE, format!("`bbox`: {e}")))?;
    let points: Vec<Point> = traj.iter().map(|p| p.pos).collect();
    let centers = kmeans_centers(&points, cfg.n_regions, cfg.seeds.regions, cfg.kmeans_max_iter)
        .stage(STAGE)?;
    let regions = voronoi_partition(&centers, &bbox).stage(STAGE)?;
    let path = cfg.resolve(&cfg.paths.regions);
    ensure_parent(STAGE, &path)?;
    save_regions(&path, &bbox, &regions).stage(STAGE)?;
    println!("{} regions -> {}", regions.len(), path.display());
    for r in &regions {
        println!(
            "region {}: center ({:.3}, {:.3}) area {:.3}",
            r.index,
            r.center.x,
            r.center.y,
            r.area()
        );
    }
    Ok(())
}

/// Midpoints between 1-D k-means centers of the measured entity speeds, one
/// cluster per simulator population.
fn measured_boundaries(
    stage: &'static str,
    cfg: &RunConfig,
    traj: &[TrajectoryPoint],
) -> Result<Vec<f64>, CliError> {
    let k = cfg.n_speed_classes();
    if k < 2 {
        return Ok(Vec::new());
    }
    let c = classify_populations(traj, &[]).stage(stage)?;
    let speeds: Vec<Point> = c.mean_speed.values().map(|&v| Point::new(v, 0.0)).collect();
    let mut centers: Vec<f64> = kmeans_centers(&speeds, k, cfg.seeds.regions, cfg.kmeans_max_iter)
        .stage(stage)?
        .into_iter()
        .map(|p| p.x)
        .collect();
    centers.sort_by(f64::total_cmp);
    Ok(centers.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect())
}

/// Entity-to-population assignment and measured population speeds.
fn classify(
    stage: &'static str,
    cfg: &RunConfig,
    traj: &[TrajectoryPoint],
) -> Result<(BTreeMap<u64, usize>, Vec<f64>, Vec<usize>), CliError> {
    let boundaries = match &cfg.speed_boundaries {
        Some(b) => b.clone(),
        None => measured_boundaries(stage, cfg, traj)?,
    };
    let c = classify_populations(traj, &boundaries).stage(stage)?;
    let n = boundaries.len() + 1;
    let mut speeds = Vec::with_capacity(n);
    for (i, s) in c.population_speeds(n).into_iter().enumerate() {
        speeds.push(s.ok_or_else(|| {
            CliError::config(
                stage,
                format!("`speed_boundaries`: speed class {i} has no entities"),
            )
        })?);
    }
    let mut sizes = vec![0; n];
    for &p in c.population.values() {
        sizes[p] += 1;
    }
    Ok((c.population, speeds, sizes))
}

fn pipeline_config(cfg: &RunConfig) -> PipelineConfig {
    let mut model = WestConfig::new(cfg.n_regions, cfg.u_in, cfg.u_out, 1);
    model.gcn_hidden = cfg.model.gcn_hidden;
    model.lstm_hidden = cfg.model.lstm_hidden;
    model.encoder_mode = cfg.model.encoder_mode;
    model.head = cfg.model.head;
    model.use_bias = cfg.model.use_bias;
    model.seed = cfg.seeds.model;
    let mut train = cfg.train.clone();
    train.seed = cfg.seeds.train;
    PipelineConfig {
        u_in: cfg.u_in,
        u_out: cfg.u_out,
        train_fraction: cfg.train_fraction,
        model,
        train,
        hops: cfg.hops,
        single_k: (!cfg.per_k).then_some(cfg.single_k),
        t_start: None,
        t_end: None,
    }
}

struct Prepared {
    bbox: BBox,
    regions: Vec<Region>,
    groups: PreparedGroups,
    speeds: Vec<f64>,
    sizes: Vec<usize>,
}

fn prepare(stage: &'static str, cfg: &RunConfig) -> Result<Prepared, CliError> {
    let traj = read_trajectories(stage, cfg)?;
    let (bbox, regions) = read_regions(stage, cfg)?;
    let (assignment, speeds, sizes) = classify(stage, cfg, &traj)?;
    let groups =
        prepare_groups(&traj, &regions, &assignment, &speeds, &pipeline_config(cfg)).stage(stage)?;
    Ok(Prepared {
        bbox,
        regions,
        groups,
        speeds,
        sizes,
    })
}

fn build_adjacency(
    stage: &'static str,
    mode: AdjacencyMode,
    cfg: &RunConfig,
    bbox: &BBox,
    regions: &[Region],
    total: Option<&TrafficSeries>,
) -> Result<WeightedAdjacency, CliError> {
    let tol = bbox.border_tolerance();
    match mode {
        AdjacencyMode::SharedBorders => {
            let raw = shared_borders_adjacency(regions, tol).stage(stage)?;
            normalize_adjacency_weights(&raw).stage(stage)
        }
        AdjacencyMode::Binary => baseline_adjacency_binary(regions, tol).stage(stage),
        AdjacencyMode::Centers => {
            let centers: Vec<Point> = regions.iter().map(|r| r.center).collect();
            baseline_adjacency_centers(&centers).stage(stage)
        }
        AdjacencyMode::Traffic => {
            let total = total.expect("traffic mode needs a series");
            let needed = cfg.u_in + cfg.u_out;
            if total.steps() < needed {
                return Err(CliError::config(
                    stage,
                    format!("series has {} steps, need at least {needed}", total.steps()),
                ));
            }
            let plan = split_plan(total.steps() - needed + 1, cfg.train_fraction, cfg.u_in, cfg.u_out)
                .stage(stage)?;
            let steps = (plan.train_kept + needed - 1).max(2);
            baseline_adjacency_traffic(&total.truncated(steps)).stage(stage)
        }
    }
}

fn mode_adjacency(
    stage: &'static str,
    mode: AdjacencyMode,
    cfg: &RunConfig,
    p: &Prepared,
) -> Result<WeightedAdjacency, CliError> {
    build_adjacency(stage, mode, cfg, &p.bbox, &p.regions, Some(&p.groups.total))
}

pub fn adjacency(cfg: &RunConfig) -> Result<(), CliError> {
    const STAGE: &str = "adjacency";
    let a = if cfg.adjacency_mode == AdjacencyMode::Traffic {
        let p = prepare(STAGE, cfg)?;
        mode_adjacency(STAGE, cfg.adjacency_mode, cfg, &p)?
    } else {
        let (bbox, regions) = read_regions(STAGE, cfg)?;
        build_adjacency(STAGE, cfg.adjacency_mode, cfg, &bbox, &regions, None)?
    };
    let path = cfg.resolve(&cfg.paths.adjacency);
    ensure_parent(STAGE, &path)?;
    save_adjacency(&path, &a).stage(STAGE)?;
    println!("{} adjacency ({}x{}) -> {}", cfg.adjacency_mode.name(), a.n(), a.n(), path.display());
    print!("{}", adjacency_to_csv(&a));
    Ok(())
}

pub fn hops(cfg: &RunConfig) -> Result<(), CliError> {
    const STAGE: &str = "hops";
    let p = prepare(STAGE, cfg)?;
    let h = &p.groups.hops;
    println!("D={} t_window={} K={:?}", h.d, h.t_window, h.k);
    let mut pops = Vec::new();
    for (i, (&speed, &k)) in p.speeds.iter().zip(&h.k).enumerate() {
        println!("population {i}: speed {speed} entities {} K {k}", p.sizes[i]);
        pops.push(json!({"index": i, "speed": speed, "entities": p.sizes[i], "k": k}));
    }
    let doc = json!({
        "d": h.d,
        "min_speed": h.min_speed,
        "t_window": h.t_window,
        "k": h.k,
        "u": cfg.u_out,
        "hops_window": cfg.hops.hops_window,
        "distance_mode": cfg.hops.distance_mode,
        "populations": pops,
        "steps": p.groups.total.steps(),
    });
    let path = cfg.resolve(&cfg.paths.hops);
    write_file(STAGE, &path, &to_json(&doc))?;
    println!("-> {}", path.display());
    Ok(())
}

fn print_metrics(label: &str, m: &MetricsReport) {
    println!(
        "{label}: mae {} mse {} rmse {}",
        fmt_f64(m.mae),
        fmt_f64(m.mse),
        fmt_f64(m.rmse)
    );
}

pub fn train(cfg: &RunConfig) -> Result<(), CliError> {
    const STAGE: &str = "train";
    let adj_path = cfg.resolve(&cfg.paths.adjacency);
    require(STAGE, &adj_path)?;
    let p = prepare(STAGE, cfg)?;
    let adjacency = load_adjacency(&adj_path).stage(STAGE)?;
    if adjacency.n() != p.regions.len() {
        return Err(CliError::config(
            STAGE,
            format!(
                "adjacency has {} nodes but there are {} regions",
                adjacency.n(),
                p.regions.len()
            ),
        ));
    }
    let result = fit_groups(&p.groups, &adjacency, &pipeline_config(cfg)).stage(STAGE)?;
    for g in &result.groups {
        let path = cfg.checkpoint_path(g.k);
        ensure_parent(STAGE, &path)?;
        save_checkpoint(&path, &g.checkpoint).stage(STAGE)?;
        write_file(STAGE, &cfg.history_path(g.k), &g.history.to_csv())?;
        println!(
            "K={} populations {:?}: {} epochs (best {}) -> {}",
            g.k,
            g.populations,
            g.history.epochs.len(),
            g.history.best_epoch,
            path.display()
        );
        print_metrics(&format!("  test K={}", g.k), &g.metrics);
    }
    print_metrics("aggregate", &result.aggregate);
    let report = json!({
        "adjacency_mode": cfg.adjacency_mode,
        "t_window": result.hops.t_window,
        "groups": result.groups.iter().map(|g| &g.metrics).collect::<Vec<_>>(),
        "aggregate": result.aggregate,
    });
    write_file(STAGE, &cfg.report_path("train_report.json"), &to_json(&report))?;
    Ok(())
}

fn read_checkpoints(
    stage: &'static str,
    cfg: &RunConfig,
    groups: &PreparedGroups,
) -> Result<Vec<Checkpoint>, CliError> {
    groups
        .groups
        .iter()
        .map(|g| {
            let path: PathBuf = cfg.checkpoint_path(g.k);
            require(stage, &path)?;
            load_checkpoint(&path).stage(stage)
        })
        .collect()
}

pub fn evaluate(cfg: &RunConfig) -> Result<(), CliError> {
    const STAGE: &str = "evaluate";
    let p = prepare(STAGE, cfg)?;
    let checkpoints = read_checkpoints(STAGE, cfg, &p.groups)?;
    let pcfg = pipeline_config(cfg);
    let mut modes = Vec::new();
    for mode in AdjacencyMode::ALL {
        let (source, groups, aggregate) = if mode == cfg.adjacency_mode {
            let ev = evaluate_checkpoints(&p.groups, &checkpoints, &pcfg).stage(STAGE)?;
            ("checkpoint", ev.groups, ev.aggregate)
        } else {
            let a = mode_adjacency(STAGE, mode, cfg, &p)?;
            let r = fit_groups(&p.groups, &a, &pcfg).stage(STAGE)?;
            let metrics = r.groups.into_iter().map(|g| g.metrics).collect();
            ("trained", metrics, r.aggregate)
        };
        print_metrics(mode.name(), &aggregate);
        modes.push(json!({
            "adjacency_mode": mode,
            "source": source,
            "window_hash": aggregate.window_hash,
            "aggregate": aggregate,
            "groups": groups,
        }));
    }
    let report = json!({ "configured": cfg.adjacency_mode, "modes": modes });
    let path = cfg.report_path("evaluate_report.json");
    write_file(STAGE, &path, &to_json(&report))?;
    println!("-> {}", path.display());
    Ok(())
}

pub fn predict(cfg: &RunConfig) -> Result<(), CliError> {
    const STAGE: &str = "predict";
    let p = prepare(STAGE, cfg)?;
    let checkpoints = read_checkpoints(STAGE, cfg, &p.groups)?;
    let y = forecast_latest(&p.groups, &checkpoints).stage(STAGE)?;
    if !y.is_finite() {
        return Err(CliError::new(STAGE, crate::error::NUMERIC, "forecast is not finite"));
    }
    let mut out = String::from("region");
    for j in 1..=y.cols() {
        out.push_str(&format!(",step_{j}"));
    }
    out.push('\n');
    for i in 0..y.rows() {
        out.push_str(&i.to_string());
        for j in 0..y.cols() {
            out.push(',');
            out.push_str(&fmt_f64(y[(i, j)]));
        }
        out.push('\n');
    }
    let path = cfg.resolve(&cfg.paths.predictions);
    write_file(STAGE, &path, &out)?;
    print!("{out}");
    println!("-> {}", path.display());
    Ok(())
}
