//! CSV and JSON persistence for trajectories, traffic series and generator configs.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{GeneratorConfig, TrafficSeries, TrajectoryPoint};
use crate::geom::Point;
use crate::Error;

#[derive(Serialize, Deserialize)]
struct TrajectoryRow {
    entity_id: u64,
    t: f64,
    x: f64,
    y: f64,
}

/// Writes `entity_id,t,x,y` rows sorted by `(entity_id, t)`.
pub fn write_trajectories<W: std::io::Write>(
    writer: W,
    points: &[TrajectoryPoint],
) -> Result<(), csv::Error> {
    let mut sorted: Vec<&TrajectoryPoint> = points.iter().collect();
    sorted.sort_by(|a, b| a.entity_id.cmp(&b.entity_id).then(a.t.total_cmp(&b.t)));
    let mut w = csv::Writer::from_writer(writer);
    for p in sorted {
        w.serialize(TrajectoryRow {
            entity_id: p.entity_id,
            t: p.t,
            x: p.pos.x,
            y: p.pos.y,
        })?;
    }
    if points.is_empty() {
        w.write_record(["entity_id", "t", "x", "y"])?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_trajectories<R: std::io::Read>(reader: R) -> Result<Vec<TrajectoryPoint>, csv::Error> {
    let mut r = csv::Reader::from_reader(reader);
    r.deserialize::<TrajectoryRow>()
        .map(|row| {
            row.map(|row| TrajectoryPoint {
                entity_id: row.entity_id,
                t: row.t,
                pos: Point::new(row.x, row.y),
            })
        })
        .collect()
}

pub fn save_trajectories(path: &Path, points: &[TrajectoryPoint]) -> Result<(), Error> {
    let file = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    write_trajectories(std::io::BufWriter::new(file), points)
        .map_err(|e| Error::format(path, e.to_string()))
}

pub fn load_trajectories(path: &Path) -> Result<Vec<TrajectoryPoint>, Error> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let r = std::io::BufReader::new(file);
    let mut rdr = csv::Reader::from_reader(r);
    let headers = rdr
        .headers()
        .map_err(|e| Error::format(path, e.to_string()))?
        .clone();
    if headers.iter().collect::<Vec<_>>() != ["entity_id", "t", "x", "y"] {
        return Err(Error::format(
            path,
            format!("expected header entity_id,t,x,y, found {}", headers.iter().collect::<Vec<_>>().join(",")),
        ));
    }
    let mut out = Vec::new();
    for row in rdr.deserialize::<TrajectoryRow>() {
        let row = row.map_err(|e| Error::format(path, e.to_string()))?;
        out.push(TrajectoryPoint {
            entity_id: row.entity_id,
            t: row.t,
            pos: Point::new(row.x, row.y),
        });
    }
    Ok(out)
}

/// `step,region_0,...,region_{n-1}` with integer counts.
pub fn traffic_to_csv(series: &TrafficSeries) -> String {
    let mut out = String::from("step");
    for n in 0..series.n_regions {
        out.push_str(&format!(",region_{n}"));
    }
    out.push('\n');
    for (m, row) in series.counts().iter().enumerate() {
        out.push_str(&m.to_string());
        for c in row {
            out.push(',');
            out.push_str(&c.to_string());
        }
        out.push('\n');
    }
    out
}

pub fn traffic_from_csv(text: &str, t_window: f64, t_start: f64) -> Result<TrafficSeries, String> {
    let mut r = csv::Reader::from_reader(text.as_bytes());
    let headers = r.headers().map_err(|e| e.to_string())?.clone();
    let n = headers.len().saturating_sub(1);
    if headers.get(0) != Some("step") {
        return Err("first column must be `step`".into());
    }
    let mut counts = Vec::new();
    for rec in r.records() {
        let rec = rec.map_err(|e| e.to_string())?;
        let row = rec
            .iter()
            .skip(1)
            .map(|v| v.trim().parse::<u32>().map_err(|e| e.to_string()))
            .collect::<Result<Vec<_>, _>>()?;
        counts.push(row);
    }
    TrafficSeries::new(n, t_window, t_start, counts).map_err(|e| e.to_string())
}

pub fn load_generator_config(path: &Path) -> Result<GeneratorConfig, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::format(path, e.to_string()))
}
