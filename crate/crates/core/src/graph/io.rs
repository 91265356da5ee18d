//! Dataset directories: `meta.json` with shapes, scaler and window starts,
//! `windows.csv` with one window per line (x row-major, then y row-major).

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{DTDGDataset, SampleWindow, Scaler};
use crate::geom::io::fmt_f64;
use crate::tensor::Tensor;
use crate::Error;

#[derive(Debug, Serialize, Deserialize)]
struct Meta {
    n_regions: usize,
    u_in: usize,
    u_out: usize,
    t_window: f64,
    scaler: Scaler,
    starts: Vec<usize>,
}

pub fn save_dataset(dir: &Path, ds: &DTDGDataset) -> Result<(), Error> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let meta = Meta {
        n_regions: ds.n_regions,
        u_in: ds.u_in,
        u_out: ds.u_out,
        t_window: ds.t_window,
        scaler: ds.scaler,
        starts: ds.windows.iter().map(|w| w.start).collect(),
    };
    let meta_path = dir.join("meta.json");
    let text = serde_json::to_string_pretty(&meta).map_err(|e| Error::format(&meta_path, e.to_string()))?;
    fs::write(&meta_path, text).map_err(|e| Error::io(&meta_path, e))?;

    let mut out = String::new();
    for w in &ds.windows {
        let line: Vec<String> = w.x.data().iter().chain(w.y.data()).map(|&v| fmt_f64(v)).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    let path = dir.join("windows.csv");
    fs::write(&path, out).map_err(|e| Error::io(&path, e))
}

pub fn load_dataset(dir: &Path) -> Result<DTDGDataset, Error> {
    let meta_path = dir.join("meta.json");
    let text = fs::read_to_string(&meta_path).map_err(|e| Error::io(&meta_path, e))?;
    let meta: Meta = serde_json::from_str(&text).map_err(|e| Error::format(&meta_path, e.to_string()))?;

    let path = dir.join("windows.csv");
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    let (n, u_in, u_out) = (meta.n_regions, meta.u_in, meta.u_out);
    let width = n * (u_in + u_out);
    let lines: Vec<&str> = text.lines().filter(|l| !l.trim().is_empty()).collect();
    if lines.len() != meta.starts.len() {
        return Err(Error::format(
            &path,
            format!("{} windows listed in meta.json, {} lines found", meta.starts.len(), lines.len()),
        ));
    }
    let mut windows = Vec::with_capacity(lines.len());
    for (k, (line, &start)) in lines.iter().zip(&meta.starts).enumerate() {
        let vals = line
            .split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| Error::format(&path, format!("line {}: {e}", k + 1)))?;
        if vals.len() != width {
            return Err(Error::format(
                &path,
                format!("line {}: expected {width} values, found {}", k + 1, vals.len()),
            ));
        }
        let (x, y) = vals.split_at(n * u_in);
        windows.push(SampleWindow {
            start,
            x: Tensor::from_vec(n, u_in, x.to_vec())?,
            y: Tensor::from_vec(n, u_out, y.to_vec())?,
        });
    }
    Ok(DTDGDataset {
        windows,
        n_regions: n,
        u_in,
        u_out,
        t_window: meta.t_window,
        scaler: meta.scaler,
    })
}
