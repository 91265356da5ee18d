//! Regions as JSON, adjacency matrices as CSV.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{BBox, Point, Region, WeightedAdjacency};
use crate::tensor::Tensor;
use crate::Error;

#[derive(Debug, Serialize, Deserialize)]
struct RegionDoc {
    index: usize,
    center: Point,
    vertices: Vec<Point>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RegionsDoc {
    bbox: [f64; 4],
    regions: Vec<RegionDoc>,
}

pub fn regions_to_json(bbox: &BBox, regions: &[Region]) -> String {
    let doc = RegionsDoc {
        bbox: bbox.to_array(),
        regions: regions
            .iter()
            .map(|r| RegionDoc {
                index: r.index,
                center: r.center,
                vertices: r.vertices().to_vec(),
            })
            .collect(),
    };
    serde_json::to_string_pretty(&doc).expect("regions serialize")
}

/// Parses and validates a regions document. Regions are returned sorted by
/// index; indices must be exactly `0..n`.
pub fn regions_from_json(text: &str) -> Result<(BBox, Vec<Region>), String> {
    let doc: RegionsDoc = serde_json::from_str(text).map_err(|e| e.to_string())?;
    let [x0, y0, x1, y1] = doc.bbox;
    let bbox = BBox::new(x0, y0, x1, y1).map_err(|e| e.to_string())?;
    let mut regions = doc
        .regions
        .into_iter()
        .map(|r| Region::new(r.index, r.center, r.vertices).map_err(|e| e.to_string()))
        .collect::<Result<Vec<_>, _>>()?;
    regions.sort_by_key(|r| r.index);
    for (i, r) in regions.iter().enumerate() {
        if r.index != i {
            return Err(format!("region indices must be 0..{}, found {}", regions.len(), r.index));
        }
    }
    Ok((bbox, regions))
}

pub fn save_regions(path: &Path, bbox: &BBox, regions: &[Region]) -> Result<(), Error> {
    fs::write(path, regions_to_json(bbox, regions)).map_err(|e| Error::io(path, e))
}

pub fn load_regions(path: &Path) -> Result<(BBox, Vec<Region>), Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    regions_from_json(&text).map_err(|m| Error::format(path, m))
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn adjacency_to_csv(a: &WeightedAdjacency) -> String {
    let n = a.n();
    let mut out = (0..n).map(|i| i.to_string()).collect::<Vec<_>>().join(",");
    out.push('\n');
    for i in 0..n {
        let row: Vec<String> = (0..n).map(|j| fmt_f64(a.get(i, j))).collect();
        out.push_str(&row.join(","));
        out.push('\n');
    }
    out
}

pub fn adjacency_from_csv(text: &str) -> Result<WeightedAdjacency, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty adjacency file")?;
    let n = header.split(',').count();
    let mut data = Vec::with_capacity(n * n);
    let mut rows = 0;
    for line in lines {
        let vals = line
            .split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("row {rows}: {e}")))
            .collect::<Result<Vec<_>, _>>()?;
        if vals.len() != n {
            return Err(format!("row {rows} has {} values, expected {n}", vals.len()));
        }
        data.extend(vals);
        rows += 1;
    }
    if rows != n {
        return Err(format!("expected {n} rows, found {rows}"));
    }
    let m = Tensor::from_vec(n, n, data).map_err(|e| e.to_string())?;
    WeightedAdjacency::new(m).map_err(|e| e.to_string())
}

pub fn save_adjacency(path: &Path, a: &WeightedAdjacency) -> Result<(), Error> {
    fs::write(path, adjacency_to_csv(a)).map_err(|e| Error::io(path, e))
}

pub fn load_adjacency(path: &Path) -> Result<WeightedAdjacency, Error> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    adjacency_from_csv(&text).map_err(|m| Error::format(path, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::voronoi_partition;

    #[test]
    fn regions_round_trip() {
        let bbox = BBox::new(0.0, 0.0, 10.0, 10.0).unwrap();
        let centers = [Point::new(2.0, 3.0), Point::new(7.5, 6.1), Point::new(4.0, 8.0)];
        let regions = voronoi_partition(&centers, &bbox).unwrap();
        let text = regions_to_json(&bbox, &regions);
        let v: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(v["bbox"], serde_json::json!([0.0, 0.0, 10.0, 10.0]));
        assert_eq!(v["regions"][1]["center"], serde_json::json!([7.5, 6.1]));
        let (b2, r2) = regions_from_json(&text).unwrap();
        assert_eq!(b2, bbox);
        assert_eq!(r2, regions);
    }

    #[test]
    fn regions_reject_gaps_in_indices() {
        let text = r#"{"bbox":[0,0,2,1],"regions":[
            {"index":0,"center":[0.5,0.5],"vertices":[[0,0],[1,0],[1,1],[0,1]]},
            {"index":2,"center":[1.5,0.5],"vertices":[[1,0],[2,0],[2,1],[1,1]]}]}"#;
        assert!(regions_from_json(text).is_err());
    }

    #[test]
    fn adjacency_csv_round_trip_is_exact() {
        let m = Tensor::from_rows(&[[1.0, 0.1 + 0.2], [0.1 + 0.2, 1.0 / 3.0]]);
        let a = WeightedAdjacency::new(m).unwrap();
        let text = adjacency_to_csv(&a);
        assert!(text.starts_with("0,1\n"));
        assert!(text.contains("3.0000000000000004e-1"));
        assert_eq!(adjacency_from_csv(&text).unwrap(), a);
        assert!(adjacency_from_csv("0,1\n1,2\n").is_err());
    }
}
