use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::GraphError;
use crate::mobility::TrafficSeries;
use crate::tensor::Tensor;

/// Global min-max scaling to `[0, 1]`. A zero range maps everything to 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scaler {
    pub min: f64,
    pub max: f64,
}

impl Scaler {
    pub fn identity() -> Self {
        Self { min: 0.0, max: 1.0 }
    }

    pub fn fit(values: impl IntoIterator<Item = f64>) -> Self {
        let (min, max) = values
            .into_iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
        if min.is_finite() {
            Self { min, max }
        } else {
            Self::identity()
        }
    }

    fn range(&self) -> f64 {
        let r = self.max - self.min;
        if r > 0.0 {
            r
        } else {
            1.0
        }
    }

    pub fn scale(&self, v: f64) -> f64 {
        (v - self.min) / self.range()
    }

    pub fn inverse(&self, v: f64) -> f64 {
        v * self.range() + self.min
    }

    pub fn scale_tensor(&self, t: &Tensor) -> Tensor {
        t.map(|v| self.scale(v))
    }

    pub fn inverse_tensor(&self, t: &Tensor) -> Tensor {
        t.map(|v| self.inverse(v))
    }
}

/// One training example: `x` holds steps `start .. start + u_in` and `y` the
/// following `u_out` steps, one row per region, oldest column first.
#[derive(Debug, Clone, PartialEq)]
pub struct SampleWindow {
    pub start: usize,
    pub x: Tensor,
    pub y: Tensor,
}

impl SampleWindow {
    /// Time-step indices covered by the features.
    pub fn x_steps(&self) -> std::ops::Range<usize> {
        self.start..self.start + self.x.cols()
    }

    /// Time-step indices covered by the targets.
    pub fn y_steps(&self) -> std::ops::Range<usize> {
        let s = self.start + self.x.cols();
        s..s + self.y.cols()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DTDGDataset {
    pub windows: Vec<SampleWindow>,
    pub n_regions: usize,
    pub u_in: usize,
    pub u_out: usize,
    pub t_window: f64,
    pub scaler: Scaler,
}

impl DTDGDataset {
    pub fn len(&self) -> usize {
        self.windows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.windows.is_empty()
    }

    fn with_windows(&self, windows: Vec<SampleWindow>) -> Self {
        Self {
            windows,
            n_regions: self.n_regions,
            u_in: self.u_in,
            u_out: self.u_out,
            t_window: self.t_window,
            scaler: self.scaler,
        }
    }

    /// SHA-256 over window positions and the exact bits of every value.
    pub fn content_hash(&self) -> String {
        let mut h = Sha256::new();
        for w in &self.windows {
            h.update((w.start as u64).to_le_bytes());
            for v in w.x.data().iter().chain(w.y.data()) {
                h.update(v.to_bits().to_le_bytes());
            }
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Scaling {
    None,
    /// Fit min-max statistics on the steps the training split will see.
    FitOnTrain { train_fraction: f64 },
}

/// Where a chronological split falls for `n_windows` windows.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitPlan {
    /// Index of the first test window (`floor(fraction * n_windows)`).
    pub boundary: usize,
    /// Train windows kept after removing those whose targets reach the
    /// first test window's features.
    pub train_kept: usize,
}

pub fn split_plan(
    n_windows: usize,
    train_fraction: f64,
    u_in: usize,
    u_out: usize,
) -> Result<SplitPlan, GraphError> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(GraphError::InvalidArgument(format!(
            "train_fraction must lie in (0, 1), got {train_fraction}"
        )));
    }
    let boundary = (train_fraction * n_windows as f64).floor() as usize;
    // window m's targets end at m + u_in + u_out - 1; they must stay below `boundary`
    let train_kept = boundary.saturating_sub(u_in + u_out - 1);
    Ok(SplitPlan {
        boundary,
        train_kept,
    })
}

/// Stride-1 windows over the series: `T - u_in - u_out + 1` of them.
pub fn window_dataset(
    series: &TrafficSeries,
    u_in: usize,
    u_out: usize,
    scaling: Scaling,
) -> Result<DTDGDataset, GraphError> {
    if u_in == 0 || u_out == 0 {
        return Err(GraphError::InvalidArgument(
            "u_in and u_out must be at least 1".into(),
        ));
    }
    let steps = series.steps();
    let needed = u_in + u_out;
    if steps < needed {
        return Err(GraphError::TooShort { steps, needed });
    }
    let n_windows = steps - needed + 1;
    let n = series.n_regions;
    let counts = series.to_tensor();

    let scaler = match scaling {
        Scaling::None => Scaler::identity(),
        Scaling::FitOnTrain { train_fraction } => {
            let plan = split_plan(n_windows, train_fraction, u_in, u_out)?;
            let fit_steps = if plan.train_kept > 0 {
                plan.train_kept + needed - 1
            } else {
                plan.boundary.max(1)
            };
            Scaler::fit((0..fit_steps).flat_map(|m| counts.row(m).to_vec()))
        }
    };

    let windows = (0..n_windows)
        .map(|m| SampleWindow {
            start: m,
            x: Tensor::from_fn(n, u_in, |r, c| scaler.scale(counts[(m + c, r)])),
            y: Tensor::from_fn(n, u_out, |r, c| scaler.scale(counts[(m + u_in + c, r)])),
        })
        .collect();
    Ok(DTDGDataset {
        windows,
        n_regions: n,
        u_in,
        u_out,
        t_window: series.t_window,
        scaler,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: DTDGDataset,
    pub test: DTDGDataset,
    pub plan: SplitPlan,
}

impl Split {
    /// Train windows removed because their targets overlap the test features.
    pub fn dropped(&self) -> usize {
        self.plan.boundary - self.plan.train_kept
    }
}

/// First `floor(fraction * len)` windows form the training side, minus the
/// windows straddling the boundary; the rest form the test side.
pub fn chrono_split(ds: &DTDGDataset, train_fraction: f64) -> Result<Split, GraphError> {
    let plan = split_plan(ds.len(), train_fraction, ds.u_in, ds.u_out)?;
    if plan.boundary >= ds.len() {
        return Err(GraphError::EmptySplit("test"));
    }
    if plan.train_kept == 0 {
        return Err(GraphError::EmptySplit("train"));
    }
    Ok(Split {
        train: ds.with_windows(ds.windows[..plan.train_kept].to_vec()),
        test: ds.with_windows(ds.windows[plan.boundary..].to_vec()),
        plan,
    })
}
