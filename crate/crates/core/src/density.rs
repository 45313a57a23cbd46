//! Gaussian kernel density profile and mode (peak) detection.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{quantile_type7, sample_std, sort_floats};

pub const GRID_POINTS: usize = 512;
pub const MIN_SAMPLES: usize = 10;
/// Modes at most this many grid cells apart are merged, keeping the higher one.
const MODE_MERGE_CELLS: usize = 2;
/// Maxima lower than this fraction of the tallest one are tail noise, not modes.
pub const MODE_MIN_RELATIVE_HEIGHT: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mode {
    pub location: f64,
    pub height: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DensityProfile {
    pub bandwidth: f64,
    pub grid: Vec<f64>,
    pub density: Vec<f64>,
    /// Sorted by descending height.
    pub modes: Vec<Mode>,
    /// Highest over second-highest mode height; `None` when unimodal.
    pub peak_ratio: Option<f64>,
}

/// Silverman's rule of thumb, `0.9 * min(sd, IQR / 1.34) * n^(-1/5)`.
/// Falls back to the standard deviation when the IQR is zero.
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let mut sorted = values.to_vec();
    sort_floats(&mut sorted);
    let sd = sample_std(values);
    let iqr = quantile_type7(&sorted, 0.75) - quantile_type7(&sorted, 0.25);
    let spread = if iqr > 0.0 { sd.min(iqr / 1.34) } else { sd };
    0.9 * spread * (values.len() as f64).powf(-0.2)
}

pub fn density_profile(values: &[f64]) -> Result<DensityProfile> {
    let n = values.len();
    if n < MIN_SAMPLES {
        return Err(Error::InsufficientData { needed: MIN_SAMPLES, got: n });
    }
    let h = silverman_bandwidth(values);
    if h.is_nan() || h <= 0.0 {
        return Err(Error::InvalidArgument("sample has zero spread".into()));
    }
    let (lo, hi) = values
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, u), &v| (l.min(v), u.max(v)));
    let (lo, hi) = (lo - 3.0 * h, hi + 3.0 * h);
    let step = (hi - lo) / (GRID_POINTS - 1) as f64;
    let grid: Vec<f64> = (0..GRID_POINTS).map(|i| lo + i as f64 * step).collect();

    let norm = 1.0 / (n as f64 * h * (2.0 * PI).sqrt());
    let mut density: Vec<f64> = grid
        .iter()
        .map(|&x| {
            values
                .iter()
                .map(|&v| {
                    let u = (x - v) / h;
                    (-0.5 * u * u).exp()
                })
                .sum::<f64>()
                * norm
        })
        .collect();

    // The grid truncates the kernel tails at 3h; rescale so the trapezoid
    // integral over the grid is exactly one.
    let area = trapezoid(&density, step);
    for d in &mut density {
        *d /= area;
    }

    let modes = find_modes(&grid, &density);
    let peak_ratio = if modes.len() >= 2 { Some(modes[0].height / modes[1].height) } else { None };
    Ok(DensityProfile { bandwidth: h, grid, density, modes, peak_ratio })
}

pub fn trapezoid(y: &[f64], step: f64) -> f64 {
    if y.len() < 2 {
        return 0.0;
    }
    let inner: f64 = y[1..y.len() - 1].iter().sum();
    step * (inner + 0.5 * (y[0] + y[y.len() - 1]))
}

fn find_modes(grid: &[f64], density: &[f64]) -> Vec<Mode> {
    let mut peaks: Vec<usize> = (1..density.len().saturating_sub(1))
        .filter(|&i| density[i] > density[i - 1] && density[i] > density[i + 1])
        .collect();

    // merge neighbours closer than MODE_MERGE_CELLS, keeping the taller peak
    let mut merged: Vec<usize> = Vec::with_capacity(peaks.len());
    for i in peaks.drain(..) {
        match merged.last_mut() {
            Some(prev) if i - *prev <= MODE_MERGE_CELLS => {
                if density[i] > density[*prev] {
                    *prev = i;
                }
            }
            _ => merged.push(i),
        }
    }

    let mut modes: Vec<Mode> = merged
        .into_iter()
        .map(|i| Mode { location: grid[i], height: density[i] })
        .collect();
    modes.sort_by(|a, b| b.height.total_cmp(&a.height));
    if let Some(top) = modes.first().map(|m| m.height) {
        modes.retain(|m| m.height >= MODE_MIN_RELATIVE_HEIGHT * top);
    }
    modes
}
