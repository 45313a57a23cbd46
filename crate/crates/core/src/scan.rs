//! Interval of plausible symmetry points and the most plausible point.
//!
//! A point `c` is plausible at level `alpha` when `Tn(c) < T(alpha)`. The
//! scan samples `Tn(c)` on an equispaced grid around the sample median,
//! widens the grid while the plausible region touches its boundary, then
//! bisects the two outermost crossing cells. `Tn(c)` is a step function with
//! jumps only at pairwise midpoints `(X_i + X_j)/2`, so reported endpoints
//! are accurate to the final bisection cell, not better.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::lookup;
use crate::error::{Error, Result};
use crate::numeric::{median_of_sorted, sample_std};
use crate::tn::TnEvaluator;

/// Bisection stops once the bracketing cell is at most `step / REFINE_DIVISOR`.
pub const REFINE_DIVISOR: f64 = 1024.0;
pub const MAX_BREAKPOINT_SAMPLE: usize = 2000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SpanSpec {
    /// Half-width `10 * safety * sd / sqrt(n)` around the median.
    Auto { safety: f64 },
    /// Fixed half-width around the median.
    HalfWidth(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    /// Number of grid points; rounded up to the next odd number so the
    /// median is itself a grid point.
    pub points: usize,
    pub span: SpanSpec,
    /// How many times the half-width may double while the plausible region
    /// still touches a grid boundary.
    pub max_expansions: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { points: 2001, span: SpanSpec::Auto { safety: 3.0 }, max_expansions: 6 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TnCurve {
    pub c_grid: Vec<f64>,
    /// `None` where the shifted sample had fewer than two nonzero values.
    pub tn_values: Vec<Option<f64>>,
    pub threshold: f64,
}

impl TnCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("c,tn\n");
        for (c, v) in self.c_grid.iter().zip(&self.tn_values) {
            match v {
                Some(v) => out.push_str(&format!("{c},{v}\n")),
                None => out.push_str(&format!("{c},\n")),
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymmetryResult {
    pub alpha: f64,
    pub threshold: f64,
    pub c_min: f64,
    pub c_max: f64,
    pub c_star: f64,
    pub tn_at_c_star: f64,
    pub tn_at_zero: Option<f64>,
    pub zero_symmetric: bool,
    /// Width of the final bisection cell at each endpoint.
    pub resolution: f64,
    /// The plausible set has gaps: several runs of plausible grid points,
    /// or plausible breakpoints detached from the outermost runs.
    pub disconnected: bool,
    /// Endpoints were located exactly on breakpoints rather than bisected.
    pub exact_edges: bool,
    /// Each run of plausible grid points as `(first, last)` grid values.
    pub components: Vec<(f64, f64)>,
    /// The plausible region still touched the grid edge after all expansions.
    pub truncated: bool,
    /// Grid points where `Tn` was undefined.
    pub skipped_points: usize,
    pub expansions: usize,
    pub curve: TnCurve,
}

/// Scan at the tabulated threshold for `alpha`.
pub fn scan(sample: &[f64], alpha: f64, grid: &GridSpec) -> Result<SymmetryResult> {
    let threshold = lookup(alpha)?.point;
    scan_with_threshold(sample, alpha, threshold, grid)
}

struct GridEval {
    grid: Vec<f64>,
    values: Vec<Option<f64>>,
    step: f64,
}

fn evaluate_grid(ev: &TnEvaluator, center: f64, half_width: f64, half_points: usize) -> GridEval {
    let step = half_width / half_points as f64;
    let grid: Vec<f64> = (0..=2 * half_points)
        .map(|k| center + (k as f64 - half_points as f64) * step)
        .collect();
    let values = grid.par_iter().map(|&c| ev.at(c).ok().map(|v| v.statistic)).collect();
    GridEval { grid, values, step }
}

fn plausible(v: Option<f64>, threshold: f64) -> bool {
    matches!(v, Some(t) if t < threshold)
}

pub fn scan_with_threshold(
    sample: &[f64],
    alpha: f64,
    threshold: f64,
    spec: &GridSpec,
) -> Result<SymmetryResult> {
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    if spec.points < 3 {
        return Err(Error::InvalidArgument("grid needs at least 3 points".into()));
    }
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("sample contains non-finite values".into()));
    }
    if sample.len() < 2 {
        return Err(Error::InsufficientData { needed: 2, got: sample.len() });
    }
    let ev = TnEvaluator::new(sample);
    let center = median_of_sorted(ev.sorted_values());
    let mut half_width = match spec.span {
        SpanSpec::Auto { safety } => {
            10.0 * safety * sample_std(sample) / (sample.len() as f64).sqrt()
        }
        SpanSpec::HalfWidth(h) => h,
    };
    if !(half_width > 0.0 && half_width.is_finite()) {
        half_width = center.abs().max(1.0);
    }
    let half_points = spec.points / 2;

    let mut expansions = 0;
    let mut g = evaluate_grid(&ev, center, half_width, half_points);
    let mut truncated;
    loop {
        let last = g.grid.len() - 1;
        truncated = plausible(g.values[0], threshold) || plausible(g.values[last], threshold);
        if !truncated || expansions >= spec.max_expansions {
            break;
        }
        half_width *= 2.0;
        expansions += 1;
        g = evaluate_grid(&ev, center, half_width, half_points);
    }

    let flags: Vec<bool> = g.values.iter().map(|v| plausible(*v, threshold)).collect();
    let mut runs: Vec<(usize, usize)> = Vec::new();
    for (i, &f) in flags.iter().enumerate() {
        if f {
            match runs.last_mut() {
                Some((_, end)) if *end + 1 == i => *end = i,
                _ => runs.push((i, i)),
            }
        }
    }
    if runs.is_empty() {
        let min_tn = g.values.iter().flatten().copied().fold(f64::INFINITY, f64::min);
        return Err(Error::NoSymmetryPoint { min_tn, threshold });
    }
    let first = runs[0].0;
    let last = runs[runs.len() - 1].1;

    let mut extra: Vec<(f64, f64)> = Vec::new();
    let eval = |c: f64| ev.at(c).ok().map(|v| v.statistic);
    let target_width = g.step / REFINE_DIVISOR;
    let lower = g.grid[0];
    let upper = g.grid[g.grid.len() - 1];

    // bisect toward the outer edge: `inside` plausible, `outside` not
    let bisect = |mut inside: f64, mut outside: f64, extra: &mut Vec<(f64, f64)>| -> f64 {
        while (outside - inside).abs() > target_width {
            let mid = 0.5 * (inside + outside);
            let v = eval(mid);
            if plausible(v, threshold) {
                inside = mid;
                extra.push((mid, v.unwrap()));
            } else {
                outside = mid;
            }
        }
        inside
    };

    let mut exact_edges = true;
    let mut island = false;
    let c_min = match polish_lower_edge(&ev, g.grid[first], g.step, lower, threshold) {
        Some(edge) => {
            island |= edge.island;
            extra.extend(edge.plausible_points);
            edge.edge
        }
        None if first > 0 => {
            exact_edges = false;
            bisect(g.grid[first], g.grid[first - 1], &mut extra)
        }
        None => lower,
    };
    // the upper edge of X is the negated lower edge of -X
    let mirrored: Vec<f64> = ev.sorted_values().iter().map(|v| -v).collect();
    let mirror_ev = TnEvaluator::new(&mirrored);
    let c_max = match polish_lower_edge(&mirror_ev, -g.grid[last], g.step, -upper, threshold) {
        Some(edge) => {
            island |= edge.island;
            extra.extend(edge.plausible_points.into_iter().map(|(c, v)| (-c, v)));
            -edge.edge
        }
        None if last + 1 < g.grid.len() => {
            exact_edges = false;
            bisect(g.grid[last], g.grid[last + 1], &mut extra)
        }
        None => upper,
    };
    let resolution = g.step / REFINE_DIVISOR;

    let tn_at_zero = eval(0.0);
    let zero_symmetric = plausible(tn_at_zero, threshold);

    // candidate points for the minimiser: plausible grid points, plausible
    // bisection points, and the origin when it is itself plausible
    let mut candidates: Vec<(f64, f64)> = flags
        .iter()
        .enumerate()
        .filter(|(_, f)| **f)
        .map(|(i, _)| (g.grid[i], g.values[i].unwrap()))
        .collect();
    candidates.extend(extra);
    if zero_symmetric && (c_min..=c_max).contains(&0.0) {
        candidates.push((0.0, tn_at_zero.unwrap()));
    }
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    candidates.dedup_by(|a, b| a.0 == b.0);

    let plausible_grid: Vec<f64> =
        flags.iter().enumerate().filter(|(_, f)| **f).map(|(i, _)| g.grid[i]).collect();
    let target = median_of_sorted(&plausible_grid);
    let hull_mid = 0.5 * (c_min + c_max);
    let (c_star, tn_at_c_star) = pick_minimiser(&candidates, target, hull_mid, &eval);

    let components = runs.iter().map(|&(a, b)| (g.grid[a], g.grid[b])).collect();
    let skipped_points = g.values.iter().filter(|v| v.is_none()).count();

    Ok(SymmetryResult {
        alpha,
        threshold,
        c_min,
        c_max,
        c_star,
        tn_at_c_star,
        tn_at_zero,
        zero_symmetric,
        resolution,
        disconnected: runs.len() > 1 || island,
        exact_edges,
        components,
        truncated,
        skipped_points,
        expansions,
        curve: TnCurve { c_grid: g.grid, tn_values: g.values, threshold },
    })
}

/// Cells outside a crossing searched exhaustively for breakpoints.
const EDGE_WINDOW_CELLS: f64 = 4.0;
/// The exterior window is widened until it holds this many breakpoints.
const EDGE_MIN_BREAKPOINTS: usize = 256;
/// Above this many breakpoints in the window the edge is bisected instead.
const EDGE_MAX_BREAKPOINTS: usize = 100_000;

struct PolishedEdge {
    edge: f64,
    island: bool,
    plausible_points: Vec<(f64, f64)>,
}

/// Pairwise midpoints of `sorted` lying in `[lo, hi)`, ascending, or `None`
/// if there are more than `cap` of them.
fn breakpoints_in(sorted: &[f64], lo: f64, hi: f64, cap: usize) -> Option<Vec<f64>> {
    let mut ranges = Vec::new();
    let mut count = 0usize;
    for (i, &xi) in sorted.iter().enumerate() {
        let tail = &sorted[i..];
        let a = tail.partition_point(|&xj| 0.5 * (xi + xj) < lo);
        let b = tail.partition_point(|&xj| 0.5 * (xi + xj) < hi);
        if b > a {
            count += b - a;
            if count > cap {
                return None;
            }
            ranges.push((i, i + a, i + b));
        }
    }
    let mut out = Vec::with_capacity(count);
    for (i, a, b) in ranges {
        out.extend(sorted[a..b].iter().map(|&xj| 0.5 * (sorted[i] + xj)));
    }
    out.sort_unstable_by(|x, y| x.total_cmp(y));
    out.dedup();
    Some(out)
}

/// Locates the infimum of the plausible set below the plausible grid point
/// `inner` by evaluating `Tn` on every breakpoint and every gap between
/// breakpoints in an exterior window. The window grows until its outer end
/// is implausible and it holds enough breakpoints; `None` when it gets too
/// dense to enumerate.
fn polish_lower_edge(
    ev: &TnEvaluator,
    inner: f64,
    step: f64,
    floor: f64,
    threshold: f64,
) -> Option<PolishedEdge> {
    let eval = |c: f64| ev.at(c).ok().map(|v| v.statistic);
    let mut width = EDGE_WINDOW_CELLS * step;
    let (lo, bps) = loop {
        let lo = (inner - width).max(floor);
        let bps = breakpoints_in(ev.sorted_values(), lo, inner, EDGE_MAX_BREAKPOINTS)?;
        let at_floor = lo <= floor;
        if !at_floor && (bps.len() < EDGE_MIN_BREAKPOINTS || plausible(eval(lo), threshold)) {
            width *= 2.0;
            continue;
        }
        break (lo, bps);
    };

    let mut points = bps;
    points.push(inner);
    let mut edge = None;
    let mut island = false;
    let mut plausible_points = Vec::new();
    let mut seen_gap_after_edge = false;
    let mut check = |c: f64, is_point_of: f64, edge: &mut Option<f64>| {
        let v = eval(c);
        if plausible(v, threshold) {
            plausible_points.push((c, v.unwrap()));
            if edge.is_none() {
                *edge = Some(is_point_of);
            } else if seen_gap_after_edge {
                island = true;
            }
        } else if edge.is_some() {
            seen_gap_after_edge = true;
        }
    };
    if lo <= floor && plausible(eval(lo), threshold) {
        edge = Some(lo);
    }
    for k in 0..points.len() {
        check(points[k], points[k], &mut edge);
        if k + 1 < points.len() {
            check(0.5 * (points[k] + points[k + 1]), points[k], &mut edge);
        }
    }
    Some(PolishedEdge { edge: edge.unwrap_or(inner), island, plausible_points })
}

/// Midpoint of the contiguous minimal plateau nearest `target`.
fn pick_minimiser(
    candidates: &[(f64, f64)],
    target: f64,
    hull_mid: f64,
    eval: &impl Fn(f64) -> Option<f64>,
) -> (f64, f64) {
    let vmin = candidates.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
    let mut plateaus: Vec<(usize, usize)> = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        if c.1 == vmin {
            match plateaus.last_mut() {
                Some((_, end)) if *end + 1 == i => *end = i,
                _ => plateaus.push((i, i)),
            }
        }
    }
    let centre = |&(a, b): &(usize, usize)| 0.5 * (candidates[a].0 + candidates[b].0);
    let best = plateaus
        .iter()
        .min_by(|p, q| {
            let (cp, cq) = (centre(p), centre(q));
            (cp - target)
                .abs()
                .total_cmp(&(cq - target).abs())
                .then((cp - hull_mid).abs().total_cmp(&(cq - hull_mid).abs()))
        })
        .expect("at least one candidate");
    let mid = centre(best);
    if eval(mid) == Some(vmin) {
        return (mid, vmin);
    }
    // the plateau midpoint fell on a jump between samples; use the nearest member
    let member = (best.0..=best.1)
        .min_by(|&i, &j| (candidates[i].0 - mid).abs().total_cmp(&(candidates[j].0 - mid).abs()))
        .unwrap();
    (candidates[member].0, vmin)
}

/// Sorted distinct pairwise midpoints `(X_i + X_j) / 2`, `i <= j`. Between
/// consecutive breakpoints `Tn(c)` is constant.
pub fn exact_breakpoints(sample: &[f64]) -> Result<Vec<f64>> {
    let n = sample.len();
    if n > MAX_BREAKPOINT_SAMPLE {
        return Err(Error::TooLarge { n, limit: MAX_BREAKPOINT_SAMPLE });
    }
    let mut out = Vec::with_capacity(n * (n + 1) / 2);
    for i in 0..n {
        for j in i..n {
            out.push(0.5 * (sample[i] + sample[j]));
        }
    }
    out.sort_unstable_by(|a, b| a.total_cmp(b));
    out.dedup();
    Ok(out)
}
