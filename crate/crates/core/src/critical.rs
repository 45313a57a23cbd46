//! Upper percentage points of the limiting null law of `Tn`.
//!
//! Under symmetry `Tn` converges in distribution to `∫₀¹ W(t)²/t dt` for a
//! standard Wiener process `W`. Tabulated points are embedded below; the
//! same quantiles can be regenerated by simulating Brownian paths, and the
//! finite-sample law can be simulated directly from normal samples.
//!
//! Randomness comes from ChaCha8 seeded with `seed_from_u64(seed)`, one
//! stream per path (or replication) selected with `set_stream(index)`, so
//! results do not depend on thread scheduling.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{mean, quantile_type7, sample_std, sort_floats};
use crate::tn::tn;

/// (cumulative probability, percentage point) of the limiting law.
pub const ASYMPTOTIC_POINTS: [(f64, f64); 9] = [
    (0.50, 0.659),
    (0.75, 1.258),
    (0.85, 1.768),
    (0.90, 2.200),
    (0.95, 2.983),
    (0.975, 3.798),
    (0.990, 4.909),
    (0.995, 5.768),
    (0.999, 7.803),
];

const PROB_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PointSource {
    Table,
    Interpolated,
    Simulated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalPoint {
    pub alpha: f64,
    pub point: f64,
    pub source: PointSource,
    pub stderr_estimate: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalTable {
    rows: Vec<(f64, f64)>,
}

impl Default for CriticalTable {
    fn default() -> Self {
        Self { rows: ASYMPTOTIC_POINTS.to_vec() }
    }
}

impl CriticalTable {
    /// Rows must be strictly increasing in both columns, probabilities in (0, 1).
    pub fn new(rows: Vec<(f64, f64)>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::InvalidArgument("empty critical table".into()));
        }
        let ok_range = rows.iter().all(|(p, q)| *p > 0.0 && *p < 1.0 && *q > 0.0);
        let ok_order = rows.windows(2).all(|w| w[0].0 < w[1].0 && w[0].1 < w[1].1);
        if !(ok_range && ok_order) {
            return Err(Error::InvalidArgument("critical table rows not strictly increasing".into()));
        }
        Ok(Self { rows })
    }

    pub fn rows(&self) -> &[(f64, f64)] {
        &self.rows
    }

    /// Upper `alpha` point. Exact row when `1 - alpha` is tabulated, else
    /// linear interpolation in cumulative probability.
    pub fn lookup(&self, alpha: f64) -> Result<CriticalPoint> {
        let p = 1.0 - alpha;
        let (first, last) = (self.rows[0].0, self.rows[self.rows.len() - 1].0);
        if !(alpha > 0.0 && alpha < 1.0) || p < first - PROB_EPS || p > last + PROB_EPS {
            return Err(Error::OutOfTableRange { alpha });
        }
        if let Some(&(_, q)) = self.rows.iter().find(|(rp, _)| (rp - p).abs() < PROB_EPS) {
            return Ok(CriticalPoint { alpha, point: q, source: PointSource::Table, stderr_estimate: None });
        }
        let i = self.rows.partition_point(|(rp, _)| *rp < p);
        let (p0, q0) = self.rows[i - 1];
        let (p1, q1) = self.rows[i];
        let point = q0 + (p - p0) / (p1 - p0) * (q1 - q0);
        Ok(CriticalPoint { alpha, point, source: PointSource::Interpolated, stderr_estimate: None })
    }
}

/// Upper `alpha` point from the embedded table.
pub fn lookup(alpha: f64) -> Result<CriticalPoint> {
    CriticalTable::default().lookup(alpha)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McConfig {
    pub paths: usize,
    pub time_steps: usize,
    pub seed: u64,
    /// The integral over `(0, small_t_cut]` is replaced by its mean.
    pub small_t_cut: f64,
}

impl McConfig {
    pub const DEFAULT_SEED: u64 = 0x5EED_2017;

    /// `small_t_cut` defaults to `1 / time_steps`.
    pub fn new(paths: usize, time_steps: usize, seed: u64) -> Self {
        Self { paths, time_steps, seed, small_t_cut: 1.0 / time_steps.max(1) as f64 }
    }

    pub fn validate(&self) -> Result<()> {
        if self.paths < 1 {
            return Err(Error::InvalidArgument("paths must be >= 1".into()));
        }
        if self.time_steps < 2 {
            return Err(Error::InvalidArgument("time_steps must be >= 2".into()));
        }
        if !(self.small_t_cut > 0.0 && self.small_t_cut < 1.0) {
            return Err(Error::InvalidArgument("small_t_cut must lie in (0, 1)".into()));
        }
        Ok(())
    }
}

impl Default for McConfig {
    fn default() -> Self {
        Self::new(100_000, 4096, Self::DEFAULT_SEED)
    }
}

fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One draw of `∫₀¹ W(t)²/t dt`.
///
/// `W` is sampled at the midpoints of `time_steps` equal cells covering
/// `[cut, 1]`; each cell contributes `width * W(m)² / m` (midpoint rule) and
/// `(0, cut]` contributes its expectation `cut`, since `E[W(t)²/t] = 1`.
fn brownian_functional(rng: &mut ChaCha8Rng, cut: f64, width: f64, inv_mid: &[f64]) -> f64 {
    let first_sd = (cut + 0.5 * width).sqrt();
    let step_sd = width.sqrt();
    let mut w = 0.0;
    let mut sum = 0.0;
    for (j, inv_m) in inv_mid.iter().enumerate() {
        let z: f64 = StandardNormal.sample(rng);
        w += if j == 0 { first_sd } else { step_sd } * z;
        sum += w * w * inv_m;
    }
    cut + width * sum
}

/// Simulated values of the limiting functional, in path order.
pub fn simulate_integrals(cfg: &McConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let cut = cfg.small_t_cut;
    let width = (1.0 - cut) / cfg.time_steps as f64;
    let inv_mid: Vec<f64> = (0..cfg.time_steps)
        .map(|j| 1.0 / (cut + (j as f64 + 0.5) * width))
        .collect();
    Ok((0..cfg.paths)
        .into_par_iter()
        .map(|i| {
            let mut rng = stream_rng(cfg.seed, i as u64);
            brownian_functional(&mut rng, cut, width, &inv_mid)
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuantileEstimate {
    pub probability: f64,
    pub value: f64,
    /// Batch-means standard error (20 contiguous batches).
    pub stderr: f64,
}

const STDERR_BATCHES: usize = 20;

fn check_probabilities(probabilities: &[f64]) -> Result<()> {
    if probabilities.iter().all(|p| *p > 0.0 && *p < 1.0) {
        Ok(())
    } else {
        Err(Error::InvalidArgument("probabilities must lie in (0, 1)".into()))
    }
}

/// Quantiles of a set of draws together with batch-means standard errors.
pub fn quantiles_with_stderr(draws: &[f64], probabilities: &[f64]) -> Result<Vec<QuantileEstimate>> {
    check_probabilities(probabilities)?;
    if draws.is_empty() {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mut sorted = draws.to_vec();
    sort_floats(&mut sorted);
    let batches: Vec<Vec<f64>> = if draws.len() >= STDERR_BATCHES * 10 {
        let size = draws.len() / STDERR_BATCHES;
        draws
            .chunks_exact(size)
            .take(STDERR_BATCHES)
            .map(|c| {
                let mut b = c.to_vec();
                sort_floats(&mut b);
                b
            })
            .collect()
    } else {
        Vec::new()
    };
    Ok(probabilities
        .iter()
        .map(|&p| {
            let stderr = if batches.is_empty() {
                f64::NAN
            } else {
                let qs: Vec<f64> = batches.iter().map(|b| quantile_type7(b, p)).collect();
                sample_std(&qs) / (qs.len() as f64).sqrt()
            };
            QuantileEstimate { probability: p, value: quantile_type7(&sorted, p), stderr }
        })
        .collect())
}

/// Quantiles of the limiting law estimated from simulated Brownian paths.
pub fn simulate_quantile(probabilities: &[f64], cfg: &McConfig) -> Result<Vec<f64>> {
    Ok(simulate_quantile_estimates(probabilities, cfg)?.into_iter().map(|q| q.value).collect())
}

pub fn simulate_quantile_estimates(probabilities: &[f64], cfg: &McConfig) -> Result<Vec<QuantileEstimate>> {
    check_probabilities(probabilities)?;
    let draws = simulate_integrals(cfg)?;
    quantiles_with_stderr(&draws, probabilities)
}

/// Upper `alpha` point from simulation of the limiting law.
pub fn simulated_point(alpha: f64, cfg: &McConfig) -> Result<CriticalPoint> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!("alpha {alpha} outside (0, 1)")));
    }
    let q = simulate_quantile_estimates(&[1.0 - alpha], cfg)?[0];
    Ok(CriticalPoint {
        alpha,
        point: q.value,
        source: PointSource::Simulated,
        stderr_estimate: Some(q.stderr),
    })
}

/// Mean of simulated functionals (1 in the limit).
pub fn simulated_mean(cfg: &McConfig) -> Result<f64> {
    Ok(mean(&simulate_integrals(cfg)?))
}

/// `Tn` for `replications` independent standard-normal samples of size `n`.
pub fn simulate_finite_sample(n: usize, replications: usize, seed: u64) -> Result<Vec<f64>> {
    if n < 10 {
        return Err(Error::InsufficientData { needed: 10, got: n });
    }
    if replications == 0 {
        return Err(Error::InvalidArgument("replications must be >= 1".into()));
    }
    (0..replications)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let sample: Vec<f64> = (0..n).map(|_| StandardNormal.sample(&mut rng)).collect();
            tn(&sample).map(|v| v.statistic)
        })
        .collect()
}

/// Empirical quantiles of `Tn` under a symmetric (normal) null at sample size `n`.
pub fn simulate_finite_sample_quantile(
    n: usize,
    probabilities: &[f64],
    replications: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    check_probabilities(probabilities)?;
    let mut draws = simulate_finite_sample(n, replications, seed)?;
    sort_floats(&mut draws);
    Ok(probabilities.iter().map(|&p| quantile_type7(&draws, p)).collect())
}
