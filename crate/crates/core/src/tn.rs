//! Empirical-likelihood symmetry statistic.
//!
//! For a sample `X` with empirical CDF `F`, every observation contributes
//! through its magnitude `x = |X_i|` and the two tail counts
//! `a = n F(-x) = #{X <= -x}` and `b = n (1 - F(x-)) = #{X >= x}`:
//!
//! ```text
//! log H(x) = a ln((a + b) / 2a) + b ln((a + b) / 2b)
//! Tn       = -(2/n) * sum_i log H(|X_i|)
//! ```
//!
//! with `0 * ln(.) = 0`. Exact zeros carry no sign information and are
//! removed before evaluation (they are counted in [`TnValue::zeros_dropped`]).
//!
//! The production path sorts once and obtains the counts with two monotone
//! pointers, so evaluating `Tn(c)` on a presorted sample is `O(n)`.
//! Terms are accumulated in ascending order of `|X_i|` with compensated
//! summation; this makes the result bit-identical under permutation and
//! under mirroring `X -> -X`.

use std::f64::consts::LN_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numeric::{sort_floats, CompensatedSum};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TnValue {
    pub statistic: f64,
    /// Sample size after removing exact zeros.
    pub n_effective: usize,
    pub zeros_dropped: usize,
}

/// Empirical distribution function of a sample.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(sample: &[f64]) -> Self {
        let mut sorted = sample.to_vec();
        sort_floats(&mut sorted);
        Self { sorted }
    }

    pub fn n(&self) -> usize {
        self.sorted.len()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// `F(x) = #{X <= x} / n`
    pub fn cdf(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v <= x) as f64 / self.n() as f64
    }

    /// `F(x-) = #{X < x} / n`
    pub fn cdf_left(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&v| v < x) as f64 / self.n() as f64
    }
}

/// `ln k` for `k = 0..=n` (entry 0 unused).
#[derive(Debug, Clone)]
struct LogTable(Vec<f64>);

impl LogTable {
    fn new(n: usize) -> Self {
        Self((0..=n).map(|k| if k == 0 { 0.0 } else { (k as f64).ln() }).collect())
    }

    /// `a ln((a+b)/2a) + b ln((a+b)/2b)`, symmetric in `(a, b)`.
    #[inline]
    fn log_h(&self, a: usize, b: usize) -> f64 {
        if a == b {
            0.0
        } else if a == 0 {
            -(b as f64) * LN_2
        } else if b == 0 {
            -(a as f64) * LN_2
        } else {
            let s = self.0[a + b] - LN_2;
            let ta = a as f64 * (s - self.0[a]);
            let tb = b as f64 * (s - self.0[b]);
            ta + tb
        }
    }
}

/// Evaluates `Tn(c)` repeatedly on one presorted sample.
#[derive(Debug, Clone)]
pub struct TnEvaluator {
    sorted: Vec<f64>,
    logs: LogTable,
}

impl TnEvaluator {
    pub fn new(sample: &[f64]) -> Self {
        let mut sorted = sample.to_vec();
        sort_floats(&mut sorted);
        let logs = LogTable::new(sorted.len());
        Self { sorted, logs }
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted
    }

    /// `Tn` of the shifted sample `X - c`.
    pub fn at(&self, c: f64) -> Result<TnValue> {
        let y = &self.sorted;
        let n = y.len();
        // shifting preserves order, and the exact zeros form one block
        let z0 = y.partition_point(|&v| v - c < 0.0);
        let z1 = z0 + y[z0..].partition_point(|&v| v - c == 0.0);
        let zeros = z1 - z0;
        let m = n - zeros;
        if m == 0 && n > 0 {
            return Err(Error::AllZeros { zeros });
        }
        if m < 2 {
            return Err(Error::InsufficientData { needed: 2, got: m });
        }

        let mut acc = CompensatedSum::new();
        // negatives walked outward from zero, positives likewise
        let mut neg = z0; // next negative is y[neg - 1]
        let mut pos = z1; // next positive is y[pos]
        let mut pa = z0; // #{y <= -x} among negatives
        let mut pb = z1; // first positive index with y >= x
        while neg > 0 || pos < n {
            let take_neg = match (neg > 0, pos < n) {
                (true, true) => -(y[neg - 1] - c) <= y[pos] - c,
                (true, false) => true,
                _ => false,
            };
            let x = if take_neg {
                neg -= 1;
                -(y[neg] - c)
            } else {
                pos += 1;
                y[pos - 1] - c
            };
            while pa > 0 && y[pa - 1] - c > -x {
                pa -= 1;
            }
            while pb < n && y[pb] - c < x {
                pb += 1;
            }
            acc.add(self.logs.log_h(pa, n - pb));
        }

        let statistic = (-2.0 / m as f64 * acc.value()).max(0.0);
        Ok(TnValue { statistic, n_effective: m, zeros_dropped: zeros })
    }
}

/// Symmetry statistic about zero.
pub fn tn(sample: &[f64]) -> Result<TnValue> {
    tn_shifted(sample, 0.0)
}

/// Symmetry statistic about `c`, i.e. `tn` of `X - c`.
pub fn tn_shifted(sample: &[f64], c: f64) -> Result<TnValue> {
    if sample.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidArgument("sample contains non-finite values".into()));
    }
    TnEvaluator::new(sample).at(c)
}

/// Direct `O(n^2)` evaluation of the statistic, counting the empirical CDF
/// afresh for every observation. Slow; kept as a cross-check.
pub fn tn_reference(sample: &[f64]) -> Result<TnValue> {
    let zeros = sample.iter().filter(|v| **v == 0.0).count();
    let xs: Vec<f64> = sample.iter().copied().filter(|v| *v != 0.0).collect();
    let n = xs.len();
    if n == 0 && zeros > 0 {
        return Err(Error::AllZeros { zeros });
    }
    if n < 2 {
        return Err(Error::InsufficientData { needed: 2, got: n });
    }
    let nf = n as f64;
    let mut total = CompensatedSum::new();
    for xi in &xs {
        let x = xi.abs();
        let f_neg = xs.iter().filter(|v| **v <= -x).count() as f64 / nf;
        let f_left = xs.iter().filter(|v| **v < x).count() as f64 / nf;
        let upper = 1.0 - f_left;
        let pooled = f_neg + upper;
        let mut log_h = 0.0;
        if f_neg > 0.0 {
            log_h += nf * f_neg * (pooled / (2.0 * f_neg)).ln();
        }
        if upper > 0.0 {
            log_h += nf * upper * (pooled / (2.0 * upper)).ln();
        }
        total.add(log_h);
    }
    Ok(TnValue {
        statistic: (-2.0 / nf * total.value()).max(0.0),
        n_effective: n,
        zeros_dropped: zeros,
    })
}
