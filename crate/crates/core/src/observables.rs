//! Daily returns and the trend-based observables built on uninterrupted runs.
//!
//! A trend is a maximal run of daily steps with the same direction. A step
//! with `P[i+1] > P[i]` is up; a step with `P[i+1] <= P[i]` is down, so flat
//! days always belong to down trends. Consecutive trends share one boundary
//! price, which makes the trend log-changes telescope to the total log-change
//! of the series.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::PriceSeries;
use crate::numeric::{compensated_sum, mean, sample_std};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableKind {
    Returns,
    TReturns,
    TVReturns,
}

impl ObservableKind {
    pub const ALL: [ObservableKind; 3] =
        [ObservableKind::Returns, ObservableKind::TReturns, ObservableKind::TVReturns];

    pub fn label(self) -> &'static str {
        match self {
            ObservableKind::Returns => "Returns",
            ObservableKind::TReturns => "TReturns",
            ObservableKind::TVReturns => "TVReturns",
        }
    }
}

impl fmt::Display for ObservableKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for ObservableKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "returns" => Ok(ObservableKind::Returns),
            "treturns" => Ok(ObservableKind::TReturns),
            "tvreturns" => Ok(ObservableKind::TVReturns),
            other => Err(Error::InvalidArgument(format!("unknown observable '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
}

impl Direction {
    fn of_step(prev: f64, next: f64) -> Self {
        if next > prev {
            Direction::Up
        } else {
            Direction::Down
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub start_index: usize,
    /// Number of daily steps covered; the trend spans `duration + 1` prices.
    pub duration: usize,
    pub direction: Direction,
    pub log_change: f64,
}

impl Trend {
    pub fn end_index(&self) -> usize {
        self.start_index + self.duration
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct EntryMeta {
    pub start_index: usize,
    pub duration: usize,
    pub direction: Direction,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservableSeries {
    kind: ObservableKind,
    values: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    meta: Option<Vec<EntryMeta>>,
}

impl ObservableSeries {
    pub fn kind(&self) -> ObservableKind {
        self.kind
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn meta(&self) -> Option<&[EntryMeta]> {
        self.meta.as_deref()
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// CSV with columns `index,value,start_index,duration,direction`.
    /// Meta columns are empty for daily returns.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("index,value,start_index,duration,direction\n");
        for (i, v) in self.values.iter().enumerate() {
            match self.meta.as_ref().map(|m| m[i]) {
                Some(m) => {
                    let dir = match m.direction {
                        Direction::Up => "up",
                        Direction::Down => "down",
                    };
                    out.push_str(&format!("{i},{v},{},{},{dir}\n", m.start_index, m.duration));
                }
                None => out.push_str(&format!("{i},{v},,,\n")),
            }
        }
        out
    }
}

fn log_prices(prices: &[f64]) -> Vec<f64> {
    prices.iter().map(|p| p.ln()).collect()
}

/// `R[i] = ln P[i+1] - ln P[i]`.
pub fn daily_returns(ps: &PriceSeries) -> ObservableSeries {
    ObservableSeries {
        kind: ObservableKind::Returns,
        values: returns_of(ps.prices()),
        meta: None,
    }
}

pub(crate) fn returns_of(prices: &[f64]) -> Vec<f64> {
    let logs = log_prices(prices);
    logs.windows(2).map(|w| w[1] - w[0]).collect()
}

/// Splits the series into maximal uninterrupted trends.
pub fn segment_trends(ps: &PriceSeries) -> Vec<Trend> {
    segment_prices(ps.prices())
}

/// Same as [`segment_trends`] on a bare price slice. Returns an empty list
/// for fewer than two prices.
pub fn segment_prices(prices: &[f64]) -> Vec<Trend> {
    if prices.len() < 2 {
        return Vec::new();
    }
    let logs = log_prices(prices);
    let mut trends = Vec::new();
    let mut start = 0;
    let mut dir = Direction::of_step(prices[0], prices[1]);
    for i in 1..prices.len() - 1 {
        let d = Direction::of_step(prices[i], prices[i + 1]);
        if d != dir {
            trends.push(Trend {
                start_index: start,
                duration: i - start,
                direction: dir,
                log_change: logs[i] - logs[start],
            });
            start = i;
            dir = d;
        }
    }
    let last = prices.len() - 1;
    trends.push(Trend {
        start_index: start,
        duration: last - start,
        direction: dir,
        log_change: logs[last] - logs[start],
    });
    trends
}

/// Trend returns (`kind == TReturns`) or trend returns divided by their
/// duration in days (`kind == TVReturns`).
pub fn trend_returns(trends: &[Trend], kind: ObservableKind) -> Result<ObservableSeries> {
    if trends.is_empty() {
        return Err(Error::EmptySeries { found: 0 });
    }
    let values = match kind {
        ObservableKind::TReturns => trends.iter().map(|t| t.log_change).collect(),
        ObservableKind::TVReturns => {
            trends.iter().map(|t| t.log_change / t.duration as f64).collect()
        }
        ObservableKind::Returns => {
            return Err(Error::InvalidArgument(
                "trend_returns builds TReturns or TVReturns only".into(),
            ))
        }
    };
    let meta = trends
        .iter()
        .map(|t| EntryMeta {
            start_index: t.start_index,
            duration: t.duration,
            direction: t.direction,
        })
        .collect();
    Ok(ObservableSeries { kind, values, meta: Some(meta) })
}

/// Builds any of the three observables from a price series.
pub fn build(ps: &PriceSeries, kind: ObservableKind) -> ObservableSeries {
    build_from_prices(ps.prices(), kind)
}

pub(crate) fn build_from_prices(prices: &[f64], kind: ObservableKind) -> ObservableSeries {
    match kind {
        ObservableKind::Returns => ObservableSeries {
            kind,
            values: returns_of(prices),
            meta: None,
        },
        _ => {
            let trends = segment_prices(prices);
            if trends.is_empty() {
                return ObservableSeries { kind, values: Vec::new(), meta: Some(Vec::new()) };
            }
            trend_returns(&trends, kind).expect("non-empty trends")
        }
    }
}

/// Moments as reported in the usual descriptive-statistics table. Moments
/// that are undefined (one value, or zero spread) are NaN.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptiveStats {
    pub n: usize,
    pub mean: f64,
    /// Standard error of the mean, `std / sqrt(n)`.
    pub mean_stderr: f64,
    /// Sample standard deviation (n - 1 denominator).
    pub std: f64,
    /// Standardized third central moment, `m3 / m2^1.5`.
    pub skewness: f64,
    /// Pearson (non-excess) kurtosis, `m4 / m2^2`. Equals 3 for a normal law.
    pub kurtosis: f64,
}

pub fn describe(s: &ObservableSeries) -> Result<DescriptiveStats> {
    describe_values(s.values())
}

pub fn describe_values(values: &[f64]) -> Result<DescriptiveStats> {
    let n = values.len();
    if n == 0 {
        return Err(Error::InsufficientData { needed: 1, got: 0 });
    }
    let mu = mean(values);
    let nf = n as f64;
    let m2 = compensated_sum(values.iter().map(|v| (v - mu).powi(2))) / nf;
    let m3 = compensated_sum(values.iter().map(|v| (v - mu).powi(3))) / nf;
    let m4 = compensated_sum(values.iter().map(|v| (v - mu).powi(4))) / nf;
    let std = if n > 1 { sample_std(values) } else { f64::NAN };
    let (skewness, kurtosis) = if m2 > 0.0 {
        (m3 / m2.powf(1.5), m4 / (m2 * m2))
    } else {
        (f64::NAN, f64::NAN)
    };
    Ok(DescriptiveStats {
        n,
        mean: mu,
        mean_stderr: std / nf.sqrt(),
        std,
        skewness,
        kurtosis,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn ps(prices: &[f64]) -> PriceSeries {
        PriceSeries::from_prices("T", prices.to_vec()).unwrap()
    }

    /// Independent run detector: direction of every step, then run lengths.
    fn oracle_runs(prices: &[f64]) -> Vec<(usize, usize, Direction)> {
        let dirs: Vec<Direction> = prices
            .windows(2)
            .map(|w| if w[1] - w[0] > 0.0 { Direction::Up } else { Direction::Down })
            .collect();
        let mut runs = Vec::new();
        let mut i = 0;
        while i < dirs.len() {
            let mut j = i;
            while j + 1 < dirs.len() && dirs[j + 1] == dirs[i] {
                j += 1;
            }
            runs.push((i, j - i + 1, dirs[i]));
            i = j + 1;
        }
        runs
    }

    #[test]
    fn flat_and_exact_log_returns() {
        assert_eq!(daily_returns(&ps(&[100.0, 100.0])).values(), &[0.0]);
        let e = std::f64::consts::E;
        let r = daily_returns(&ps(&[1.0, e, e * e]));
        assert!(r.values().iter().all(|v| (v - 1.0).abs() < 1e-15));
        assert!(r.meta().is_none());
    }

    #[test]
    fn monotone_series_is_one_trend() {
        let t = segment_trends(&ps(&[1.0, 2.0, 3.0]));
        assert_eq!(t.len(), 1);
        assert_eq!(t[0].duration, 2);
        assert_eq!(t[0].direction, Direction::Up);
        assert!((t[0].log_change - 3f64.ln()).abs() < 1e-15);

        let tr = trend_returns(&t, ObservableKind::TReturns).unwrap();
        let tv = trend_returns(&t, ObservableKind::TVReturns).unwrap();
        assert!((tr.values()[0] - 3f64.ln()).abs() < 1e-15);
        assert!((tv.values()[0] - 3f64.ln() / 2.0).abs() < 1e-15);
    }

    #[test]
    fn mixed_series_with_flat_day() {
        let prices = [100.0, 101.0, 103.0, 102.0, 102.0, 105.0];
        let t = segment_trends(&ps(&prices));
        let runs = oracle_runs(&prices);
        assert_eq!(runs, vec![(0, 2, Direction::Up), (2, 2, Direction::Down), (4, 1, Direction::Up)]);
        let got: Vec<_> = t.iter().map(|t| (t.start_index, t.duration, t.direction)).collect();
        assert_eq!(got, runs);
        let expected = [(103.0f64 / 100.0).ln(), (102.0f64 / 103.0).ln(), (105.0f64 / 102.0).ln()];
        for (t, e) in t.iter().zip(expected) {
            assert!((t.log_change - e).abs() < 1e-14);
        }
        let tr = trend_returns(&t, ObservableKind::TReturns).unwrap();
        let total = compensated_sum(tr.values().iter().copied());
        assert!((total - (105.0f64 / 100.0).ln()).abs() < 1e-14);
    }

    #[test]
    fn leading_flat_step_seeds_a_down_trend() {
        let t = segment_prices(&[5.0, 5.0, 5.0, 6.0]);
        assert_eq!(t[0].direction, Direction::Down);
        assert_eq!(t[0].duration, 2);
        assert_eq!(t[0].log_change, 0.0);
        assert_eq!(t[1].direction, Direction::Up);
    }

    #[test]
    fn trend_returns_rejects_returns_kind_and_empty() {
        let t = segment_prices(&[1.0, 2.0]);
        assert!(trend_returns(&t, ObservableKind::Returns).is_err());
        assert!(trend_returns(&[], ObservableKind::TReturns).is_err());
    }

    #[test]
    fn describe_basics() {
        let d = describe_values(&[-1.0, 1.0]).unwrap();
        assert_eq!(d.mean, 0.0);
        assert_eq!(d.skewness, 0.0);
        let d = describe_values(&[0.0, 0.0, 0.0, 4.0]).unwrap();
        assert_eq!(d.mean, 1.0);
        // sample variance = (1+1+1+9)/3 = 4
        assert!((d.std - 2.0).abs() < 1e-15);
        // m2 = 3, m3 = (-1-1-1+27)/4 = 6, m4 = (1+1+1+81)/4 = 21
        assert!((d.skewness - 6.0 / 3f64.powf(1.5)).abs() < 1e-12);
        assert!((d.kurtosis - 21.0 / 9.0).abs() < 1e-12);
        let one = describe_values(&[0.25]).unwrap();
        assert_eq!((one.n, one.mean), (1, 0.25));
        assert!(one.std.is_nan() && one.kurtosis.is_nan());
        assert!(describe_values(&[]).is_err());
    }

    #[test]
    fn csv_layout() {
        let s = build(&ps(&[1.0, 2.0, 1.0]), ObservableKind::TReturns);
        let csv = s.to_csv();
        let mut lines = csv.lines();
        assert_eq!(lines.next(), Some("index,value,start_index,duration,direction"));
        assert!(lines.next().unwrap().ends_with(",0,1,up"));
        assert!(lines.next().unwrap().ends_with(",1,1,down"));
        let r = daily_returns(&ps(&[1.0, 2.0]));
        assert!(r.to_csv().lines().nth(1).unwrap().ends_with(",,,"));
    }

    #[test]
    fn json_round_trip() {
        let s = build(&ps(&[1.0, 2.0, 1.5, 1.5, 3.0]), ObservableKind::TVReturns);
        let j = serde_json::to_string(&s).unwrap();
        let back: ObservableSeries = serde_json::from_str(&j).unwrap();
        assert_eq!(back, s);
    }

    fn price_path() -> impl Strategy<Value = Vec<f64>> {
        // ticks on a 0.01 grid so that flat days occur
        prop::collection::vec(-3i32..=3, 1..300).prop_map(|steps| {
            let mut p = 1000i64;
            let mut out = vec![p as f64 / 100.0];
            for s in steps {
                p = (p + s as i64).max(1);
                out.push(p as f64 / 100.0);
            }
            out
        })
    }

    proptest! {
        #[test]
        fn trend_invariants(prices in price_path()) {
            let trends = segment_prices(&prices);
            let returns = returns_of(&prices);
            prop_assert_eq!(trends[0].start_index, 0);
            prop_assert_eq!(trends.last().unwrap().end_index(), prices.len() - 1);
            for w in trends.windows(2) {
                prop_assert_eq!(w[0].end_index(), w[1].start_index);
                prop_assert_ne!(w[0].direction, w[1].direction);
            }
            let ups = trends.iter().filter(|t| t.direction == Direction::Up).count();
            prop_assert!((ups as i64 - (trends.len() - ups) as i64).abs() <= 1);
            prop_assert_eq!(trends.iter().map(|t| t.duration).sum::<usize>(), prices.len() - 1);

            let tr = trend_returns(&trends, ObservableKind::TReturns).unwrap();
            let tv = trend_returns(&trends, ObservableKind::TVReturns).unwrap();
            let total = compensated_sum(tr.values().iter().copied());
            prop_assert!((total - (prices.last().unwrap().ln() - prices[0].ln())).abs() < 1e-12);

            for (i, t) in trends.iter().enumerate() {
                let (v, w) = (tr.values()[i], tv.values()[i]);
                match t.direction {
                    Direction::Up => prop_assert!(v > 0.0 && w > 0.0),
                    Direction::Down => prop_assert!(v <= 0.0 && w <= 0.0),
                }
                let span = compensated_sum(returns[t.start_index..t.end_index()].iter().copied());
                prop_assert!((span - v).abs() < 1e-12);
                if t.duration == 1 {
                    prop_assert_eq!(v, returns[t.start_index]);
                    prop_assert_eq!(v, w);
                } else if v != 0.0 {
                    prop_assert!(w.abs() < v.abs());
                }
                if t.direction == Direction::Up {
                    prop_assert!(prices[t.start_index..=t.end_index()].windows(2).all(|p| p[1] > p[0]));
                } else {
                    prop_assert!(prices[t.start_index..=t.end_index()].windows(2).all(|p| p[1] <= p[0]));
                }
            }
        }
    }
}
