//! Rolling-window evolution of `Tn(0)` and of the symmetry interval.
//!
//! Windows count trading days of *prices*; the observable is rebuilt from
//! scratch inside every window, so trends straddling a window edge are cut
//! at the edge.

use std::io::Read;

use chrono::NaiveDate;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::critical::lookup;
use crate::error::{Error, Result};
use crate::ingest::PriceSeries;
use crate::observables::{build_from_prices, ObservableKind};
use crate::scan::{scan_with_threshold, GridSpec};
use crate::tn::TnEvaluator;

pub const MIN_WINDOW_DAYS: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RollingConfig {
    pub window_days: usize,
    pub step_days: usize,
    pub alpha: f64,
    pub observable: ObservableKind,
    /// Windows whose observable has fewer entries are not tested.
    pub min_entries: usize,
    pub grid: GridSpec,
}

impl Default for RollingConfig {
    fn default() -> Self {
        Self {
            window_days: 252,
            step_days: 1,
            alpha: 0.05,
            observable: ObservableKind::Returns,
            min_entries: 30,
            grid: GridSpec::default(),
        }
    }
}

impl RollingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window_days < MIN_WINDOW_DAYS {
            return Err(Error::InvalidArgument(format!(
                "window_days must be >= {MIN_WINDOW_DAYS}"
            )));
        }
        if self.step_days < 1 {
            return Err(Error::InvalidArgument("step_days must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RollingStatus {
    Ok,
    NoSymmetryPoint,
    InsufficientData,
}

impl RollingStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RollingStatus::Ok => "Ok",
            RollingStatus::NoSymmetryPoint => "NoSymmetryPoint",
            RollingStatus::InsufficientData => "InsufficientData",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RollingPoint {
    pub window_start_date: NaiveDate,
    pub window_end_date: NaiveDate,
    pub n_obs: usize,
    pub tn_at_zero: Option<f64>,
    pub c_star: Option<f64>,
    pub c_min: Option<f64>,
    pub c_max: Option<f64>,
    pub status: RollingStatus,
}

/// Number of windows `floor((len - window) / step) + 1`.
pub fn window_count(len: usize, window_days: usize, step_days: usize) -> usize {
    if len < window_days || step_days == 0 {
        0
    } else {
        (len - window_days) / step_days + 1
    }
}

pub fn roll(ps: &PriceSeries, cfg: &RollingConfig) -> Result<Vec<RollingPoint>> {
    cfg.validate()?;
    if ps.len() < cfg.window_days + 1 {
        return Err(Error::SeriesTooShort { len: ps.len(), window: cfg.window_days });
    }
    let threshold = lookup(cfg.alpha)?.point;
    let count = window_count(ps.len(), cfg.window_days, cfg.step_days);
    Ok((0..count)
        .into_par_iter()
        .map(|k| {
            let start = k * cfg.step_days;
            let end = start + cfg.window_days;
            window_point(ps, start, end, threshold, cfg)
        })
        .collect())
}

/// Full analysis of the price window `[start, end)`.
pub fn window_point(
    ps: &PriceSeries,
    start: usize,
    end: usize,
    threshold: f64,
    cfg: &RollingConfig,
) -> RollingPoint {
    let obs = build_from_prices(&ps.prices()[start..end], cfg.observable);
    let mut point = RollingPoint {
        window_start_date: ps.dates()[start],
        window_end_date: ps.dates()[end - 1],
        n_obs: obs.len(),
        tn_at_zero: None,
        c_star: None,
        c_min: None,
        c_max: None,
        status: RollingStatus::InsufficientData,
    };
    if obs.len() < cfg.min_entries {
        return point;
    }
    let Ok(at_zero) = TnEvaluator::new(obs.values()).at(0.0) else {
        return point;
    };
    point.tn_at_zero = Some(at_zero.statistic);
    match scan_with_threshold(obs.values(), cfg.alpha, threshold, &cfg.grid) {
        Ok(r) => {
            point.c_star = Some(r.c_star);
            point.c_min = Some(r.c_min);
            point.c_max = Some(r.c_max);
            point.status = RollingStatus::Ok;
        }
        Err(Error::NoSymmetryPoint { .. }) => point.status = RollingStatus::NoSymmetryPoint,
        Err(_) => {}
    }
    point
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

/// CSV `window_end_date,n_obs,tn_at_zero,c_star,c_min,c_max,status`.
pub fn to_csv(points: &[RollingPoint]) -> String {
    let mut out = String::from("window_end_date,n_obs,tn_at_zero,c_star,c_min,c_max,status\n");
    for p in points {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            p.window_end_date.format("%Y-%m-%d"),
            p.n_obs,
            opt(p.tn_at_zero),
            opt(p.c_star),
            opt(p.c_min),
            opt(p.c_max),
            p.status.as_str()
        ));
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub label: String,
    pub date: NaiveDate,
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct EventTable {
    pub rows: Vec<Event>,
}

impl EventTable {
    /// Crisis and critical market days commonly marked on the rolling plots.
    ///
    /// Rows are reproduced as published. Note the Brexit row: the referendum
    /// took place on 2016-06-23, but the published date is 2018-06-23, which
    /// also lies after a sample ending 2017-06-30 and therefore maps outside
    /// the range.
    pub fn market_events() -> Self {
        let row = |label: &str, y, m, d| Event {
            label: label.to_string(),
            date: NaiveDate::from_ymd_opt(y, m, d).expect("valid date"),
        };
        Self {
            rows: vec![
                row("Japanese asset price bubble", 1990, 1, 1),
                row("Tequila Effect", 1994, 12, 20),
                row("Dotcom bubble", 2000, 3, 10),
                row("Subprime crisis", 2007, 8, 9),
                row("Brexit", 2018, 6, 23),
            ],
        }
    }

    /// Reads a `label,date` CSV with ISO dates.
    pub fn from_csv<R: Read>(raw: R) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(raw);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| Error::Csv(e.to_string()))?;
            let line = rec.position().map(|p| p.line()).unwrap_or(0);
            let (Some(label), Some(date)) = (rec.get(0), rec.get(1)) else {
                return Err(Error::Csv(format!("line {line}: expected label,date")));
            };
            let date = NaiveDate::parse_from_str(date, "%Y-%m-%d")
                .map_err(|_| Error::Csv(format!("line {line}: bad date '{date}'")))?;
            rows.push(Event { label: label.to_string(), date });
        }
        Ok(Self { rows })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Annotation {
    pub label: String,
    pub event_date: NaiveDate,
    /// Index of the first window ending on or after the event.
    pub point_index: Option<usize>,
    pub window_end_date: Option<NaiveDate>,
    pub outside_range: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotatedSeries {
    pub points: Vec<RollingPoint>,
    pub annotations: Vec<Annotation>,
}

/// Attaches each event to the first window ending on or after it. Events
/// before the first window starts or after the last window ends are flagged
/// as outside the range.
pub fn annotate(points: &[RollingPoint], events: &EventTable) -> AnnotatedSeries {
    let annotations = events
        .rows
        .iter()
        .map(|e| {
            let first_start = points.first().map(|p| p.window_start_date);
            let idx = points.partition_point(|p| p.window_end_date < e.date);
            let inside = idx < points.len() && first_start.is_some_and(|s| e.date >= s);
            Annotation {
                label: e.label.clone(),
                event_date: e.date,
                point_index: inside.then_some(idx),
                window_end_date: inside.then(|| points[idx].window_end_date),
                outside_range: !inside,
            }
        })
        .collect();
    AnnotatedSeries { points: points.to_vec(), annotations }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn date(y: i32, m: u32, d: u32) -> NaiveDate {
        NaiveDate::from_ymd_opt(y, m, d).unwrap()
    }

    fn point(end: NaiveDate) -> RollingPoint {
        RollingPoint {
            window_start_date: end - chrono::Days::new(360),
            window_end_date: end,
            n_obs: 0,
            tn_at_zero: None,
            c_star: None,
            c_min: None,
            c_max: None,
            status: RollingStatus::InsufficientData,
        }
    }

    #[test]
    fn count_formula() {
        assert_eq!(window_count(300, 252, 1), 49);
        assert_eq!(window_count(300, 252, 5), 10);
        assert_eq!(window_count(252, 252, 1), 1);
        assert_eq!(window_count(100, 252, 1), 0);
    }

    #[test]
    fn config_validation() {
        let cfg = RollingConfig { window_days: 29, ..Default::default() };
        assert!(cfg.validate().is_err());
        let cfg = RollingConfig { step_days: 0, ..Default::default() };
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn too_short() {
        let ps = PriceSeries::from_prices("x", vec![1.0; 252]).unwrap();
        assert_eq!(
            roll(&ps, &RollingConfig::default()).unwrap_err(),
            Error::SeriesTooShort { len: 252, window: 252 }
        );
    }

    #[test]
    fn constant_prices_are_insufficient_everywhere() {
        let ps = PriceSeries::from_prices("x", vec![50.0; 300]).unwrap();
        for kind in ObservableKind::ALL {
            let cfg = RollingConfig { observable: kind, ..Default::default() };
            let pts = roll(&ps, &cfg).unwrap();
            assert_eq!(pts.len(), 49);
            assert!(pts.iter().all(|p| p.status == RollingStatus::InsufficientData));
            assert!(pts.iter().all(|p| p.tn_at_zero.is_none()));
        }
    }

    #[test]
    fn annotation_maps_forward() {
        let pts: Vec<_> = [date(2000, 3, 9), date(2000, 3, 13), date(2000, 3, 14)]
            .into_iter()
            .map(point)
            .collect();
        let a = annotate(&pts, &EventTable::market_events());
        let dotcom = &a.annotations[2];
        assert_eq!(dotcom.label, "Dotcom bubble");
        assert_eq!(dotcom.window_end_date, Some(date(2000, 3, 13)));
        assert_eq!(dotcom.point_index, Some(1));
        // events before the first window or after the last are flagged
        assert!(a.annotations[0].outside_range);
        assert!(a.annotations[4].outside_range);
        assert!(a.annotations[3].outside_range);
    }

    #[test]
    fn empty_event_table_is_identity() {
        let pts = vec![point(date(2001, 1, 2))];
        let a = annotate(&pts, &EventTable::default());
        assert!(a.annotations.is_empty());
        assert_eq!(a.points, pts);
    }

    #[test]
    fn events_csv() {
        let t = EventTable::from_csv("label,date\nCrash,1987-10-19\n".as_bytes()).unwrap();
        assert_eq!(t.rows, vec![Event { label: "Crash".into(), date: date(1987, 10, 19) }]);
        assert!(EventTable::from_csv("label,date\nCrash,10/19/1987\n".as_bytes()).is_err());
    }

    #[test]
    fn csv_columns() {
        let csv = to_csv(&[point(date(2001, 1, 2))]);
        assert_eq!(csv.lines().nth(1), Some("2001-01-02,0,,,,,InsufficientData"));
    }
}
