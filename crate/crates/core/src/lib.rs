//! Symmetry analysis of financial return distributions.
//!
//! The crate computes the empirical-likelihood symmetry statistic `Tn` for
//! daily log-returns and for two trend-based observables (trend returns and
//! trend returns per day), locates the interval of plausible symmetry points
//! and the most plausible point, and tracks both through rolling windows.

pub mod critical;
pub mod density;
pub mod error;
pub mod ingest;
pub mod numeric;
pub mod observables;
pub mod rolling;
pub mod scan;
pub mod tn;

pub use critical::{lookup, CriticalPoint, CriticalTable, McConfig, PointSource};
pub use density::{density_profile, DensityProfile, Mode};
pub use error::{Error, Result};
pub use ingest::{parse_csv, CleaningReport, DateFormat, ParseOptions, PriceColumn, PriceSeries};
pub use observables::{
    daily_returns, describe, segment_trends, trend_returns, DescriptiveStats, Direction,
    ObservableKind, ObservableSeries, Trend,
};
pub use rolling::{annotate, roll, EventTable, RollingConfig, RollingPoint, RollingStatus};
pub use scan::{exact_breakpoints, scan, GridSpec, SymmetryResult, TnCurve};
pub use tn::{tn, tn_shifted, TnEvaluator, TnValue};
