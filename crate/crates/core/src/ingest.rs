//! Daily price CSV ingestion.
//!
//! Accepts Yahoo-style exports (`Date,Open,High,Low,Close,Adj Close,Volume`,
//! extra columns ignored) as well as the canonical two-column `date,price`
//! layout produced by [`PriceSeries::to_csv`]. Rows that cannot be used are
//! dropped and itemised in a [`CleaningReport`] rather than failing the parse.

use std::collections::BTreeMap;
use std::io::Read;

use chrono::NaiveDate;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PriceColumn {
    #[default]
    Close,
    AdjClose,
}

impl PriceColumn {
    fn header_aliases(self) -> &'static [&'static str] {
        match self {
            PriceColumn::Close => &["close"],
            PriceColumn::AdjClose => &["adj close", "adj_close", "adjclose", "adjusted close"],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DateFormat {
    /// YYYY-MM-DD
    #[default]
    Iso,
    /// MM/DD/YYYY
    Us,
}

impl DateFormat {
    fn parse(self, s: &str) -> Option<NaiveDate> {
        let s = s.trim();
        let fmt = match self {
            DateFormat::Iso => "%Y-%m-%d",
            DateFormat::Us => "%m/%d/%Y",
        };
        NaiveDate::parse_from_str(s, fmt).ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ParseOptions {
    pub symbol: String,
    pub price_column: PriceColumn,
    pub date_format: DateFormat,
}

impl Default for ParseOptions {
    fn default() -> Self {
        Self {
            symbol: "UNKNOWN".to_string(),
            price_column: PriceColumn::Close,
            date_format: DateFormat::Iso,
        }
    }
}

/// A dated series of strictly positive prices, one row per trading day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    symbol: String,
    dates: Vec<NaiveDate>,
    prices: Vec<f64>,
}

impl PriceSeries {
    /// Validates: equal lengths, at least two rows, strictly increasing
    /// dates, finite positive prices.
    pub fn new(symbol: impl Into<String>, dates: Vec<NaiveDate>, prices: Vec<f64>) -> Result<Self> {
        if dates.len() != prices.len() {
            return Err(Error::InvalidArgument(format!(
                "{} dates but {} prices",
                dates.len(),
                prices.len()
            )));
        }
        if prices.len() < 2 {
            return Err(Error::EmptySeries { found: prices.len() });
        }
        if let Some(w) = dates.windows(2).find(|w| w[0] >= w[1]) {
            return Err(Error::InvalidArgument(format!(
                "dates not strictly increasing at {} -> {}",
                w[0], w[1]
            )));
        }
        if let Some(p) = prices.iter().find(|p| !(p.is_finite() && **p > 0.0)) {
            return Err(Error::InvalidArgument(format!("non-positive or non-finite price {p}")));
        }
        Ok(Self { symbol: symbol.into(), dates, prices })
    }

    /// Builds a series on consecutive calendar days starting at 2000-01-03.
    /// Intended for synthetic data where dates are irrelevant.
    pub fn from_prices(symbol: impl Into<String>, prices: Vec<f64>) -> Result<Self> {
        let start = NaiveDate::from_ymd_opt(2000, 1, 3).expect("valid date");
        let dates = (0..prices.len())
            .map(|i| start + chrono::Days::new(i as u64))
            .collect();
        Self::new(symbol, dates, prices)
    }

    pub fn symbol(&self) -> &str {
        &self.symbol
    }

    pub fn dates(&self) -> &[NaiveDate] {
        &self.dates
    }

    pub fn prices(&self) -> &[f64] {
        &self.prices
    }

    pub fn len(&self) -> usize {
        self.prices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.prices.is_empty()
    }

    /// Contiguous sub-series `[start, end)`. Requires at least two rows.
    pub fn slice(&self, start: usize, end: usize) -> Result<Self> {
        if end > self.len() || start >= end {
            return Err(Error::InvalidArgument(format!("bad slice {start}..{end}")));
        }
        if end - start < 2 {
            return Err(Error::EmptySeries { found: end - start });
        }
        Ok(Self {
            symbol: self.symbol.clone(),
            dates: self.dates[start..end].to_vec(),
            prices: self.prices[start..end].to_vec(),
        })
    }

    /// Canonical `date,price` CSV. Prices use the shortest round-trip
    /// representation, so parsing the output reproduces the series exactly.
    pub fn to_csv(&self) -> String {
        let mut out = String::with_capacity(self.len() * 24 + 11);
        out.push_str("date,price\n");
        for (d, p) in self.dates.iter().zip(&self.prices) {
            out.push_str(&format!("{},{}\n", d.format("%Y-%m-%d"), p));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "reason", rename_all = "snake_case")]
pub enum DropReason {
    MissingPrice,
    NonNumericPrice { raw: String },
    NonPositivePrice { value: f64 },
    BadDate { raw: String },
    ShortRow,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedRow {
    /// 1-based line number in the source file.
    pub line: u64,
    #[serde(flatten)]
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CleaningReport {
    pub rows_read: usize,
    pub rows_kept: usize,
    pub dropped: Vec<DroppedRow>,
    /// Rows superseded by a later row carrying the same date.
    pub duplicate_dates: usize,
    /// True when the input was not already in ascending date order.
    pub reordered: bool,
}

impl CleaningReport {
    pub fn dropped_count(&self) -> usize {
        self.dropped.len()
    }
}

fn find_column(headers: &csv::StringRecord, aliases: &[&str]) -> Option<usize> {
    headers.iter().position(|h| {
        let h = h.trim().trim_start_matches('\u{feff}').to_ascii_lowercase();
        aliases.iter().any(|a| *a == h)
    })
}

/// Parses a daily price CSV into a cleaned [`PriceSeries`].
pub fn parse_csv<R: Read>(raw: R, opts: &ParseOptions) -> Result<(PriceSeries, CleaningReport)> {
    let mut rdr = csv::ReaderBuilder::new()
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(raw);
    let headers = rdr.headers().map_err(|e| Error::Csv(e.to_string()))?.clone();

    let date_idx = find_column(&headers, &["date"]);
    let price_idx = find_column(&headers, opts.price_column.header_aliases())
        .or_else(|| find_column(&headers, &["price"]));
    let (date_idx, price_idx) = match (date_idx, price_idx) {
        (Some(d), Some(p)) => (d, p),
        (d, p) => {
            let mut missing = Vec::new();
            if d.is_none() {
                missing.push("Date".to_string());
            }
            if p.is_none() {
                missing.push(match opts.price_column {
                    PriceColumn::Close => "Close".to_string(),
                    PriceColumn::AdjClose => "Adj Close".to_string(),
                });
            }
            return Err(Error::MalformedHeader { missing });
        }
    };

    let mut report = CleaningReport::default();
    let mut by_date: BTreeMap<NaiveDate, f64> = BTreeMap::new();
    let mut last_date: Option<NaiveDate> = None;

    for record in rdr.records() {
        let record = record.map_err(|e| Error::Csv(e.to_string()))?;
        report.rows_read += 1;
        let line = record.position().map(|p| p.line()).unwrap_or(0);

        let (Some(date_raw), Some(price_raw)) = (record.get(date_idx), record.get(price_idx)) else {
            report.dropped.push(DroppedRow { line, reason: DropReason::ShortRow });
            continue;
        };
        let Some(date) = opts.date_format.parse(date_raw) else {
            report.dropped.push(DroppedRow {
                line,
                reason: DropReason::BadDate { raw: date_raw.to_string() },
            });
            continue;
        };
        if price_raw.is_empty() {
            report.dropped.push(DroppedRow { line, reason: DropReason::MissingPrice });
            continue;
        }
        let price = match price_raw.parse::<f64>() {
            Ok(p) if p.is_finite() => p,
            _ => {
                report.dropped.push(DroppedRow {
                    line,
                    reason: DropReason::NonNumericPrice { raw: price_raw.to_string() },
                });
                continue;
            }
        };
        if price <= 0.0 {
            report.dropped.push(DroppedRow {
                line,
                reason: DropReason::NonPositivePrice { value: price },
            });
            continue;
        }

        if let Some(prev) = last_date {
            if date <= prev {
                report.reordered |= date < prev;
            }
        }
        last_date = Some(date);
        if by_date.insert(date, price).is_some() {
            report.duplicate_dates += 1;
        }
    }

    report.rows_kept = by_date.len();
    if by_date.len() < 2 {
        return Err(Error::EmptySeries { found: by_date.len() });
    }
    let (dates, prices): (Vec<_>, Vec<_>) = by_date.into_iter().unzip();
    let series = PriceSeries::new(opts.symbol.clone(), dates, prices)?;
    Ok((series, report))
}
