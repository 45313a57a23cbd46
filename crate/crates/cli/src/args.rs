use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::{Deserialize, Serialize};
use trendsym::{ObservableKind, PriceColumn};

#[derive(Debug, Parser)]
#[command(name = "trendsym", version, about = "Symmetry analysis of daily price series")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalArgs {
    /// Price column to read from Yahoo-style files.
    #[arg(long, value_enum, default_value_t = ColumnArg::Close, global = true)]
    pub price_column: ColumnArg,
    /// Dates are MM/DD/YYYY instead of YYYY-MM-DD.
    #[arg(long, global = true)]
    pub us_dates: bool,
    /// Emit a JSON document (with embedded run manifest) instead of text.
    #[arg(long, global = true)]
    pub json: bool,
    /// Seed for commands that simulate.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Write the main output here instead of stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

/// The settings that affect output content; recorded in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Settings {
    pub price_column: ColumnArg,
    pub us_dates: bool,
    pub json: bool,
}

impl From<&GlobalArgs> for Settings {
    fn from(g: &GlobalArgs) -> Self {
        Self { price_column: g.price_column, us_dates: g.us_dates, json: g.json }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ColumnArg {
    Close,
    Adjclose,
}

impl From<ColumnArg> for PriceColumn {
    fn from(c: ColumnArg) -> Self {
        match c {
            ColumnArg::Close => PriceColumn::Close,
            ColumnArg::Adjclose => PriceColumn::AdjClose,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObservableArg {
    Returns,
    Treturns,
    Tvreturns,
}

impl From<ObservableArg> for ObservableKind {
    fn from(o: ObservableArg) -> Self {
        match o {
            ObservableArg::Returns => ObservableKind::Returns,
            ObservableArg::Treturns => ObservableKind::TReturns,
            ObservableArg::Tvreturns => ObservableKind::TVReturns,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "command")]
pub enum Command {
    /// Descriptive statistics of all three observables for each file.
    Describe(DescribeArgs),
    /// Test symmetry of one observable around a point.
    Test(TestArgs),
    /// Scan for the interval of plausible symmetry points.
    Scan(ScanArgs),
    /// Rolling-window symmetry analysis.
    Roll(RollArgs),
    /// Critical points of the limiting null distribution.
    Critical(CriticalArgs),
    /// Re-run the command recorded in a manifest (or a JSON output embedding one).
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Describe(_) => "describe",
            Command::Test(_) => "test",
            Command::Scan(_) => "scan",
            Command::Roll(_) => "roll",
            Command::Critical(_) => "critical",
            Command::Replay(_) => "replay",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct DescribeArgs {
    #[arg(required = true)]
    pub files: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct TestArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = ObservableArg::Returns)]
    pub observable: ObservableArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Candidate symmetry point.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub c: f64,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ScanArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = ObservableArg::Returns)]
    pub observable: ObservableArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    #[arg(long, default_value_t = 2001)]
    pub grid_points: usize,
    /// Absolute half-width of the grid around the median (default: automatic).
    #[arg(long)]
    pub grid_span: Option<f64>,
    #[arg(long, default_value_t = 6)]
    pub max_expansions: usize,
    /// Also write the Tn(c) curve as CSV to this path.
    #[arg(long)]
    pub curve: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RollArgs {
    pub file: PathBuf,
    #[arg(long, value_enum, default_value_t = ObservableArg::Returns)]
    pub observable: ObservableArg,
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Window length in trading days.
    #[arg(long, default_value_t = 252)]
    pub window: usize,
    #[arg(long, default_value_t = 1)]
    pub step: usize,
    #[arg(long, default_value_t = 30)]
    pub min_entries: usize,
    /// Events to annotate: `default` for the built-in table, or a `label,date` CSV.
    #[arg(long)]
    pub events: Option<String>,
    /// Write event annotations as CSV to this path.
    #[arg(long)]
    pub annotations: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CriticalArgs {
    #[arg(long, default_value_t = 0.05)]
    pub alpha: f64,
    /// Estimate the point by simulating the limiting law instead of the table.
    #[arg(long)]
    pub simulate: bool,
    #[arg(long, default_value_t = 100_000)]
    pub paths: usize,
    #[arg(long, default_value_t = 4096)]
    pub steps: usize,
    /// Estimate the finite-sample point for this sample size instead.
    #[arg(long, conflicts_with = "simulate")]
    pub finite_n: Option<usize>,
    #[arg(long, default_value_t = 10_000)]
    pub reps: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    pub manifest: PathBuf,
}
