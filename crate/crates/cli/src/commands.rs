use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use serde_json::{json, Value};
use trendsym::critical::{simulate_finite_sample_quantile, simulated_point, McConfig};
use trendsym::observables::build;
use trendsym::rolling::{self, annotate, roll, EventTable, RollingConfig};
use trendsym::scan::{scan, GridSpec, SpanSpec};
use trendsym::{
    density_profile, describe, lookup, parse_csv, CleaningReport, DateFormat, Error, ObservableKind,
    ParseOptions, PriceSeries, TnEvaluator,
};

use crate::args::{Command, CriticalArgs, DescribeArgs, RollArgs, ScanArgs, Settings, TestArgs};
use crate::manifest::Inputs;

/// What a command produced, before it is rendered as text or JSON.
pub struct Report {
    pub text: String,
    pub result: Value,
    /// Additional artifacts (path, contents), e.g. curve CSVs.
    pub artifacts: Vec<(PathBuf, String)>,
    pub exit_code: i32,
}

impl Report {
    fn ok(text: String, result: Value) -> Self {
        Self { text, result, artifacts: Vec::new(), exit_code: 0 }
    }
}

pub fn run(cmd: &Command, settings: &Settings, seed: Option<u64>, inputs: &Inputs) -> anyhow::Result<Report> {
    match cmd {
        Command::Describe(a) => cmd_describe(a, settings, inputs),
        Command::Test(a) => cmd_test(a, settings, inputs),
        Command::Scan(a) => cmd_scan(a, settings, inputs),
        Command::Roll(a) => cmd_roll(a, settings, inputs),
        Command::Critical(a) => cmd_critical(a, seed),
        Command::Replay(_) => anyhow::bail!(crate::UsageError("a manifest cannot record a replay".into())),
    }
}

fn symbol_of(path: &Path) -> String {
    path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "UNKNOWN".into())
}

fn load_series(path: &Path, settings: &Settings, inputs: &Inputs) -> anyhow::Result<(PriceSeries, CleaningReport)> {
    let opts = ParseOptions {
        symbol: symbol_of(path),
        price_column: settings.price_column.into(),
        date_format: if settings.us_dates { DateFormat::Us } else { DateFormat::Iso },
    };
    let (ps, report) =
        parse_csv(inputs.get(path), &opts).with_context(|| format!("parsing {}", path.display()))?;
    if !settings.json {
        warn_cleaning(path, &report);
    }
    Ok((ps, report))
}

fn warn_cleaning(path: &Path, r: &CleaningReport) {
    if let Some(first) = r.dropped.first() {
        eprintln!(
            "warning: {}: dropped {} row(s), first at line {} ({:?})",
            path.display(),
            r.dropped.len(),
            first.line,
            first.reason
        );
    }
    if r.duplicate_dates > 0 {
        eprintln!("warning: {}: {} duplicate date(s), kept the last", path.display(), r.duplicate_dates);
    }
    if r.reordered {
        eprintln!("warning: {}: rows were not in date order and have been sorted", path.display());
    }
}

fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "-".into()
    } else if v == 0.0 || (1e-3..1e4).contains(&v.abs()) {
        format!("{v:.4}")
    } else {
        format!("{v:.3e}")
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(fmt_num).unwrap_or_else(|| "-".into())
}

#[derive(Serialize)]
struct DescribeRow {
    observable: ObservableKind,
    #[serde(flatten)]
    stats: trendsym::DescriptiveStats,
    modes: Option<usize>,
    peak_ratio: Option<f64>,
}

fn cmd_describe(a: &DescribeArgs, settings: &Settings, inputs: &Inputs) -> anyhow::Result<Report> {
    let mut text = String::new();
    let mut files = Vec::new();
    for path in &a.files {
        let (ps, cleaning) = load_series(path, settings, inputs)?;
        let mut rows = Vec::new();
        for kind in ObservableKind::ALL {
            let obs = build(&ps, kind);
            let stats = describe(&obs).with_context(|| format!("{}: {kind}", path.display()))?;
            let density = density_profile(obs.values()).ok();
            rows.push(DescribeRow {
                observable: kind,
                stats,
                modes: density.as_ref().map(|d| d.modes.len()),
                peak_ratio: density.and_then(|d| d.peak_ratio),
            });
        }

        writeln!(text, "{} ({}), {} prices, {} to {}", ps.symbol(), path.display(), ps.len(), ps.dates()[0], ps.dates()[ps.len() - 1])?;
        writeln!(
            text,
            "  {:<10} {:>7} {:>11} {:>11} {:>11} {:>9} {:>9} {:>10}",
            "observable", "n", "mean", "mean_se", "std", "skewness", "kurtosis", "peak_ratio"
        )?;
        for r in &rows {
            let s = &r.stats;
            writeln!(
                text,
                "  {:<10} {:>7} {:>11} {:>11} {:>11} {:>9} {:>9} {:>10}",
                r.observable.label(),
                s.n,
                fmt_num(s.mean),
                fmt_num(s.mean_stderr),
                fmt_num(s.std),
                fmt_num(s.skewness),
                fmt_num(s.kurtosis),
                fmt_opt(r.peak_ratio)
            )?;
        }
        files.push(json!({
            "path": path,
            "symbol": ps.symbol(),
            "prices": ps.len(),
            "first_date": ps.dates()[0],
            "last_date": ps.dates()[ps.len() - 1],
            "cleaning": cleaning,
            "rows": rows,
        }));
    }
    Ok(Report::ok(text, json!({ "files": files })))
}

fn cmd_test(a: &TestArgs, settings: &Settings, inputs: &Inputs) -> anyhow::Result<Report> {
    let (ps, _) = load_series(&a.file, settings, inputs)?;
    let kind = ObservableKind::from(a.observable);
    let obs = build(&ps, kind);
    let threshold = lookup(a.alpha)?.point;
    let v = TnEvaluator::new(obs.values()).at(a.c).with_context(|| format!("{}: {kind}", a.file.display()))?;
    let rejected = v.statistic >= threshold;
    let verdict = if rejected { "rejected" } else { "not rejected" };
    let mut text = String::new();
    writeln!(text, "observable  {kind}")?;
    writeln!(text, "n           {} ({} zero(s) dropped)", v.n_effective, v.zeros_dropped)?;
    writeln!(text, "c           {}", a.c)?;
    writeln!(text, "Tn(c)       {:.6}", v.statistic)?;
    writeln!(text, "T({})     {}", a.alpha, threshold)?;
    writeln!(text, "verdict     {verdict}: symmetry around c is {}", if rejected { "implausible" } else { "plausible" })?;
    let result = json!({
        "observable": kind,
        "alpha": a.alpha,
        "c": a.c,
        "statistic": v.statistic,
        "n_effective": v.n_effective,
        "zeros_dropped": v.zeros_dropped,
        "threshold": threshold,
        "rejected": rejected,
    });
    Ok(Report::ok(text, result))
}

fn cmd_scan(a: &ScanArgs, settings: &Settings, inputs: &Inputs) -> anyhow::Result<Report> {
    let (ps, _) = load_series(&a.file, settings, inputs)?;
    let kind = ObservableKind::from(a.observable);
    let obs = build(&ps, kind);
    let span = match a.grid_span {
        Some(h) => SpanSpec::HalfWidth(h),
        None => GridSpec::default().span,
    };
    let spec = GridSpec { points: a.grid_points, span, max_expansions: a.max_expansions };
    match scan(obs.values(), a.alpha, &spec) {
        Ok(r) => {
            let mut text = String::new();
            writeln!(text, "observable      {kind} (n = {})", obs.len())?;
            writeln!(text, "threshold       T({}) = {}", a.alpha, r.threshold)?;
            writeln!(text, "interval        ({}, {})", fmt_num(r.c_min), fmt_num(r.c_max))?;
            writeln!(text, "C               {}", fmt_num(r.c_star))?;
            writeln!(text, "Tn(C)           {:.6}", r.tn_at_c_star)?;
            writeln!(text, "Tn(0)           {}", r.tn_at_zero.map_or("-".into(), |t| format!("{t:.6}")))?;
            writeln!(text, "zero symmetric  {}", if r.zero_symmetric { "yes" } else { "no" })?;
            writeln!(text, "resolution      {}", fmt_num(r.resolution))?;
            if r.disconnected {
                writeln!(text, "note            plausible set is disconnected; outer hull reported")?;
            }
            if r.truncated {
                writeln!(text, "note            plausible set reaches the grid edge after all expansions")?;
            }
            let mut artifacts = Vec::new();
            if let Some(p) = &a.curve {
                artifacts.push((p.clone(), r.curve.to_csv()));
            }
            let mut result = serde_json::to_value(&r)?;
            result.as_object_mut().unwrap().remove("curve");
            result["observable"] = json!(kind);
            result["n"] = json!(obs.len());
            result["status"] = json!("ok");
            Ok(Report { text, result, artifacts, exit_code: 0 })
        }
        Err(Error::NoSymmetryPoint { min_tn, threshold }) => {
            let text = format!(
                "observable      {kind} (n = {})\nno plausible symmetry point: min Tn = {min_tn:.6} >= T({}) = {threshold}\n",
                obs.len(),
                a.alpha
            );
            let result = json!({
                "observable": kind,
                "n": obs.len(),
                "alpha": a.alpha,
                "threshold": threshold,
                "min_tn": min_tn,
                "status": "no_symmetry_point",
            });
            Ok(Report { text, result, artifacts: Vec::new(), exit_code: 3 })
        }
        Err(e) => Err(anyhow::Error::new(e).context(format!("{}: {kind}", a.file.display()))),
    }
}

fn cmd_roll(a: &RollArgs, settings: &Settings, inputs: &Inputs) -> anyhow::Result<Report> {
    let (ps, _) = load_series(&a.file, settings, inputs)?;
    let cfg = RollingConfig {
        window_days: a.window,
        step_days: a.step,
        alpha: a.alpha,
        observable: a.observable.into(),
        min_entries: a.min_entries,
        ..Default::default()
    };
    let points = roll(&ps, &cfg).with_context(|| a.file.display().to_string())?;
    let events = match a.events.as_deref() {
        None => None,
        Some("default") => Some(EventTable::market_events()),
        Some(path) => Some(
            EventTable::from_csv(inputs.get(Path::new(path))).with_context(|| format!("parsing {path}"))?,
        ),
    };
    let annotated = events.map(|e| annotate(&points, &e));
    let mut artifacts = Vec::new();
    if let (Some(path), Some(an)) = (&a.annotations, &annotated) {
        let mut csv = String::from("label,event_date,window_end_date,point_index,outside_range\n");
        for x in &an.annotations {
            writeln!(
                csv,
                "\"{}\",{},{},{},{}",
                x.label.replace('"', "\"\""),
                x.event_date,
                x.window_end_date.map(|d| d.to_string()).unwrap_or_default(),
                x.point_index.map(|i| i.to_string()).unwrap_or_default(),
                x.outside_range
            )?;
        }
        artifacts.push((path.clone(), csv));
    }
    let result = json!({
        "observable": cfg.observable,
        "window_days": cfg.window_days,
        "step_days": cfg.step_days,
        "alpha": cfg.alpha,
        "threshold": lookup(cfg.alpha)?.point,
        "points": points,
        "annotations": annotated.map(|an| an.annotations).unwrap_or_default(),
    });
    Ok(Report { text: rolling::to_csv(&points), result, artifacts, exit_code: 0 })
}

fn cmd_critical(a: &CriticalArgs, seed: Option<u64>) -> anyhow::Result<Report> {
    let seed = seed.unwrap_or(McConfig::DEFAULT_SEED);
    let (point, source, stderr, detail) = if let Some(n) = a.finite_n {
        if !(a.alpha > 0.0 && a.alpha < 1.0) {
            anyhow::bail!(crate::UsageError(format!("alpha {} outside (0, 1)", a.alpha)));
        }
        let q = simulate_finite_sample_quantile(n, &[1.0 - a.alpha], a.reps, seed)?[0];
        (q, "finite_sample".to_string(), None, json!({ "n": n, "reps": a.reps, "seed": seed }))
    } else if a.simulate {
        let cfg = McConfig::new(a.paths, a.steps, seed);
        let p = simulated_point(a.alpha, &cfg)?;
        (p.point, "simulated".into(), p.stderr_estimate, serde_json::to_value(cfg)?)
    } else {
        let p = lookup(a.alpha)?;
        let source = serde_json::to_value(p.source)?.as_str().unwrap_or_default().to_string();
        (p.point, source, None, Value::Null)
    };
    let mut text = format!("T({}) = {}", a.alpha, (point * 1e6).round() / 1e6);
    match stderr {
        Some(se) => writeln!(text, "  ({source}, se {se:.4})")?,
        None => writeln!(text, "  ({source})")?,
    }
    let result = json!({
        "alpha": a.alpha,
        "point": point,
        "source": source,
        "stderr_estimate": stderr,
        "simulation": detail,
    });
    Ok(Report::ok(text, result))
}
