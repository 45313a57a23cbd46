mod args;
mod commands;
mod manifest;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::Context;
use clap::Parser;

use args::{Cli, Command, Settings};
use manifest::{input_paths, Inputs, RunManifest};

/// Invalid combination of arguments; exit code 1.
#[derive(Debug)]
pub struct UsageError(pub String);

/// Input data that cannot be analysed; exit code 2.
#[derive(Debug)]
pub struct DataError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

impl std::fmt::Display for DataError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for DataError {}

const EXIT_USAGE: u8 = 1;
const EXIT_DATA: u8 = 2;

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<UsageError>() {
            return EXIT_USAGE;
        }
        if let Some(e) = cause.downcast_ref::<trendsym::Error>() {
            return match e {
                trendsym::Error::InvalidArgument(_) | trendsym::Error::OutOfTableRange { .. } => EXIT_USAGE,
                trendsym::Error::NoSymmetryPoint { .. } => 3,
                _ => EXIT_DATA,
            };
        }
    }
    EXIT_DATA
}

fn sidecar(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

fn write_file(path: &Path, contents: &str) -> anyhow::Result<()> {
    std::fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn execute(cmd: Command, settings: Settings, seed: Option<u64>, out: Option<PathBuf>) -> anyhow::Result<u8> {
    let (cmd, settings, seed, inputs, manifest) = match cmd {
        Command::Replay(r) => {
            let m = RunManifest::read(&r.manifest)?;
            let paths: Vec<PathBuf> = m.input_digest.iter().map(|d| d.path.clone()).collect();
            let inputs = Inputs::load(&paths)?;
            m.verify(&inputs)?;
            (m.config.args.clone(), m.config.settings.clone(), m.seed, inputs, m)
        }
        cmd => {
            let inputs = Inputs::load(&input_paths(&cmd))?;
            let m = RunManifest::new(&cmd, &settings, seed, &inputs);
            (cmd, settings, seed, inputs, m)
        }
    };

    let report = commands::run(&cmd, &settings, seed, &inputs)?;
    let manifest_json = serde_json::to_string_pretty(&manifest)? + "\n";
    let body = if settings.json {
        let doc = serde_json::json!({ "manifest": manifest, "result": report.result });
        serde_json::to_string_pretty(&doc)? + "\n"
    } else {
        report.text
    };
    match &out {
        Some(path) => {
            write_file(path, &body)?;
            if !settings.json {
                write_file(&sidecar(path), &manifest_json)?;
            }
        }
        None => std::io::stdout().write_all(body.as_bytes())?,
    }
    for (path, contents) in &report.artifacts {
        write_file(path, contents)?;
        write_file(&sidecar(path), &manifest_json)?;
    }
    Ok(report.exit_code as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE } else { 0 });
        }
    };
    let settings = Settings::from(&cli.global);
    match execute(cli.command, settings, cli.global.seed, cli.global.out) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
