use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::args::{Command, Settings};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InputDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Invocation {
    pub settings: Settings,
    pub args: Command,
}

/// Everything needed to reproduce an output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config: Invocation,
    pub input_digest: Vec<InputDigest>,
    pub seed: Option<u64>,
    pub tool_version: String,
}

/// Input files read once up front, so the digests describe exactly the bytes analysed.
#[derive(Debug, Default)]
pub struct Inputs {
    files: BTreeMap<PathBuf, Vec<u8>>,
}

impl Inputs {
    pub fn load(paths: &[PathBuf]) -> anyhow::Result<Self> {
        let mut files = BTreeMap::new();
        for p in paths {
            let bytes = std::fs::read(p).with_context(|| format!("reading {}", p.display()))?;
            files.insert(p.clone(), bytes);
        }
        Ok(Self { files })
    }

    pub fn get(&self, path: &Path) -> &[u8] {
        &self.files[path]
    }

    fn digests(&self, order: &[PathBuf]) -> Vec<InputDigest> {
        order
            .iter()
            .map(|p| InputDigest { path: p.clone(), sha256: sha256_hex(&self.files[p]) })
            .collect()
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

/// Files a command reads, in argument order.
pub fn input_paths(cmd: &Command) -> Vec<PathBuf> {
    match cmd {
        Command::Describe(a) => {
            let mut seen = Vec::new();
            for f in &a.files {
                if !seen.contains(f) {
                    seen.push(f.clone());
                }
            }
            seen
        }
        Command::Test(a) => vec![a.file.clone()],
        Command::Scan(a) => vec![a.file.clone()],
        Command::Roll(a) => {
            let mut v = vec![a.file.clone()];
            if let Some(e) = a.events.as_deref().filter(|e| *e != "default") {
                v.push(PathBuf::from(e));
            }
            v
        }
        Command::Critical(_) | Command::Replay(_) => Vec::new(),
    }
}

/// Seed actually used, for commands that simulate.
pub fn resolved_seed(cmd: &Command, seed: Option<u64>) -> Option<u64> {
    match cmd {
        Command::Critical(a) if a.simulate || a.finite_n.is_some() => {
            Some(seed.unwrap_or(trendsym::McConfig::DEFAULT_SEED))
        }
        _ => None,
    }
}

impl RunManifest {
    pub fn new(cmd: &Command, settings: &Settings, seed: Option<u64>, inputs: &Inputs) -> Self {
        Self {
            command: cmd.name().to_string(),
            config: Invocation { settings: settings.clone(), args: cmd.clone() },
            input_digest: inputs.digests(&input_paths(cmd)),
            seed: resolved_seed(cmd, seed),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    /// Reads a bare manifest or a JSON output document with a `manifest` field.
    pub fn read(path: &Path) -> anyhow::Result<Self> {
        let raw = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let mut doc: serde_json::Value =
            serde_json::from_str(&raw).with_context(|| format!("parsing {}", path.display()))?;
        if let Some(inner) = doc.get_mut("manifest") {
            doc = inner.take();
        }
        serde_json::from_value(doc).with_context(|| format!("{} is not a run manifest", path.display()))
    }

    /// Fails when a recorded input no longer has the recorded content.
    pub fn verify(&self, inputs: &Inputs) -> anyhow::Result<()> {
        for d in &self.input_digest {
            let now = sha256_hex(inputs.get(&d.path));
            if now != d.sha256 {
                bail!(crate::DataError(format!(
                    "{} changed since the manifest was written (sha256 {now}, recorded {})",
                    d.path.display(),
                    d.sha256
                )));
            }
        }
        Ok(())
    }
}
