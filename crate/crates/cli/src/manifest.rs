//! Run manifests: a JSON record of what a command did, sufficient to
//! re-execute it and reproduce every output byte-for-byte.
//!
//! The manifest is the last file a command writes, and the write is
//! atomic (a temporary file in the target directory renamed into place),
//! so a `manifest.json` never describes a half-finished run.

use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use cdm_core::error::{Error, Result};
use serde::{Deserialize, Serialize};

use crate::formats::{data_err, read_file};

/// Wall-clock seconds spent in one named phase of a command.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Phase {
    /// Phase name (`"load"`, `"fit"`, `"write"`, …).
    pub name: String,
    /// Wall-clock duration in seconds.
    pub seconds: f64,
}

/// The on-disk record of one command invocation.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    /// Always `"cdm"`.
    pub tool: String,
    /// Crate version that produced the run.
    pub version: String,
    /// Subcommand name (`"simulate"`, `"fit"`, …).
    pub command: String,
    /// The seed governing the run (0 for commands that draw nothing).
    pub seed: u64,
    /// Fully resolved configuration; `cdm rerun` re-executes it as-is.
    pub config: serde_json::Value,
    /// Paths the command read.
    pub inputs: Vec<String>,
    /// Files the command wrote, relative to the output directory.
    pub outputs: Vec<String>,
    /// Per-phase wall-clock timing.
    pub phases: Vec<Phase>,
}

impl RunManifest {
    /// Starts a manifest for `command` with a resolved `config` snapshot.
    pub fn new(command: &str, seed: u64, config: &impl Serialize) -> Result<Self> {
        Ok(RunManifest {
            tool: "cdm".to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            seed,
            config: serde_json::to_value(config)
                .map_err(|e| Error::config(format!("cannot serialize configuration: {e}")))?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            phases: Vec::new(),
        })
    }

    /// Atomically writes `manifest.json` into `dir`; returns its path.
    pub fn write_atomic(&self, dir: &Path) -> Result<PathBuf> {
        let path = dir.join("manifest.json");
        let text = crate::formats::to_json_pretty(self)?;
        let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(|e| data_err(dir, e))?;
        tmp.write_all(text.as_bytes())
            .map_err(|e| data_err(&path, e))?;
        tmp.persist(&path)
            .map_err(|e| data_err(&path, e.error))?;
        Ok(path)
    }

    /// Reads a manifest from an explicit file path.
    pub fn read(path: &Path) -> Result<RunManifest> {
        serde_json::from_str(&read_file(path)?).map_err(|e| data_err(path, e))
    }
}

/// Accumulates named, timed phases.
#[derive(Debug, Default)]
pub struct PhaseClock {
    phases: Vec<Phase>,
}

impl PhaseClock {
    /// An empty clock.
    pub fn new() -> Self {
        Self::default()
    }

    /// Runs `f`, recording its wall-clock duration under `name`.
    pub fn time<T>(&mut self, name: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let start = Instant::now();
        let out = f()?;
        self.phases.push(Phase {
            name: name.to_string(),
            seconds: start.elapsed().as_secs_f64(),
        });
        Ok(out)
    }

    /// Consumes the clock, yielding the recorded phases.
    pub fn into_phases(self) -> Vec<Phase> {
        self.phases
    }
}
