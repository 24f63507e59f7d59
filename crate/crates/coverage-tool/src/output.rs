//! Output-directory plumbing: CSV files, JSON summaries, and the run
//! manifest.
//!
//! Data files (every `.csv` and `summary`/command JSON) are deterministic
//! for a fixed scenario and seed. The manifest carries the one volatile
//! field, wall-clock duration, so byte-level comparisons should skip
//! `manifest.json` (or ignore its `duration_ms`).

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;

use crate::scenario_file::ToolScenario;

/// Everything needed to reproduce a run, written next to its outputs.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    /// Scenario echo in the key-value input format (also written to
    /// `scenario.txt` for direct re-ingestion).
    pub scenario: String,
    pub seed: u64,
    pub samples: usize,
    /// True when the sample count came from `COVERAGE_TOOL_SAMPLES`.
    pub samples_env_override: bool,
    pub workers_requested: usize,
    pub duration_ms: u128,
}

pub struct OutputDir {
    dir: PathBuf,
    command: String,
    workers: usize,
    started: Instant,
}

impl OutputDir {
    pub fn create(dir: &Path, command: &str, workers: usize) -> std::io::Result<Self> {
        fs::create_dir_all(dir)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            workers,
            started: Instant::now(),
        })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.join(name)
    }

    /// Write a CSV file with a header row; fields print in full round-trip
    /// precision.
    pub fn write_csv<I>(&self, name: &str, header: &str, rows: I) -> std::io::Result<()>
    where
        I: IntoIterator<Item = String>,
    {
        let mut file = fs::File::create(self.path(name))?;
        writeln!(file, "{header}")?;
        for row in rows {
            writeln!(file, "{row}")?;
        }
        Ok(())
    }

    pub fn write_json<T: Serialize>(&self, name: &str, value: &T) -> std::io::Result<()> {
        let mut file = fs::File::create(self.path(name))?;
        let text = serde_json::to_string_pretty(value).expect("serializable value");
        writeln!(file, "{text}")?;
        Ok(())
    }

    /// Write `scenario.txt` and `manifest.json`; call once, last.
    pub fn finish(self, scenario: &ToolScenario) -> std::io::Result<()> {
        let echo = scenario.echo();
        fs::write(self.path("scenario.txt"), &echo)?;
        let manifest = RunManifest {
            command: self.command,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            scenario: echo,
            seed: scenario.seed,
            samples: scenario.samples,
            samples_env_override: scenario.samples_from_env,
            workers_requested: self.workers,
            duration_ms: self.started.elapsed().as_millis(),
        };
        let mut file = fs::File::create(self.dir.join("manifest.json"))?;
        let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        writeln!(file, "{text}")?;
        Ok(())
    }
}

/// Full round-trip decimal formatting for CSV fields.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}
