use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use genderprobe_core::jsonl::write_atomic;

/// Provenance record written next to each primary output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub tool_version: String,
    pub started_at: DateTime<Utc>,
    pub finished_at: DateTime<Utc>,
    /// Every effective flag value, secrets excluded.
    pub config: Value,
    pub inputs: Vec<PathBuf>,
    pub outputs: Vec<PathBuf>,
    #[serde(default)]
    pub stats: Value,
    #[serde(default)]
    pub failed_ids: Vec<String>,
}

impl RunManifest {
    pub fn start(command: &str, config: &impl Serialize) -> Result<Self> {
        let now = Utc::now();
        Ok(RunManifest {
            command: command.to_owned(),
            tool_version: env!("CARGO_PKG_VERSION").to_owned(),
            started_at: now,
            finished_at: now,
            config: serde_json::to_value(config).context("snapshotting flags")?,
            inputs: Vec::new(),
            outputs: Vec::new(),
            stats: Value::Null,
            failed_ids: Vec::new(),
        })
    }

    /// Stamps the finish time and writes `<output>.manifest.json`.
    pub fn finish(mut self, output: &Path) -> Result<PathBuf> {
        self.finished_at = Utc::now();
        let path = manifest_path(output);
        let body = serde_json::to_vec_pretty(&self)?;
        write_atomic(&path, |w| {
            w.write_all(&body)?;
            w.write_all(b"\n")
        })
        .with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}

pub fn manifest_path(output: &Path) -> PathBuf {
    let mut name = output.file_name().unwrap_or_default().to_os_string();
    name.push(".manifest.json");
    output.with_file_name(name)
}
