//! Provenance record written next to every simulate and tune output.

use std::path::{Path, PathBuf};

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::sim::SimConfig;

pub const MANIFEST_FILE: &str = "run_manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub seed: u64,
    pub version: String,
    pub started_at: String,
    pub finished_at: String,
    /// File names relative to the output directory.
    pub outputs: Vec<String>,
}

/// SHA-256 of the canonical TOML form, so formatting, comments and
/// spelled-out defaults do not change it.
pub fn config_hash(config: &SimConfig) -> String {
    hex::encode(Sha256::digest(config.to_toml().as_bytes()))
}

impl RunManifest {
    pub fn new(command: &str, config: &SimConfig, started: DateTime<Utc>, files: &[PathBuf]) -> Self {
        Self {
            command: command.into(),
            config_hash: config_hash(config),
            seed: config.seed,
            version: env!("CARGO_PKG_VERSION").into(),
            started_at: started.to_rfc3339_opts(SecondsFormat::Millis, true),
            finished_at: Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true),
            outputs: files
                .iter()
                .filter_map(|f| f.file_name())
                .map(|f| f.to_string_lossy().into_owned())
                .collect(),
        }
    }

    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        let text = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        std::fs::write(dir.join(MANIFEST_FILE), text + "\n")
    }
}
