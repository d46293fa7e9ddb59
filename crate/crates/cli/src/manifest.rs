use std::fs;
use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputFile {
    pub path: String,
    pub sha256: String,
}

/// Provenance of one command. `run_spec` is the complete canonical input of
/// the run (every number that affects an output file) and `config_hash` its
/// SHA-256; replaying `command_line` against `run_spec` reproduces `outputs`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command_line: Vec<String>,
    pub run_spec: String,
    pub config_hash: String,
    pub seed: Option<u64>,
    pub started_at: String,
    pub finished_at: String,
    pub outputs: Vec<OutputFile>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}

impl RunManifest {
    pub fn begin(run_spec: String, seed: Option<u64>) -> Self {
        Self {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command_line: std::env::args().collect(),
            config_hash: sha256_hex(run_spec.as_bytes()),
            run_spec,
            seed,
            started_at: now(),
            finished_at: String::new(),
            outputs: Vec::new(),
        }
    }

    /// Hashes the written files, stamps the finish time and writes the manifest
    /// to `path`.
    pub fn finish(mut self, files: &[PathBuf], path: &Path) -> std::io::Result<Self> {
        for f in files {
            self.outputs.push(OutputFile {
                path: f.file_name().map_or_else(|| f.display().to_string(), |n| n.to_string_lossy().into_owned()),
                sha256: sha256_hex(&fs::read(f)?),
            });
        }
        self.finished_at = now();
        let text = serde_json::to_string_pretty(&self).map_err(std::io::Error::other)?;
        fs::write(path, text + "\n")?;
        Ok(self)
    }
}
