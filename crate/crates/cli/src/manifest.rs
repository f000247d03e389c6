//! Run manifest: config echo, tool version, seeds, wall clock, and a digest
//! inventory of every output file.

use crate::error::CliError;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct OutputRecord {
    pub file: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool_version: String,
    pub task: String,
    pub seed: u64,
    pub config_echo: String,
    pub wall_clock_ms: u128,
    pub outputs: Vec<OutputRecord>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        hex.push_str(&format!("{b:02x}"));
    }
    hex
}

impl RunManifest {
    pub fn record_output(
        &mut self,
        dir: &Path,
        name: &str,
        contents: &str,
    ) -> Result<PathBuf, CliError> {
        let path = dir.join(name);
        std::fs::write(&path, contents)?;
        self.outputs.push(OutputRecord {
            file: name.to_string(),
            sha256: sha256_hex(contents.as_bytes()),
            bytes: contents.len() as u64,
        });
        Ok(path)
    }

    pub fn write(&self, dir: &Path) -> Result<(), CliError> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Config(format!("manifest serialization: {e}")))?;
        std::fs::write(dir.join("manifest.json"), json)?;
        Ok(())
    }

    /// Recompute digests from the files on disk and compare with the
    /// recorded ones.
    pub fn digests_valid(&self, dir: &Path) -> Result<bool, CliError> {
        for rec in &self.outputs {
            let bytes = std::fs::read(dir.join(&rec.file))?;
            if sha256_hex(&bytes) != rec.sha256 {
                return Ok(false);
            }
        }
        Ok(true)
    }
}
