//! Run manifests: enough metadata to reproduce any output bit for bit.

use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

#[derive(Serialize)]
pub struct RunManifest {
    pub command: String,
    pub version: String,
    /// Full parameter map of the run; re-running with these reproduces the
    /// data files byte-identically (timestamps below excluded).
    pub parameters: serde_json::Value,
    pub master_seed: u64,
    pub outputs: Vec<String>,
    pub wall_clock_ms: u128,
    pub created_unix_ms: u128,
}

impl RunManifest {
    pub fn new(command: &str, parameters: serde_json::Value, master_seed: u64) -> Self {
        Self {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            parameters,
            master_seed,
            outputs: Vec::new(),
            wall_clock_ms: 0,
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
        }
    }

    pub fn record_output(&mut self, path: &Path) {
        self.outputs.push(path.display().to_string());
    }

    /// Write `<first output>.manifest.json` (or `<command>.manifest.json`
    /// when the run produced no files).
    pub fn write(mut self, wall_clock_ms: u128) -> std::io::Result<()> {
        self.wall_clock_ms = wall_clock_ms;
        let path = self
            .outputs
            .first()
            .map(|p| format!("{p}.manifest.json"))
            .unwrap_or_else(|| format!("{}.manifest.json", self.command));
        let body = serde_json::to_string_pretty(&self).expect("manifest serializes");
        std::fs::write(path, body + "\n")
    }
}
