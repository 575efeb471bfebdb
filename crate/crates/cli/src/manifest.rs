use std::fs;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::Failure;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RunManifest {
    pub command: String,
    pub config: Value,
    pub tool_version: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub master_seed: Option<u64>,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub outputs: Vec<String>,
}

pub fn now_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

impl RunManifest {
    pub fn new(command: &str, config: &impl Serialize, master_seed: Option<u64>, started: u64) -> Self {
        Self {
            command: command.into(),
            config: serde_json::to_value(config).expect("configs serialize"),
            tool_version: env!("CARGO_PKG_VERSION").into(),
            master_seed,
            started_unix_ms: started,
            finished_unix_ms: 0,
            outputs: Vec::new(),
        }
    }

    pub fn write(mut self, path: &Path, outputs: &[&Path]) -> Result<(), Failure> {
        self.finished_unix_ms = now_ms();
        self.outputs = outputs
            .iter()
            .map(|p| p.file_name().map_or_else(|| p.display().to_string(), |f| f.to_string_lossy().into_owned()))
            .collect();
        write_json(path, &self)
    }
}

/// `out.json` → `out.manifest.json`.
pub fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    out.with_file_name(format!("{stem}.manifest.json"))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), Failure> {
    let mut text = serde_json::to_string_pretty(value).expect("reports serialize");
    text.push('\n');
    fs::write(path, text).map_err(|e| Failure::io(path, e))
}
