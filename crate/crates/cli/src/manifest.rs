use std::fs;
use std::io;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sfq_core::catalog::{config_sha256, SimulationConfig};

/// Reproducibility record written next to every artifact set.
#[derive(Debug, Serialize)]
pub struct RunManifest {
    /// SHA-256 of the effective config's canonical serialization.
    pub config_sha256: String,
    pub master_seed: u64,
    pub tool_version: String,
    pub generated_at: String,
    pub artifacts: Vec<String>,
}

/// Write `manifest.json` into `dir`, listing the artifact file names that a
/// successful command just produced.
pub fn write_manifest(dir: &Path, config: &SimulationConfig, artifacts: &[&str]) -> io::Result<PathBuf> {
    let manifest = RunManifest {
        config_sha256: config_sha256(config),
        master_seed: config.master_seed,
        tool_version: env!("CARGO_PKG_VERSION").to_string(),
        generated_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        artifacts: artifacts.iter().map(|s| s.to_string()).collect(),
    };
    let path = dir.join("manifest.json");
    let mut body = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    body.push('\n');
    fs::write(&path, body)?;
    Ok(path)
}
