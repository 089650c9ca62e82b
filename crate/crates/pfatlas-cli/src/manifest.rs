//! Run manifests: every output artifact is accompanied by the resolved
//! configuration that reproduces it.

use anyhow::{Context, Result};
use serde::Serialize;
use std::path::{Path, PathBuf};

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: Vec<String>,
    pub tool_version: &'static str,
    pub case_fingerprint: Option<String>,
    pub seed: Option<u64>,
    /// Resolved configuration snapshot (flags merged with config file).
    pub config: serde_json::Value,
    /// Wall time, excluded from byte-reproducibility comparisons.
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn new(config: serde_json::Value) -> RunManifest {
        RunManifest {
            command: std::env::args().collect(),
            tool_version: env!("CARGO_PKG_VERSION"),
            case_fingerprint: None,
            seed: None,
            config,
            wall_time_seconds: 0.0,
            outputs: Vec::new(),
        }
    }

    pub fn write(&self, dir: &Path, stem: &str) -> Result<PathBuf> {
        let path = dir.join(format!("{stem}.manifest.json"));
        let text = serde_json::to_string_pretty(self).expect("manifest serializes");
        std::fs::write(&path, text)
            .with_context(|| format!("writing manifest {}", path.display()))?;
        Ok(path)
    }
}

/// Write a named artifact and record it in the manifest.
pub fn emit(dir: &Path, name: &str, contents: &str, manifest: &mut RunManifest) -> Result<PathBuf> {
    let path = dir.join(name);
    std::fs::write(&path, contents).with_context(|| format!("writing {}", path.display()))?;
    manifest.outputs.push(name.to_string());
    Ok(path)
}
