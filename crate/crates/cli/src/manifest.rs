//! Reproducibility manifest: one per output directory, echoing the
//! resolved settings, input digests, and per-stage timings.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Serialize)]
pub struct InputDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct StageTiming {
    pub stage: String,
    pub millis: u128,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub artifact_version: String,
    pub subcommand: String,
    pub seed: u64,
    pub settings: serde_json::Value,
    pub inputs: Vec<InputDigest>,
    pub timings: Vec<StageTiming>,
}

/// Collects stage timings while a subcommand runs.
pub struct Stages {
    entries: Vec<StageTiming>,
}

impl Stages {
    pub fn new() -> Self {
        Stages {
            entries: Vec::new(),
        }
    }

    pub fn time<T>(&mut self, stage: &str, body: impl FnOnce() -> T) -> T {
        let start = Instant::now();
        let value = body();
        self.entries.push(StageTiming {
            stage: stage.to_string(),
            millis: start.elapsed().as_millis(),
        });
        value
    }
}

fn sha256_of(path: &Path) -> Result<String, CliError> {
    let bytes = std::fs::read(path)
        .map_err(|err| CliError::Data(format!("cannot read {}: {err}", path.display())))?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

/// Write `manifest.json` into the output directory.
pub fn write_manifest(
    out_dir: &Path,
    subcommand: &str,
    seed: u64,
    settings: serde_json::Value,
    input_paths: &[PathBuf],
    stages: Stages,
) -> Result<(), CliError> {
    let mut inputs = Vec::with_capacity(input_paths.len());
    for path in input_paths {
        inputs.push(InputDigest {
            sha256: sha256_of(path)?,
            path: path.display().to_string(),
        });
    }

    let manifest = RunManifest {
        artifact_version: env!("CARGO_PKG_VERSION").to_string(),
        subcommand: subcommand.to_string(),
        seed,
        settings,
        inputs,
        timings: stages.entries,
    };
    let path = out_dir.join("manifest.json");
    let mut text = serde_json::to_string_pretty(&manifest)?;
    text.push('\n');
    std::fs::write(&path, text)
        .map_err(|err| CliError::Runtime(format!("cannot write {}: {err}", path.display())))?;
    Ok(())
}
