//! Flag/config-file resolution. Explicit flags win over config-file
//! values, which win over the documented defaults.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Optional values accepted in the `--config` JSON file. Field names
/// match the corresponding long flags.
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConfigFile {
    pub events: Option<PathBuf>,
    pub joins: Option<PathBuf>,
    pub horizon: Option<u32>,
    pub damping: Option<f64>,
    pub k: Option<usize>,
    pub bins: Option<usize>,
    pub trees: Option<usize>,
    pub folds: Option<usize>,
    pub splits: Option<usize>,
    pub holdout: Option<f64>,
    pub label_week: Option<u32>,
    pub cutoff_week: Option<u32>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub step: Option<f64>,
    pub l2: Option<f64>,
    pub jobs: Option<usize>,
}

impl ConfigFile {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|err| {
            CliError::Data(format!("cannot read config {}: {err}", path.display()))
        })?;
        serde_json::from_str(&text)
            .map_err(|err| CliError::Data(format!("invalid config {}: {err}", path.display())))
    }
}

/// Fully resolved run settings; echoed verbatim into the manifest.
#[derive(Debug, Clone, Serialize)]
pub struct Settings {
    pub events: Option<PathBuf>,
    pub joins: Option<PathBuf>,
    pub horizon: u32,
    pub damping: f64,
    pub k: usize,
    pub bins: usize,
    pub trees: usize,
    pub folds: usize,
    pub splits: usize,
    pub holdout: f64,
    pub label_week: u32,
    pub cutoff_week: u32,
    pub seed: u64,
    pub epochs: usize,
    pub step: f64,
    pub l2: f64,
    pub jobs: Option<usize>,
}

/// Raw optional values gathered from a subcommand's flags.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub events: Option<PathBuf>,
    pub joins: Option<PathBuf>,
    pub horizon: Option<u32>,
    pub damping: Option<f64>,
    pub k: Option<usize>,
    pub bins: Option<usize>,
    pub trees: Option<usize>,
    pub folds: Option<usize>,
    pub splits: Option<usize>,
    pub holdout: Option<f64>,
    pub label_week: Option<u32>,
    pub cutoff_week: Option<u32>,
    pub seed: Option<u64>,
    pub epochs: Option<usize>,
    pub step: Option<f64>,
    pub l2: Option<f64>,
    pub jobs: Option<usize>,
}

impl Overrides {
    pub fn resolve(self, file: ConfigFile) -> Settings {
        let horizon = self.horizon.or(file.horizon).unwrap_or(20);
        let label_week = self.label_week.or(file.label_week).unwrap_or(horizon);
        let cutoff_week = self.cutoff_week.or(file.cutoff_week).unwrap_or(label_week);
        Settings {
            events: self.events.or(file.events),
            joins: self.joins.or(file.joins),
            horizon,
            damping: self.damping.or(file.damping).unwrap_or(0.85),
            k: self.k.or(file.k).unwrap_or(3),
            bins: self.bins.or(file.bins).unwrap_or(7),
            trees: self.trees.or(file.trees).unwrap_or(500),
            folds: self.folds.or(file.folds).unwrap_or(8),
            splits: self.splits.or(file.splits).unwrap_or(25),
            holdout: self.holdout.or(file.holdout).unwrap_or(0.25),
            label_week,
            cutoff_week,
            seed: self.seed.or(file.seed).unwrap_or(0),
            epochs: self.epochs.or(file.epochs).unwrap_or(500),
            step: self.step.or(file.step).unwrap_or(0.2),
            l2: self.l2.or(file.l2).unwrap_or(1e-3),
            jobs: self.jobs.or(file.jobs),
        }
    }
}
