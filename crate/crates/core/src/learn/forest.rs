//! Bootstrap-aggregated CART forest with per-tree seeded RNG streams,
//! so parallel and sequential training produce identical models.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{grow, TreeNode};
use crate::scalar::Real;
use crate::{Error, Result};

/// Size of the per-node feature sample.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSubset {
    /// `floor(sqrt(F))`, at least 1.
    Sqrt,
    /// Every feature at every node.
    All,
    /// A fixed subset size, clamped to the feature count.
    Fixed(usize),
}

impl FeatureSubset {
    pub fn resolve(self, n_features: usize) -> usize {
        match self {
            FeatureSubset::Sqrt => (((n_features as f64).sqrt()).floor() as usize).max(1),
            FeatureSubset::All => n_features.max(1),
            FeatureSubset::Fixed(size) => size.clamp(1, n_features.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub feature_subset: FeatureSubset,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 500,
            feature_subset: FeatureSubset::Sqrt,
            bootstrap: true,
            seed: 0,
        }
    }
}

/// Trained forest. The JSON serialization is versioned through
/// `format_version`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForestModel<F: Real> {
    pub format_version: u32,
    pub config: ForestConfig,
    pub n_features: usize,
    pub n_classes: usize,
    pub trees: Vec<TreeNode<F>>,
}

pub const FOREST_FORMAT_VERSION: u32 = 1;

/// Train `config.n_trees` trees, each on a bootstrap resample drawn
/// from a ChaCha stream seeded with `config.seed ^ tree_index`.
pub fn train_forest<F: Real>(
    features: &[Vec<F>],
    labels: &[usize],
    config: &ForestConfig,
) -> Result<ForestModel<F>> {
    if features.len() < 2 {
        return Err(Error::TooFewSamples {
            needed: 2,
            got: features.len(),
        });
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    if config.n_trees == 0 {
        return Err(Error::InvalidConfig {
            message: "forest needs at least one tree".into(),
        });
    }
    let n = features.len();
    let n_features = features[0].len();
    let n_classes = labels.iter().max().copied().unwrap_or(0) + 1;
    let max_features = config.feature_subset.resolve(n_features);

    let trees: Vec<TreeNode<F>> = (0..config.n_trees)
        .into_par_iter()
        .map(|tree_index| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed ^ tree_index as u64);
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            grow(features, labels, &rows, n_classes, max_features, &mut rng)
        })
        .collect();

    Ok(ForestModel {
        format_version: FOREST_FORMAT_VERSION,
        config: *config,
        n_features,
        n_classes,
        trees,
    })
}

impl<F: Real> ForestModel<F> {
    /// Majority vote over the trees; vote ties go to the lower bin.
    pub fn predict_row(&self, row: &[F]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::FeatureWidthMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let mut votes = vec![0usize; self.n_classes];
        for tree in &self.trees {
            votes[tree.predict_row(row)] += 1;
        }
        let mut best = 0;
        for (label, &count) in votes.iter().enumerate() {
            if count > votes[best] {
                best = label;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, rows: &[Vec<F>]) -> Result<Vec<usize>> {
        rows.iter().map(|row| self.predict_row(row)).collect()
    }
}
