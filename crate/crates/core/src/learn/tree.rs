//! CART classification tree: best-split search over a random feature
//! subset, candidate thresholds at midpoints of consecutive distinct
//! values, weighted Gini impurity as the criterion.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::scalar::{real_from_f64, real_from_usize, Real};
use crate::{Error, Result};

/// A trained tree node: an internal threshold split or a leaf carrying
/// the majority label and its class counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TreeNode<F: Real> {
    Split {
        feature: usize,
        threshold: F,
        left: Box<TreeNode<F>>,
        right: Box<TreeNode<F>>,
    },
    Leaf {
        label: usize,
        counts: Vec<usize>,
    },
}

impl<F: Real> TreeNode<F> {
    /// Route one feature row to its leaf label. Rows with a value at or
    /// below the threshold go left.
    pub fn predict_row(&self, row: &[F]) -> usize {
        let mut node = self;
        loop {
            match node {
                TreeNode::Leaf { label, .. } => return *label,
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    node = if row[*feature] <= *threshold {
                        left
                    } else {
                        right
                    };
                }
            }
        }
    }

    pub fn leaf_count(&self) -> usize {
        match self {
            TreeNode::Leaf { .. } => 1,
            TreeNode::Split { left, right, .. } => left.leaf_count() + right.leaf_count(),
        }
    }
}

/// Gini impurity of a class-count histogram.
pub(crate) fn gini<F: Real>(counts: &[usize], total: usize) -> F {
    if total == 0 {
        return F::zero();
    }
    let total_real = real_from_usize::<F>(total);
    let mut sum_sq = F::zero();
    for &count in counts {
        let p = real_from_usize::<F>(count) / total_real;
        sum_sq += p * p;
    }
    F::one() - sum_sq
}

fn majority_label(counts: &[usize]) -> usize {
    let mut best = 0;
    for (label, &count) in counts.iter().enumerate() {
        // Strict comparison keeps ties on the lower bin.
        if count > counts[best] {
            best = label;
        }
    }
    best
}

fn histogram(labels: &[usize], rows: &[usize], n_classes: usize) -> Vec<usize> {
    let mut counts = vec![0usize; n_classes];
    for &row in rows {
        counts[labels[row]] += 1;
    }
    counts
}

/// Grow a tree over the full sample with every class up to
/// `max(labels)` representable. Recursion stops on pure nodes or when
/// no sampled split strictly reduces the weighted impurity.
pub fn train_tree<F: Real, R: Rng>(
    features: &[Vec<F>],
    labels: &[usize],
    max_features: usize,
    rng: &mut R,
) -> Result<TreeNode<F>> {
    if features.is_empty() {
        return Err(Error::TooFewSamples {
            needed: 1,
            got: 0,
        });
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let n_classes = labels.iter().max().copied().unwrap_or(0) + 1;
    let rows: Vec<usize> = (0..features.len()).collect();
    Ok(grow(features, labels, &rows, n_classes, max_features, rng))
}

pub(crate) fn grow<F: Real, R: Rng>(
    features: &[Vec<F>],
    labels: &[usize],
    rows: &[usize],
    n_classes: usize,
    max_features: usize,
    rng: &mut R,
) -> TreeNode<F> {
    let counts = histogram(labels, rows, n_classes);
    let total = rows.len();
    let parent_impurity = gini::<F>(&counts, total);
    if parent_impurity == F::zero() {
        return TreeNode::Leaf {
            label: majority_label(&counts),
            counts,
        };
    }

    let n_features = features[rows[0]].len();
    let sample_size = max_features.clamp(1, n_features);
    let mut candidates = rand::seq::index::sample(rng, n_features, sample_size).into_vec();
    candidates.sort_unstable();

    let mut best: Option<(F, usize, F)> = None; // (weighted impurity, feature, threshold)
    let half = real_from_f64::<F>(0.5);
    let total_real = real_from_usize::<F>(total);
    let mut ordered: Vec<(F, usize)> = Vec::with_capacity(total);
    let mut left_counts = vec![0usize; n_classes];
    for &feature in &candidates {
        ordered.clear();
        ordered.extend(rows.iter().map(|&row| (features[row][feature], labels[row])));
        ordered.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap_or(std::cmp::Ordering::Equal));

        left_counts.iter_mut().for_each(|c| *c = 0);
        let mut right_counts = counts.clone();
        for position in 1..total {
            let (value, label) = ordered[position - 1];
            left_counts[label] += 1;
            right_counts[label] -= 1;
            let next_value = ordered[position].0;
            if next_value == value {
                continue;
            }
            let threshold = (value + next_value) * half;
            let left_total = position;
            let right_total = total - position;
            let weighted = (real_from_usize::<F>(left_total) * gini::<F>(&left_counts, left_total)
                + real_from_usize::<F>(right_total) * gini::<F>(&right_counts, right_total))
                / total_real;
            let improves = match &best {
                Some((current, _, _)) => weighted < *current,
                None => true,
            };
            if improves {
                best = Some((weighted, feature, threshold));
            }
        }
    }

    match best {
        Some((weighted, feature, threshold)) if weighted < parent_impurity => {
            let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
                .iter()
                .partition(|&&row| features[row][feature] <= threshold);
            let left = grow(features, labels, &left_rows, n_classes, max_features, rng);
            let right = grow(features, labels, &right_rows, n_classes, max_features, rng);
            TreeNode::Split {
                feature,
                threshold,
                left: Box::new(left),
                right: Box::new(right),
            }
        }
        _ => TreeNode::Leaf {
            label: majority_label(&counts),
            counts,
        },
    }
}
