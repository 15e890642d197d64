//! Multinomial softmax baseline fit by full-batch gradient descent on
//! standardized features, with an L2 penalty on the non-bias weights.
//! Zero initialization keeps training deterministic.

use serde::{Deserialize, Serialize};

use crate::scalar::{real_from_f64, real_from_usize, Real};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogisticConfig {
    pub l2: f64,
    pub epochs: usize,
    pub step: f64,
}

impl Default for LogisticConfig {
    fn default() -> Self {
        LogisticConfig {
            l2: 1e-3,
            epochs: 500,
            step: 0.2,
        }
    }
}

/// Trained softmax model. Weights are laid out per class with the bias
/// in the final position; features are standardized with the stored
/// training means and deviations before scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticModel<F: Real> {
    pub config: LogisticConfig,
    pub n_features: usize,
    pub n_classes: usize,
    pub means: Vec<F>,
    pub stds: Vec<F>,
    pub weights: Vec<Vec<F>>,
}

pub fn train_logistic<F: Real>(
    features: &[Vec<F>],
    labels: &[usize],
    config: &LogisticConfig,
) -> Result<LogisticModel<F>> {
    if features.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    if features.len() != labels.len() {
        return Err(Error::LengthMismatch {
            left: features.len(),
            right: labels.len(),
        });
    }
    let n_classes = labels.iter().max().copied().unwrap_or(0) + 1;
    {
        let mut seen = vec![false; n_classes];
        for &label in labels {
            seen[label] = true;
        }
        if seen.iter().filter(|&&s| s).count() < 2 {
            return Err(Error::SingleClass);
        }
    }

    let n_features = features[0].len();
    let (means, stds) = standardization(features, n_features);
    let standardized: Vec<Vec<F>> = features
        .iter()
        .map(|row| standardize_row(row, &means, &stds))
        .collect();

    let mut model = LogisticModel {
        config: *config,
        n_features,
        n_classes,
        means,
        stds,
        weights: vec![vec![F::zero(); n_features + 1]; n_classes],
    };
    let step = real_from_f64::<F>(config.step);
    for _ in 0..config.epochs {
        let gradient = gradient_standardized(&standardized, labels, &model.weights, config.l2);
        for (class_weights, class_gradient) in model.weights.iter_mut().zip(&gradient) {
            for (weight, &slope) in class_weights.iter_mut().zip(class_gradient) {
                *weight -= step * slope;
            }
        }
    }
    Ok(model)
}

fn standardization<F: Real>(features: &[Vec<F>], n_features: usize) -> (Vec<F>, Vec<F>) {
    let n = real_from_usize::<F>(features.len());
    let mut means = vec![F::zero(); n_features];
    for row in features {
        for (mean, &value) in means.iter_mut().zip(row) {
            *mean += value;
        }
    }
    for mean in means.iter_mut() {
        *mean /= n;
    }
    let mut variances = vec![F::zero(); n_features];
    for row in features {
        for ((variance, &value), &mean) in variances.iter_mut().zip(row).zip(&means) {
            let delta = value - mean;
            *variance += delta * delta;
        }
    }
    let stds = variances
        .into_iter()
        .map(|v| {
            let std = (v / n).sqrt();
            // Constant columns standardize to zero rather than NaN.
            if std == F::zero() {
                F::one()
            } else {
                std
            }
        })
        .collect();
    (means, stds)
}

fn standardize_row<F: Real>(row: &[F], means: &[F], stds: &[F]) -> Vec<F> {
    row.iter()
        .zip(means)
        .zip(stds)
        .map(|((&value, &mean), &std)| (value - mean) / std)
        .collect()
}

/// Class probabilities for one standardized row under given weights.
fn probabilities<F: Real>(weights: &[Vec<F>], row: &[F]) -> Vec<F> {
    let logits: Vec<F> = weights
        .iter()
        .map(|class_weights| {
            let mut logit = class_weights[row.len()]; // bias
            for (weight, &value) in class_weights.iter().zip(row) {
                logit += *weight * value;
            }
            logit
        })
        .collect();
    let max = logits
        .iter()
        .fold(F::neg_infinity(), |acc, &l| acc.max(l));
    let exps: Vec<F> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: F = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

fn gradient_standardized<F: Real>(
    standardized: &[Vec<F>],
    labels: &[usize],
    weights: &[Vec<F>],
    l2: f64,
) -> Vec<Vec<F>> {
    let n_classes = weights.len();
    let width = weights[0].len();
    let n = real_from_usize::<F>(standardized.len());
    let l2 = real_from_f64::<F>(l2);
    let mut gradient = vec![vec![F::zero(); width]; n_classes];
    for (row, &label) in standardized.iter().zip(labels) {
        let probs = probabilities(weights, row);
        for (class, &prob) in probs.iter().enumerate() {
            let residual = if class == label { prob - F::one() } else { prob };
            let class_gradient = &mut gradient[class];
            for (slot, &value) in class_gradient.iter_mut().zip(row) {
                *slot += residual * value;
            }
            class_gradient[width - 1] += residual;
        }
    }
    for (class, class_gradient) in gradient.iter_mut().enumerate() {
        for (column, slot) in class_gradient.iter_mut().enumerate() {
            *slot /= n;
            // Bias stays unpenalized.
            if column < width - 1 {
                *slot += l2 * weights[class][column];
            }
        }
    }
    gradient
}

impl<F: Real> LogisticModel<F> {
    pub fn predict_row(&self, row: &[F]) -> Result<usize> {
        if row.len() != self.n_features {
            return Err(Error::FeatureWidthMismatch {
                expected: self.n_features,
                got: row.len(),
            });
        }
        let standardized = standardize_row(row, &self.means, &self.stds);
        let probs = probabilities(&self.weights, &standardized);
        let mut best = 0;
        for (class, &prob) in probs.iter().enumerate() {
            if prob > probs[best] {
                best = class;
            }
        }
        Ok(best)
    }

    pub fn predict(&self, rows: &[Vec<F>]) -> Result<Vec<usize>> {
        rows.iter().map(|row| self.predict_row(row)).collect()
    }

    /// Regularized negative log-likelihood under externally supplied
    /// weights, on the model's standardization. Used to check gradients.
    pub fn loss_with_weights(&self, features: &[Vec<F>], labels: &[usize], weights: &[Vec<F>]) -> F {
        let n = real_from_usize::<F>(features.len());
        let mut nll = F::zero();
        for (row, &label) in features.iter().zip(labels) {
            let standardized = standardize_row(row, &self.means, &self.stds);
            let probs = probabilities(weights, &standardized);
            nll -= probs[label].max(F::min_positive_value()).ln();
        }
        let mut penalty = F::zero();
        for class_weights in weights {
            for &weight in &class_weights[..class_weights.len() - 1] {
                penalty += weight * weight;
            }
        }
        nll / n + real_from_f64::<F>(self.config.l2) * penalty / real_from_f64::<F>(2.0)
    }

    /// Analytic gradient matching [`LogisticModel::loss_with_weights`].
    pub fn gradient_with_weights(
        &self,
        features: &[Vec<F>],
        labels: &[usize],
        weights: &[Vec<F>],
    ) -> Vec<Vec<F>> {
        let standardized: Vec<Vec<F>> = features
            .iter()
            .map(|row| standardize_row(row, &self.means, &self.stds))
            .collect();
        gradient_standardized(&standardized, labels, weights, self.config.l2)
    }
}
