//! Ordinal MAE evaluation and fold-plan cross-validation over
//! pluggable learners.

use serde::{Deserialize, Serialize};

use super::{train_forest, train_logistic, ForestConfig, LogisticConfig};
use crate::dataset::{DatasetConfig, FoldPlan, LabeledDataset};
use crate::scalar::{real_from_usize, Real};
use crate::{Error, Result};

/// Mean absolute difference between predicted and true bin indices.
pub fn mae<F: Real>(predictions: &[usize], truths: &[usize]) -> Result<F> {
    if predictions.len() != truths.len() {
        return Err(Error::LengthMismatch {
            left: predictions.len(),
            right: truths.len(),
        });
    }
    if predictions.is_empty() {
        return Err(Error::TooFewSamples { needed: 1, got: 0 });
    }
    let total: usize = predictions
        .iter()
        .zip(truths)
        .map(|(&p, &t)| p.abs_diff(t))
        .sum();
    Ok(real_from_usize::<F>(total) / real_from_usize::<F>(predictions.len()))
}

/// A fitted model able to score single feature rows.
pub trait Predictor<F: Real>: Send {
    fn predict_row(&self, row: &[F]) -> Result<usize>;
}

/// A learner specification that can be fit repeatedly (one fit per
/// fold or split) with deterministic results.
pub trait Learner<F: Real>: Sync {
    fn name(&self) -> String;
    fn fit(&self, features: &[Vec<F>], labels: &[usize]) -> Result<Box<dyn Predictor<F>>>;
}

/// Random-forest learner specification.
#[derive(Debug, Clone)]
pub struct ForestLearner(pub ForestConfig);

impl<F: Real> Predictor<F> for super::ForestModel<F> {
    fn predict_row(&self, row: &[F]) -> Result<usize> {
        super::ForestModel::predict_row(self, row)
    }
}

impl<F: Real> Learner<F> for ForestLearner {
    fn name(&self) -> String {
        format!("random_forest_{}", self.0.n_trees)
    }

    fn fit(&self, features: &[Vec<F>], labels: &[usize]) -> Result<Box<dyn Predictor<F>>> {
        Ok(Box::new(train_forest(features, labels, &self.0)?))
    }
}

/// Multinomial logistic learner specification.
#[derive(Debug, Clone)]
pub struct LogisticLearner(pub LogisticConfig);

impl<F: Real> Predictor<F> for super::LogisticModel<F> {
    fn predict_row(&self, row: &[F]) -> Result<usize> {
        super::LogisticModel::predict_row(self, row)
    }
}

impl<F: Real> Learner<F> for LogisticLearner {
    fn name(&self) -> String {
        "logistic_regression".to_string()
    }

    fn fit(&self, features: &[Vec<F>], labels: &[usize]) -> Result<Box<dyn Predictor<F>>> {
        Ok(Box::new(train_logistic(features, labels, &self.0)?))
    }
}

/// Cross-validation report: per-fold ordinal MAE and their mean.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport<F: Real> {
    pub learner: String,
    pub dataset: DatasetConfig,
    pub n_folds: usize,
    pub fold_seed: u64,
    pub per_fold: Vec<F>,
    pub mae: F,
}

impl<F: Real> EvalReport<F> {
    /// Standard error of the fold MAEs around their mean.
    pub fn standard_error(&self) -> F {
        let n = real_from_usize::<F>(self.per_fold.len());
        if self.per_fold.len() < 2 {
            return F::zero();
        }
        let mean = self.mae;
        let variance: F = self
            .per_fold
            .iter()
            .map(|&v| (v - mean) * (v - mean))
            .sum::<F>()
            / (n - F::one());
        (variance / n).sqrt()
    }
}

/// Train on each fold's complement and evaluate MAE on the fold.
pub fn cross_validate<F: Real>(
    dataset: &LabeledDataset<F>,
    folds: &FoldPlan,
    learner: &dyn Learner<F>,
) -> Result<EvalReport<F>> {
    if folds.assignment.len() != dataset.len() {
        return Err(Error::LengthMismatch {
            left: folds.assignment.len(),
            right: dataset.len(),
        });
    }
    let mut per_fold = Vec::with_capacity(folds.n_folds);
    for fold in 0..folds.n_folds {
        let (train_rows, test_rows) = folds.split(fold);
        let train_x: Vec<Vec<F>> = train_rows.iter().map(|&r| dataset.features[r].clone()).collect();
        let train_y: Vec<usize> = train_rows.iter().map(|&r| dataset.labels[r]).collect();
        let model = learner.fit(&train_x, &train_y)?;
        let predictions: Vec<usize> = test_rows
            .iter()
            .map(|&r| model.predict_row(&dataset.features[r]))
            .collect::<Result<_>>()?;
        let truths: Vec<usize> = test_rows.iter().map(|&r| dataset.labels[r]).collect();
        per_fold.push(mae::<F>(&predictions, &truths)?);
    }
    let mean = per_fold.iter().copied().sum::<F>() / real_from_usize::<F>(per_fold.len());
    Ok(EvalReport {
        learner: learner.name(),
        dataset: dataset.config,
        n_folds: folds.n_folds,
        fold_seed: folds.seed,
        per_fold,
        mae: mean,
    })
}
