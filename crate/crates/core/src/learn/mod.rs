//! In-repo learners and ordinal evaluation: CART decision trees with
//! Gini splits, bootstrap-aggregated random forests, a multinomial
//! logistic baseline, and MAE cross-validation over fold plans.

mod eval;
mod forest;
mod logistic;
mod tree;

pub use eval::{cross_validate, mae, EvalReport, ForestLearner, Learner, LogisticLearner, Predictor};
pub use forest::{train_forest, FeatureSubset, ForestConfig, ForestModel};
pub use logistic::{train_logistic, LogisticConfig, LogisticModel};
pub use tree::{train_tree, TreeNode};
