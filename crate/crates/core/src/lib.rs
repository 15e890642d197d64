//! Temporal behavioral motifs and social-position forecasting on an
//! evolving message network.
//!
//! The pipeline turns a raw timestamped message log into:
//!
//! 1. a validated, week-indexed event store ([`ingest`]),
//! 2. per-user token sequences and k-gram motif count vectors ([`encode`]),
//! 3. cumulative weekly reciprocity snapshots with giant-component
//!    PageRank and ordinal ranks ([`graph`]),
//! 4. labeled datasets binning PageRank into equidistant groups
//!    ([`dataset`]),
//! 5. in-repo learners (CART random forest, multinomial logistic) with
//!    ordinal MAE cross-validation ([`learn`]),
//! 6. correlation studies, forecast curves, k sweeps, and permutation
//!    feature importance ([`analysis`]).
//!
//! [`synth`] generates seeded message logs with tunable cumulative
//! advantage for fixtures and oracles, and [`oracle`] holds naive
//! reference implementations the test suites check the fast paths
//! against. All numeric kernels are generic over the scalar type via
//! [`scalar::Real`]; the aliases at the crate root pin the
//! double-precision variants used by the CLI.

pub mod analysis;
pub mod dataset;
pub mod encode;
mod error;
pub mod graph;
mod ids;
pub mod ingest;
pub mod learn;
pub mod oracle;
pub mod report;
pub mod scalar;
pub mod synth;

pub use error::Error;
pub use ids::UserId;

/// Convenience result type used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Double-precision PageRank result, the CLI default.
pub type PageRank = graph::PageRankResult<f64>;
/// Double-precision labeled dataset.
pub type Dataset = dataset::LabeledDataset<f64>;
/// Double-precision random forest.
pub type Forest = learn::ForestModel<f64>;
/// Double-precision logistic model.
pub type Logistic = learn::LogisticModel<f64>;
/// Double-precision cross-validation report.
pub type Evaluation = learn::EvalReport<f64>;
/// Double-precision correlation report.
pub type Correlation = analysis::CorrelationReport<f64>;
