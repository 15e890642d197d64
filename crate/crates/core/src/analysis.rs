//! Correlation studies, experiment sweeps, and permutation feature
//! importance over the assembled pipeline.

use std::collections::{BTreeMap, HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::{assemble, make_folds, LabeledDataset};
use crate::graph::{weekly_rank_tables, PageRankParams, Snapshot};
use crate::ingest::{EventStore, Message};
use crate::learn::{cross_validate, mae, ForestConfig, ForestLearner, Learner};
use crate::scalar::{real_from_f64, real_from_usize, Real};
use crate::{Error, Result, UserId};

/// Spearman rank correlation with a two-sided significance estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationReport<F: Real> {
    pub rho: F,
    pub p_value: f64,
    pub n: usize,
    pub context: String,
}

/// How the two-sided p-value is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PValueMethod {
    /// `t = rho * sqrt((n-2) / (1 - rho^2))` against Student's t with
    /// `n - 2` degrees of freedom.
    TApprox,
    /// Seeded permutation test, `(hits + 1) / (iterations + 1)`.
    Permutation { iterations: usize, seed: u64 },
}

/// Average ranks (1-based) with ties sharing their mean position.
fn average_ranks<F: Real>(values: &[F]) -> Result<Vec<F>> {
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidConfig {
            message: "correlation input contains non-finite values".into(),
        });
    }
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| {
        values[a]
            .partial_cmp(&values[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut ranks = vec![F::zero(); values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start;
        while end + 1 < order.len() && values[order[end + 1]] == values[order[start]] {
            end += 1;
        }
        // Positions start..=end share the mean 1-based rank.
        let mean_rank =
            real_from_usize::<F>(start + end + 2) / real_from_f64::<F>(2.0);
        for &index in &order[start..=end] {
            ranks[index] = mean_rank;
        }
        start = end + 1;
    }
    Ok(ranks)
}

fn pearson<F: Real>(x: &[F], y: &[F]) -> Result<F> {
    let n = real_from_usize::<F>(x.len());
    let mean_x = x.iter().copied().sum::<F>() / n;
    let mean_y = y.iter().copied().sum::<F>() / n;
    let mut cov = F::zero();
    let mut var_x = F::zero();
    let mut var_y = F::zero();
    for (&a, &b) in x.iter().zip(y) {
        let dx = a - mean_x;
        let dy = b - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if var_x == F::zero() || var_y == F::zero() {
        return Err(Error::ConstantInput);
    }
    Ok(cov / (var_x * var_y).sqrt())
}

fn t_approx_p_value(rho: f64, n: usize) -> f64 {
    let df = (n - 2) as f64;
    let denom = 1.0 - rho * rho;
    if denom <= f64::EPSILON {
        return f64::MIN_POSITIVE;
    }
    let t = rho * (df / denom).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).expect("df >= 1");
    let p = 2.0 * (1.0 - dist.cdf(t.abs()));
    p.clamp(f64::MIN_POSITIVE, 1.0)
}

/// Spearman correlation via average-rank transform and Pearson on the
/// rank vectors, with the t-approximation p-value.
pub fn spearman<F: Real>(x: &[F], y: &[F]) -> Result<CorrelationReport<F>> {
    spearman_with(x, y, PValueMethod::TApprox)
}

pub fn spearman_with<F: Real>(
    x: &[F],
    y: &[F],
    method: PValueMethod,
) -> Result<CorrelationReport<F>> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: x.len(),
            right: y.len(),
        });
    }
    if x.len() < 3 {
        return Err(Error::TooFewSamples {
            needed: 3,
            got: x.len(),
        });
    }
    let rank_x = average_ranks(x)?;
    let rank_y = average_ranks(y)?;
    let rho = pearson(&rank_x, &rank_y)?;
    let p_value = match method {
        PValueMethod::TApprox => t_approx_p_value(rho.to_f64().unwrap_or(0.0), x.len()),
        PValueMethod::Permutation { iterations, seed } => {
            let observed = rho.abs();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut shuffled = rank_y.clone();
            let mut hits = 0usize;
            for _ in 0..iterations {
                shuffled.shuffle(&mut rng);
                if let Ok(permuted) = pearson(&rank_x, &shuffled) {
                    if permuted.abs() >= observed {
                        hits += 1;
                    }
                }
            }
            (hits as f64 + 1.0) / (iterations as f64 + 1.0)
        }
    };
    Ok(CorrelationReport {
        rho,
        p_value,
        n: x.len(),
        context: String::new(),
    })
}

/// One point of the join-date scatter: a giant-component user's join
/// timestamp against their final-week PageRank.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScatterPoint<F: Real> {
    pub user: UserId,
    pub join_timestamp: i64,
    pub pagerank: F,
}

/// Correlate join time with final-week PageRank over the giant
/// component, and return the scatter behind the figure.
pub fn join_vs_final<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    params: PageRankParams,
) -> Result<(CorrelationReport<F>, Vec<ScatterPoint<F>>)> {
    let last = snapshots.last().ok_or_else(|| Error::InvalidConfig {
        message: "no snapshots to analyze".into(),
    })?;
    let ranking = crate::graph::pagerank::<F>(last, params)?;
    let mut points = Vec::with_capacity(ranking.scores.len());
    for (user, &score) in &ranking.scores {
        let join_timestamp = store
            .join_time(user)
            .ok_or_else(|| Error::UnknownUser { user: user.clone() })?;
        points.push(ScatterPoint {
            user: user.clone(),
            join_timestamp,
            pagerank: score,
        });
    }
    let x: Vec<F> = points
        .iter()
        .map(|p| real_from_f64::<F>(p.join_timestamp as f64))
        .collect();
    let y: Vec<F> = points.iter().map(|p| p.pagerank).collect();
    let mut report = spearman(&x, &y)?;
    report.context = format!("join_vs_final_week_{}", last.week);
    Ok((report, points))
}

/// Flag each in-horizon, non-self message as new (first contact in
/// either direction) or repeat, in canonical message order.
pub fn new_messages(store: &EventStore) -> Vec<(Message, bool)> {
    let mut seen: HashSet<(UserId, UserId)> = HashSet::new();
    let mut flagged = Vec::new();
    for message in store.messages_within_horizon() {
        if message.is_self_message() {
            continue;
        }
        let pair = normalized_pair(&message.sender, &message.receiver);
        let is_new = seen.insert(pair);
        flagged.push((message, is_new));
    }
    flagged
}

fn normalized_pair(a: &UserId, b: &UserId) -> (UserId, UserId) {
    if a <= b {
        (a.clone(), b.clone())
    } else {
        (b.clone(), a.clone())
    }
}

/// Total new incoming messages per receiver rank, the rank taken from
/// the most recent completed weekly snapshot (week w-1 for a week-w
/// message). Week-1 messages and unranked receivers are skipped.
pub fn newmsg_by_rank<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    params: PageRankParams,
) -> Result<BTreeMap<u32, u64>> {
    let tables = weekly_rank_tables::<F>(snapshots, params)?;
    let mut counts: BTreeMap<u32, u64> = BTreeMap::new();
    for (message, is_new) in new_messages(store) {
        if !is_new {
            continue;
        }
        let week = store.week_of(message.timestamp)?;
        if week < 2 || (week as usize) > tables.len() {
            continue;
        }
        let Some(table) = &tables[week as usize - 2] else {
            continue;
        };
        if let Some(&rank) = table.rank.get(&message.receiver) {
            *counts.entry(rank).or_insert(0) += 1;
        }
    }
    Ok(counts)
}

/// Weekly correlations between rank at week w and new incoming
/// messages during week w+1, plus the weeks skipped and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WeeklyCorrelations<F: Real> {
    pub reports: Vec<(u32, CorrelationReport<F>)>,
    pub skipped: Vec<(u32, String)>,
}

pub fn weekly_rank_correlation<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    params: PageRankParams,
) -> Result<WeeklyCorrelations<F>> {
    let tables = weekly_rank_tables::<F>(snapshots, params)?;
    // New incoming messages per (week, receiver).
    let mut incoming: HashMap<(u32, UserId), u64> = HashMap::new();
    for (message, is_new) in new_messages(store) {
        if !is_new {
            continue;
        }
        let week = store.week_of(message.timestamp)?;
        *incoming.entry((week, message.receiver)).or_insert(0) += 1;
    }

    let mut reports = Vec::new();
    let mut skipped = Vec::new();
    for week in 1..snapshots.len() as u32 {
        let Some(table) = &tables[week as usize - 1] else {
            skipped.push((week, "no ranked users (edgeless snapshot)".into()));
            continue;
        };
        if table.rank.len() < 3 {
            skipped.push((week, format!("only {} ranked users", table.rank.len())));
            continue;
        }
        let mut x = Vec::with_capacity(table.rank.len());
        let mut y = Vec::with_capacity(table.rank.len());
        for (user, &rank) in &table.rank {
            x.push(real_from_usize::<F>(rank as usize));
            y.push(real_from_f64::<F>(
                incoming.get(&(week + 1, user.clone())).copied().unwrap_or(0) as f64,
            ));
        }
        match spearman(&x, &y) {
            Ok(mut report) => {
                report.context = format!("rank_week_{week}_vs_new_messages_week_{}", week + 1);
                reports.push((week, report));
            }
            Err(Error::ConstantInput) => {
                skipped.push((week, "constant input (no new messages)".into()));
            }
            Err(other) => return Err(other),
        }
    }
    Ok(WeeklyCorrelations { reports, skipped })
}

/// Message volume per week, dense over `1..=horizon`.
pub fn activity_series(store: &EventStore) -> Vec<(u32, u64)> {
    let mut counts = vec![0u64; store.horizon_weeks() as usize];
    for message in store.messages_within_horizon() {
        let week = store
            .week_of(message.timestamp)
            .expect("in-horizon messages have a week");
        counts[week as usize - 1] += 1;
    }
    counts
        .into_iter()
        .enumerate()
        .map(|(i, c)| (i as u32 + 1, c))
        .collect()
}

/// Cross-validated MAE of final-week labels as a function of the
/// feature cutoff week, for motif features and the totals-only
/// ablation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint<F: Real> {
    pub cutoff_week: u32,
    pub mae_motifs: F,
    pub mae_totals: F,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastCurve<F: Real> {
    pub points: Vec<ForecastPoint<F>>,
    pub skipped: Vec<(u32, String)>,
}

/// Experiment-level knobs shared by the sweeps.
#[derive(Debug, Clone, Copy)]
pub struct SweepConfig {
    pub m: usize,
    pub label_week: u32,
    pub n_folds: usize,
    pub seed: u64,
    pub forest: ForestConfig,
    pub pagerank: PageRankParams,
}

pub fn forecast_curve<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    k: usize,
    config: &SweepConfig,
) -> Result<ForecastCurve<F>> {
    let cutoffs: Vec<u32> = (1..=config.label_week).collect();
    let outcomes: Vec<(u32, Result<Option<ForecastPoint<F>>>)> = cutoffs
        .par_iter()
        .map(|&cutoff| (cutoff, curve_point(store, snapshots, k, cutoff, config)))
        .collect();

    let mut points = Vec::new();
    let mut skipped = Vec::new();
    for (cutoff, outcome) in outcomes {
        match outcome {
            Ok(Some(point)) => points.push(point),
            Ok(None) => skipped.push((cutoff, "empty population".into())),
            Err(err) => return Err(err),
        }
    }
    Ok(ForecastCurve { points, skipped })
}

fn curve_point<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    k: usize,
    cutoff: u32,
    config: &SweepConfig,
) -> Result<Option<ForecastPoint<F>>> {
    let motifs = match assemble::<F>(
        store,
        snapshots,
        cutoff,
        config.label_week,
        k,
        config.m,
        false,
        config.pagerank,
    ) {
        Ok(dataset) => dataset,
        Err(Error::EmptyPopulation { .. }) => return Ok(None),
        Err(other) => return Err(other),
    };
    let totals = assemble::<F>(
        store,
        snapshots,
        cutoff,
        config.label_week,
        k,
        config.m,
        true,
        config.pagerank,
    )?;
    // Same population and labels on both sides, so one fold plan keeps
    // the two MAEs comparable.
    let folds = make_folds(&motifs, config.n_folds, config.seed ^ u64::from(cutoff))?;
    let learner = ForestLearner(config.forest);
    let mae_motifs = cross_validate(&motifs, &folds, &learner)?.mae;
    let mae_totals = cross_validate(&totals, &folds, &learner)?.mae;
    Ok(Some(ForecastPoint {
        cutoff_week: cutoff,
        mae_motifs,
        mae_totals,
    }))
}

/// Cross-validated forest MAE per motif length, full-history features.
pub fn sweep_k<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    ks: &[usize],
    config: &SweepConfig,
) -> Result<Vec<(usize, F)>> {
    ks.par_iter()
        .map(|&k| {
            let dataset = assemble::<F>(
                store,
                snapshots,
                config.label_week,
                config.label_week,
                k,
                config.m,
                false,
                config.pagerank,
            )?;
            let folds = make_folds(&dataset, config.n_folds, config.seed ^ k as u64)?;
            let report = cross_validate(&dataset, &folds, &ForestLearner(config.forest))?;
            Ok((k, report.mae))
        })
        .collect()
}

/// Detailed k-sweep variant keeping the full per-fold reports.
pub fn sweep_k_reports<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    ks: &[usize],
    config: &SweepConfig,
) -> Result<Vec<(usize, crate::learn::EvalReport<F>)>> {
    ks.par_iter()
        .map(|&k| {
            let dataset = assemble::<F>(
                store,
                snapshots,
                config.label_week,
                config.label_week,
                k,
                config.m,
                false,
                config.pagerank,
            )?;
            let folds = make_folds(&dataset, config.n_folds, config.seed ^ k as u64)?;
            let report = cross_validate(&dataset, &folds, &ForestLearner(config.forest))?;
            Ok((k, report))
        })
        .collect()
}

/// Mean percentage MAE increase per shuffled feature across seeded
/// train/test splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImportanceReport<F: Real> {
    pub features: Vec<String>,
    pub mean_pct_increase: Vec<F>,
    pub splits_requested: usize,
    pub splits_used: usize,
    pub holdout_fraction: f64,
    pub seed: u64,
}

impl<F: Real> ImportanceReport<F> {
    /// Features sorted by importance, descending; name breaks ties.
    pub fn ranked(&self) -> Vec<(String, F)> {
        let mut rows: Vec<(String, F)> = self
            .features
            .iter()
            .cloned()
            .zip(self.mean_pct_increase.iter().copied())
            .collect();
        rows.sort_by(|a, b| {
            b.1.partial_cmp(&a.1)
                .unwrap_or(std::cmp::Ordering::Equal)
                .then_with(|| a.0.cmp(&b.0))
        });
        rows
    }
}

/// Shuffle one test-set column at a time and record the relative MAE
/// increase, averaged over `splits` random train/test splits.
pub fn permutation_importance<F: Real>(
    dataset: &LabeledDataset<F>,
    learner: &dyn Learner<F>,
    splits: usize,
    holdout_fraction: f64,
    seed: u64,
) -> Result<ImportanceReport<F>> {
    if dataset.n_features() < 2 {
        return Err(Error::InvalidConfig {
            message: "permutation importance needs at least 2 features".into(),
        });
    }
    if !(0.0..1.0).contains(&holdout_fraction) || holdout_fraction <= 0.0 {
        return Err(Error::InvalidConfig {
            message: format!("holdout fraction must lie in (0,1), got {holdout_fraction}"),
        });
    }
    if splits == 0 {
        return Err(Error::InvalidConfig {
            message: "need at least one split".into(),
        });
    }
    let n = dataset.len();
    let test_size = (((n as f64) * holdout_fraction).round() as usize).clamp(1, n - 1);

    let per_split: Vec<Result<Option<Vec<F>>>> = (0..splits)
        .into_par_iter()
        .map(|split| importance_split(dataset, learner, split, test_size, seed))
        .collect();

    let n_features = dataset.n_features();
    let mut sums = vec![F::zero(); n_features];
    let mut used = 0usize;
    for outcome in per_split {
        if let Some(increases) = outcome? {
            for (sum, increase) in sums.iter_mut().zip(increases) {
                *sum += increase;
            }
            used += 1;
        }
    }
    let mean = if used == 0 {
        vec![F::zero(); n_features]
    } else {
        sums.into_iter()
            .map(|s| s / real_from_usize::<F>(used))
            .collect()
    };
    Ok(ImportanceReport {
        features: dataset.feature_names.clone(),
        mean_pct_increase: mean,
        splits_requested: splits,
        splits_used: used,
        holdout_fraction,
        seed,
    })
}

fn importance_split<F: Real>(
    dataset: &LabeledDataset<F>,
    learner: &dyn Learner<F>,
    split: usize,
    test_size: usize,
    seed: u64,
) -> Result<Option<Vec<F>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ split as u64);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    let (test_rows, train_rows) = order.split_at(test_size);

    let train_x: Vec<Vec<F>> = train_rows.iter().map(|&r| dataset.features[r].clone()).collect();
    let train_y: Vec<usize> = train_rows.iter().map(|&r| dataset.labels[r]).collect();
    let model = learner.fit(&train_x, &train_y)?;

    let test_x: Vec<Vec<F>> = test_rows.iter().map(|&r| dataset.features[r].clone()).collect();
    let test_y: Vec<usize> = test_rows.iter().map(|&r| dataset.labels[r]).collect();
    let baseline_predictions: Vec<usize> = test_x
        .iter()
        .map(|row| model.predict_row(row))
        .collect::<Result<_>>()?;
    let baseline: F = mae(&baseline_predictions, &test_y)?;
    if baseline == F::zero() {
        // A perfect split leaves no error to inflate.
        return Ok(None);
    }

    let hundred = real_from_f64::<F>(100.0);
    let mut increases = Vec::with_capacity(dataset.n_features());
    for feature in 0..dataset.n_features() {
        let mut column: Vec<F> = test_x.iter().map(|row| row[feature]).collect();
        column.shuffle(&mut rng);
        let predictions: Vec<usize> = test_x
            .iter()
            .zip(&column)
            .map(|(row, &shuffled)| {
                let mut perturbed = row.clone();
                perturbed[feature] = shuffled;
                model.predict_row(&perturbed)
            })
            .collect::<Result<_>>()?;
        let perturbed_mae: F = mae(&predictions, &test_y)?;
        increases.push((perturbed_mae - baseline) / baseline * hundred);
    }
    Ok(Some(increases))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ingest::{build_store, parse_messages, WEEK_SECONDS};
    use crate::learn::Predictor;
    use proptest::prelude::*;
    use rand::Rng;
    use std::io::Cursor;

    #[test]
    fn monotone_relation_is_perfect() {
        let x: Vec<f64> = vec![1.0, 2.0, 5.0, 9.0];
        let y = vec![10.0, 20.0, 21.0, 30.0];
        let report = spearman(&x, &y).unwrap();
        assert!((report.rho - 1.0).abs() < 1e-12);
    }

    #[test]
    fn textbook_three_point_example() {
        let x: Vec<f64> = vec![1.0, 2.0, 3.0];
        let y = vec![3.0, 1.0, 2.0];
        let report = spearman(&x, &y).unwrap();
        assert!((report.rho + 0.5).abs() < 1e-12);
    }

    #[test]
    fn degenerate_inputs_rejected() {
        assert!(spearman(&[1.0, 2.0], &[1.0, 2.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0]).is_err());
        assert!(spearman(&[1.0, 2.0, 3.0], &[1.0, 2.0]).is_err());
    }

    #[test]
    fn perfect_anticorrelation_has_tiny_p() {
        let x: Vec<f64> = vec![1.0, 2.0, 3.0, 4.0, 5.0];
        let y = vec![5.0, 4.0, 3.0, 2.0, 1.0];
        let report = spearman(&x, &y).unwrap();
        assert!((report.rho + 1.0).abs() < 1e-12);
        assert!(report.p_value > 0.0 && report.p_value < 1e-6);
    }

    #[test]
    fn permutation_p_value_agrees_on_strong_signal() {
        let x: Vec<f64> = (0..30).map(|i| i as f64).collect();
        let y: Vec<f64> = (0..30).map(|i| (i as f64).powi(2)).collect();
        let report = spearman_with(
            &x,
            &y,
            PValueMethod::Permutation {
                iterations: 200,
                seed: 1,
            },
        )
        .unwrap();
        assert!((report.rho - 1.0).abs() < 1e-12);
        assert!(report.p_value < 0.01);
    }

    #[test]
    fn matches_counting_oracle_with_ties() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let n = rng.gen_range(3..40usize);
            // Coarse values force plenty of ties.
            let x: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
            let y: Vec<f64> = (0..n).map(|_| rng.gen_range(0..6) as f64).collect();
            let ours = spearman(&x, &y);
            let oracle = crate::oracle::naive_spearman(&x, &y);
            match (ours, oracle) {
                (Ok(report), Some(expected)) => {
                    assert!(
                        (report.rho - expected).abs() < 1e-10,
                        "{} vs {expected}",
                        report.rho
                    );
                }
                (Err(Error::ConstantInput), None) => {}
                (ours, oracle) => panic!("diverged: {ours:?} vs {oracle:?}"),
            }
        }
    }

    #[test]
    fn independent_vectors_rarely_look_significant() {
        let mut insignificant = 0;
        for seed in 0..100u64 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
            let y: Vec<f64> = (0..1000).map(|_| rng.gen::<f64>()).collect();
            let report = spearman(&x, &y).unwrap();
            if report.rho.abs() < 0.1 && report.p_value > 0.001 {
                insignificant += 1;
            }
        }
        assert!(insignificant >= 95, "only {insignificant}/100 seeds");
    }

    proptest! {
        #[test]
        fn symmetric_and_sign_flipping(values in prop::collection::vec(-1000.0f64..1000.0, 3..40)) {
            let distinct: std::collections::BTreeSet<i64> =
                values.iter().map(|v| (v * 1000.0) as i64).collect();
            prop_assume!(distinct.len() >= 2);
            let x: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            let forward = spearman(&x, &values).unwrap();
            let swapped = spearman(&values, &x).unwrap();
            prop_assert!((forward.rho - swapped.rho).abs() < 1e-12);

            let negated: Vec<f64> = values.iter().map(|v| -v).collect();
            let flipped = spearman(&x, &negated).unwrap();
            prop_assert!((forward.rho + flipped.rho).abs() < 1e-12);
        }

        #[test]
        fn invariant_under_increasing_transform(values in prop::collection::vec(-50.0f64..50.0, 3..40)) {
            let distinct: std::collections::BTreeSet<i64> =
                values.iter().map(|v| (v * 1000.0) as i64).collect();
            prop_assume!(distinct.len() >= 2);
            let x: Vec<f64> = (0..values.len()).map(|i| i as f64).collect();
            let base = spearman(&x, &values).unwrap();
            let transformed: Vec<f64> = values.iter().map(|v| v.exp()).collect();
            let after = spearman(&x, &transformed).unwrap();
            prop_assert!((base.rho - after.rho).abs() < 1e-10);
        }
    }

    #[test]
    fn self_correlation_is_exactly_negative_one_on_negation() {
        let x = vec![3.0, 1.0, 4.0, 1.5, 9.0];
        let negated: Vec<f64> = x.iter().map(|v| -v).collect();
        let report = spearman(&x, &negated).unwrap();
        assert!((report.rho + 1.0).abs() < 1e-12);
    }

    #[test]
    fn simultaneous_joins_make_join_correlation_undefined() {
        // Everyone's first activity lands on the same second, so the
        // join-time column is constant.
        let text = "a b 100\nb a 100\nb c 100\nc b 100\n";
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let snapshots = crate::graph::build_snapshots(&store, 1).unwrap();
        let outcome = join_vs_final::<f64>(&store, &snapshots, PageRankParams::default());
        assert!(matches!(outcome, Err(Error::ConstantInput)));
    }

    #[test]
    fn new_message_flags() {
        let store = |text: &str| {
            let messages = parse_messages(Cursor::new(text)).unwrap();
            build_store(&messages, None, 20).unwrap()
        };
        let flags = |text: &str| -> Vec<bool> {
            new_messages(&store(text)).into_iter().map(|(_, f)| f).collect()
        };
        assert_eq!(flags("u v 10\nu v 20\n"), vec![true, false]);
        assert_eq!(flags("u v 10\nv u 20\n"), vec![true, false]);
        assert_eq!(flags("u v 10\nu w 20\n"), vec![true, true]);
    }

    #[test]
    fn each_pair_flags_exactly_one_new_message() {
        let text = "a b 1\nb a 2\na c 3\nc a 4\nb c 5\na b 6\nc b 7\n";
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let mut new_per_pair: BTreeMap<(UserId, UserId), usize> = BTreeMap::new();
        for (message, is_new) in new_messages(&store) {
            if is_new {
                *new_per_pair
                    .entry(normalized_pair(&message.sender, &message.receiver))
                    .or_insert(0) += 1;
            }
        }
        assert!(new_per_pair.values().all(|&c| c == 1));
        assert_eq!(new_per_pair.len(), 3);
    }

    /// Reciprocated pair in week 1, then week-2 messages to ranked users.
    fn ranked_fixture() -> (EventStore, Vec<Snapshot>) {
        let w = WEEK_SECONDS;
        let text = format!(
            "a b 0\nb a 10\nb c 20\nc b 30\n\
             x a {0}\ny a {1}\nx c {2}\n",
            w + 100,
            w + 200,
            w + 300,
        );
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let snapshots = crate::graph::build_snapshots(&store, 3).unwrap();
        (store, snapshots)
    }

    #[test]
    fn rank_counts_accumulate_new_messages() {
        let (store, snapshots) = ranked_fixture();
        let counts = newmsg_by_rank::<f64>(&store, &snapshots, PageRankParams::default()).unwrap();
        // Week-1 ranking: b (rank 1, degree 2), then a, then c. Week-2
        // new messages hit a (rank 2) twice... x->a, y->a, and c (rank 3).
        assert_eq!(counts.get(&2), Some(&2));
        assert_eq!(counts.get(&3), Some(&1));
        assert_eq!(counts.get(&1), None);
    }

    #[test]
    fn week_one_messages_are_skipped() {
        let messages = parse_messages(Cursor::new("a b 0\nb a 10\nc a 20\n")).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let snapshots = crate::graph::build_snapshots(&store, 2).unwrap();
        let counts = newmsg_by_rank::<f64>(&store, &snapshots, PageRankParams::default()).unwrap();
        assert!(counts.is_empty());
    }

    #[test]
    fn unranked_receivers_are_skipped() {
        let w = WEEK_SECONDS;
        // d never reciprocates, so it is outside the giant component
        // when x messages it in week 2.
        let text = format!("a b 0\nb a 10\na d 20\nx d {}\n", w + 50);
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let snapshots = crate::graph::build_snapshots(&store, 2).unwrap();
        let counts = newmsg_by_rank::<f64>(&store, &snapshots, PageRankParams::default()).unwrap();
        assert!(counts.is_empty());
    }

    #[test]
    fn weekly_correlation_detects_rank_concentration() {
        let w = WEEK_SECONDS;
        // Triangle ranked in week 1; in week 2 every new message goes
        // to the rank-1 user (a, smallest id among the tied three).
        let text = format!(
            "a b 0\nb a 1\nb c 2\nc b 3\na c 4\nc a 5\n\
             p a {0}\nq a {1}\nr a {2}\n",
            w + 10,
            w + 20,
            w + 30,
        );
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let snapshots = crate::graph::build_snapshots(&store, 2).unwrap();
        let weekly =
            weekly_rank_correlation::<f64>(&store, &snapshots, PageRankParams::default()).unwrap();
        let week1 = weekly
            .reports
            .iter()
            .find(|(week, _)| *week == 1)
            .map(|(_, r)| r)
            .expect("week 1 retained");
        assert!(week1.rho < 0.0, "rho = {}", week1.rho);
    }

    #[test]
    fn weeks_without_rankings_are_skipped_with_notice() {
        let w = WEEK_SECONDS;
        // No reciprocation in week 1, so week 1 has no ranking.
        let text = format!("a b 0\nc d 5\nb a {0}\nd c {1}\n", w + 10, w + 20);
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 20).unwrap();
        let snapshots = crate::graph::build_snapshots(&store, 2).unwrap();
        let weekly =
            weekly_rank_correlation::<f64>(&store, &snapshots, PageRankParams::default()).unwrap();
        assert!(weekly.reports.is_empty());
        assert_eq!(weekly.skipped.len(), 1);
        assert_eq!(weekly.skipped[0].0, 1);
    }

    #[test]
    fn activity_series_is_dense_and_conserves_totals() {
        let w = WEEK_SECONDS;
        let text = format!("a b 0\na b 1\na b 2\nb a {}\n", 2 * w + 5);
        let messages = parse_messages(Cursor::new(text)).unwrap();
        let store = build_store(&messages, None, 4).unwrap();
        let series = activity_series(&store);
        assert_eq!(series, vec![(1, 3), (2, 0), (3, 1), (4, 0)]);
        let total: u64 = series.iter().map(|(_, c)| c).sum();
        assert_eq!(total, store.messages_within_horizon().count() as u64);
    }

    struct IgnoreFeaturesLearner;

    struct MajorityPredictor(usize);

    impl Predictor<f64> for MajorityPredictor {
        fn predict_row(&self, _row: &[f64]) -> Result<usize> {
            Ok(self.0)
        }
    }

    impl Learner<f64> for IgnoreFeaturesLearner {
        fn name(&self) -> String {
            "ignore_features".into()
        }

        fn fit(&self, _x: &[Vec<f64>], y: &[usize]) -> Result<Box<dyn Predictor<f64>>> {
            let max = y.iter().max().copied().unwrap_or(0);
            let mut counts = vec![0usize; max + 1];
            for &label in y {
                counts[label] += 1;
            }
            let mut best = 0;
            for (label, &count) in counts.iter().enumerate() {
                if count > counts[best] {
                    best = label;
                }
            }
            Ok(Box::new(MajorityPredictor(best)))
        }
    }

    fn importance_dataset() -> LabeledDataset<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let n = 80;
        let mut features = Vec::with_capacity(n);
        let mut labels = Vec::with_capacity(n);
        for _ in 0..n {
            let informative: f64 = rng.gen_range(0.0..10.0);
            features.push(vec![informative, 1.0, rng.gen_range(0.0..1.0)]);
            // Label noise keeps holdout baselines away from zero.
            let flip = rng.gen_bool(0.15);
            labels.push(usize::from((informative > 5.0) ^ flip));
        }
        LabeledDataset {
            users: (0..n).map(|i| UserId::new(format!("{i}"))).collect(),
            feature_names: vec!["informative".into(), "constant".into(), "noise".into()],
            features,
            labels,
            scores: vec![0.0; n],
            bins: crate::dataset::BinConfig::new(2, 0.0, 1.0).unwrap(),
            config: crate::dataset::DatasetConfig {
                cutoff_week: 1,
                label_week: 1,
                k: 1,
                m: 2,
                ablate_totals: false,
            },
        }
    }

    #[test]
    fn constant_feature_has_no_importance() {
        let ds = importance_dataset();
        let learner = ForestLearner(ForestConfig {
            n_trees: 30,
            seed: 9,
            ..ForestConfig::default()
        });
        let report = permutation_importance(&ds, &learner, 10, 0.25, 3).unwrap();
        let constant_idx = ds
            .feature_names
            .iter()
            .position(|n| n == "constant")
            .unwrap();
        assert!(report.mean_pct_increase[constant_idx].abs() < 1e-9);
        let informative_idx = ds
            .feature_names
            .iter()
            .position(|n| n == "informative")
            .unwrap();
        assert!(report.mean_pct_increase[informative_idx] > 10.0);
        assert_eq!(report.ranked()[0].0, "informative");
    }

    #[test]
    fn feature_blind_learner_scores_zero_everywhere() {
        let ds = importance_dataset();
        let report = permutation_importance(&ds, &IgnoreFeaturesLearner, 8, 0.3, 4).unwrap();
        for &value in &report.mean_pct_increase {
            assert!(value.abs() < 1e-12);
        }
    }

    #[test]
    fn importance_requires_two_features() {
        let mut ds = importance_dataset();
        ds.feature_names = vec!["only".into()];
        ds.features = ds.features.iter().map(|r| vec![r[0]]).collect();
        assert!(permutation_importance(&ds, &IgnoreFeaturesLearner, 5, 0.25, 0).is_err());
    }
}
