//! Labeled dataset assembly: equidistant PageRank bins over motif
//! feature matrices, plus deterministic cross-validation folds.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::encode::{count_kgrams, encode_user, vectorize, MotifVocabulary};
use crate::graph::{pagerank, PageRankParams, Snapshot};
use crate::ingest::EventStore;
use crate::scalar::{real_from_usize, Real};
use crate::{Error, Result, UserId};

/// Equidistant binning of a PageRank value range into `m` groups.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinConfig<F: Real> {
    pub m: usize,
    pub lo: F,
    pub hi: F,
}

impl<F: Real> BinConfig<F> {
    pub fn new(m: usize, lo: F, hi: F) -> Result<Self> {
        if m < 2 {
            return Err(Error::InvalidBinConfig {
                message: format!("need at least 2 bins, got {m}"),
            });
        }
        if lo.partial_cmp(&hi) != Some(std::cmp::Ordering::Less) {
            return Err(Error::InvalidBinConfig {
                message: format!("empty range [{lo}, {hi}]"),
            });
        }
        Ok(BinConfig { m, lo, hi })
    }

    /// Bin edges spanning the min and max of the given scores.
    pub fn from_scores<I>(scores: I, m: usize) -> Result<Self>
    where
        I: IntoIterator<Item = F>,
    {
        let mut lo = F::infinity();
        let mut hi = F::neg_infinity();
        for score in scores {
            lo = lo.min(score);
            hi = hi.max(score);
        }
        if lo > hi {
            return Err(Error::InvalidBinConfig {
                message: "no scores to derive a range from".into(),
            });
        }
        BinConfig::new(m, lo, hi)
    }
}

/// Bin index of a score: `min(m-1, floor((score-lo) * m / (hi-lo)))`,
/// so the top edge folds into the last bin.
pub fn bin_of<F: Real>(score: F, config: &BinConfig<F>) -> Result<usize> {
    if score < config.lo || score > config.hi {
        return Err(Error::ScoreOutOfRange {
            score: score.to_f64().unwrap_or(f64::NAN),
            lo: config.lo.to_f64().unwrap_or(f64::NAN),
            hi: config.hi.to_f64().unwrap_or(f64::NAN),
        });
    }
    let m = real_from_usize::<F>(config.m);
    let raw = ((score - config.lo) * m / (config.hi - config.lo)).floor();
    let index = raw.to_usize().unwrap_or(config.m - 1);
    Ok(index.min(config.m - 1))
}

/// Configuration echo carried by every dataset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetConfig {
    pub cutoff_week: u32,
    pub label_week: u32,
    pub k: usize,
    pub m: usize,
    pub ablate_totals: bool,
}

/// Users-by-features matrix with PageRank-bin labels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset<F: Real> {
    pub users: Vec<UserId>,
    pub feature_names: Vec<String>,
    pub features: Vec<Vec<F>>,
    pub labels: Vec<usize>,
    /// Raw label-week PageRank per user, aligned with `users`.
    pub scores: Vec<F>,
    pub bins: BinConfig<F>,
    pub config: DatasetConfig,
}

impl<F: Real> LabeledDataset<F> {
    pub fn len(&self) -> usize {
        self.users.len()
    }

    pub fn is_empty(&self) -> bool {
        self.users.is_empty()
    }

    pub fn n_features(&self) -> usize {
        self.feature_names.len()
    }
}

/// Assemble the labeled dataset for one experiment configuration.
///
/// The population is every user who joined by the end of `cutoff_week`
/// and sits in the giant component at `label_week`. Features come from
/// the cutoff-week encoding (total activity only when ablated); labels
/// bin the label-week PageRank over the giant component's value range.
#[allow(clippy::too_many_arguments)]
pub fn assemble<F: Real>(
    store: &EventStore,
    snapshots: &[Snapshot],
    cutoff_week: u32,
    label_week: u32,
    k: usize,
    m: usize,
    ablate_totals: bool,
    pr_params: PageRankParams,
) -> Result<LabeledDataset<F>> {
    if cutoff_week < 1 || cutoff_week > label_week || label_week as usize > snapshots.len() {
        return Err(Error::InvalidConfig {
            message: format!(
                "need 1 <= cutoff ({cutoff_week}) <= label ({label_week}) <= horizon ({})",
                snapshots.len()
            ),
        });
    }
    let label_snapshot = &snapshots[label_week as usize - 1];
    let ranking = pagerank::<F>(label_snapshot, pr_params)?;
    let bins = BinConfig::from_scores(ranking.scores.values().copied(), m)?;

    // BTreeMap keys keep the population in ascending user-id order.
    let population: Vec<&UserId> = ranking
        .scores
        .keys()
        .filter(|user| {
            store
                .join_week(user)
                .map(|week| week <= cutoff_week)
                .unwrap_or(false)
        })
        .collect();
    if population.is_empty() {
        return Err(Error::EmptyPopulation {
            cutoff_week,
            label_week,
        });
    }

    let mut vectors = Vec::with_capacity(population.len());
    for user in &population {
        let sequence = encode_user(store, user, cutoff_week)?;
        vectors.push(count_kgrams(&sequence, k)?);
    }

    let (feature_names, features) = if ablate_totals {
        let rows = vectors
            .iter()
            .map(|v| vec![real_from_usize::<F>(v.total() as usize)])
            .collect();
        (vec!["total_activity".to_string()], rows)
    } else {
        let vocabulary = MotifVocabulary::from_population(&vectors);
        let matrix = vectorize(&vectors, &vocabulary);
        let rows = matrix
            .counts
            .iter()
            .map(|row| row.iter().map(|&c| real_from_usize::<F>(c as usize)).collect())
            .collect();
        (matrix.kgrams, rows)
    };

    let mut labels = Vec::with_capacity(population.len());
    let mut scores = Vec::with_capacity(population.len());
    for user in &population {
        let score = ranking.scores[*user];
        labels.push(bin_of(score, &bins)?);
        scores.push(score);
    }

    Ok(LabeledDataset {
        users: population.into_iter().cloned().collect(),
        feature_names,
        features,
        labels,
        scores,
        bins,
        config: DatasetConfig {
            cutoff_week,
            label_week,
            k,
            m,
            ablate_totals,
        },
    })
}

/// Deterministic fold assignment: seeded shuffle, then a stable sort by
/// label, then round-robin dealing. Stratifies wherever class counts
/// permit and degrades to plain round-robin otherwise.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    /// Fold index per dataset row.
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    /// Row indices split into (train, test) for one fold.
    pub fn split(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (row, &assigned) in self.assignment.iter().enumerate() {
            if assigned == fold {
                test.push(row);
            } else {
                train.push(row);
            }
        }
        (train, test)
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_folds];
        for &fold in &self.assignment {
            sizes[fold] += 1;
        }
        sizes
    }
}

pub fn make_folds<F: Real>(
    dataset: &LabeledDataset<F>,
    n_folds: usize,
    seed: u64,
) -> Result<FoldPlan> {
    if n_folds < 2 {
        return Err(Error::InvalidFolds {
            message: format!("need at least 2 folds, got {n_folds}"),
        });
    }
    if n_folds > dataset.len() {
        return Err(Error::InvalidFolds {
            message: format!(
                "{n_folds} folds exceed the population of {}",
                dataset.len()
            ),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..dataset.len()).collect();
    order.shuffle(&mut rng);
    order.sort_by_key(|&row| dataset.labels[row]);

    let mut assignment = vec![0usize; dataset.len()];
    for (position, &row) in order.iter().enumerate() {
        assignment[row] = position % n_folds;
    }
    Ok(FoldPlan {
        n_folds,
        seed,
        assignment,
    })
}
