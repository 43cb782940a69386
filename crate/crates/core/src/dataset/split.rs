use super::{Dataset, DatasetError, Provenance, Role};
use crate::seed;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// How (train, test) pairs are produced for the GP runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum SplitPlan {
    /// `repetitions` independent shuffles, each cut into `folds` disjoint folds.
    CrossValidation { folds: usize, repetitions: usize },
    /// The same fixed (train, test) pair, `repeats` times.
    FixedRepeats { repeats: usize },
}

impl SplitPlan {
    /// 6 x 5-fold CV for real data, 30 repeats of the fixed pair for synthetic data.
    pub fn standard(provenance: Provenance) -> Self {
        match provenance {
            Provenance::Real => SplitPlan::CrossValidation {
                folds: 5,
                repetitions: 6,
            },
            Provenance::Synthetic => SplitPlan::FixedRepeats { repeats: 30 },
        }
    }

    pub fn n_pairs(&self) -> usize {
        match *self {
            SplitPlan::CrossValidation { folds, repetitions } => folds * repetitions,
            SplitPlan::FixedRepeats { repeats } => repeats,
        }
    }
}

/// One (train, test) pair of a split plan.
#[derive(Debug, Clone)]
pub struct FoldPair {
    pub repetition: usize,
    pub fold: usize,
    pub train: Dataset,
    pub test: Dataset,
}

/// Draws `n` distinct rows uniformly without replacement. Selected rows keep
/// their original order.
pub fn subsample(ds: &Dataset, n: usize, seed: u64) -> Result<Dataset, DatasetError> {
    if n > ds.n_rows() {
        return Err(DatasetError::SubsampleTooLarge {
            requested: n,
            available: ds.n_rows(),
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut idx = rand::seq::index::sample(&mut rng, ds.n_rows(), n).into_vec();
    idx.sort_unstable();
    ds.select_rows(&idx, ds.role())
}

/// Fold sizes for `n` rows in `k` folds; the first `n mod k` folds get one
/// extra row.
pub fn fold_sizes(n: usize, k: usize) -> Vec<usize> {
    (0..k).map(|f| n / k + usize::from(f < n % k)).collect()
}

/// Test-fold index sets for one repetition: a seeded shuffle of `0..n` cut
/// into `k` contiguous folds. Each fold is returned sorted.
pub fn fold_indices(n: usize, k: usize, seed: u64) -> Result<Vec<Vec<usize>>, DatasetError> {
    if k == 0 || n < k {
        return Err(DatasetError::TooFewRowsForFolds { n, k });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<usize> = (0..n).collect();
    perm.shuffle(&mut rng);
    let mut folds = Vec::with_capacity(k);
    let mut start = 0;
    for size in fold_sizes(n, k) {
        let mut fold = perm[start..start + size].to_vec();
        fold.sort_unstable();
        folds.push(fold);
        start += size;
    }
    Ok(folds)
}

/// Produces the (train, test) pairs of `plan`.
///
/// Cross-validation partitions `data` (which must be real data, `test` must be
/// `None`); every repetition reshuffles with a seed derived from `seed` and the
/// repetition index. Fixed repeats hand back the given synthetic pair
/// unchanged.
pub fn make_splits(
    data: &Dataset,
    test: Option<&Dataset>,
    plan: SplitPlan,
    seed: u64,
) -> Result<Vec<FoldPair>, DatasetError> {
    match (plan, test) {
        (SplitPlan::CrossValidation { folds, repetitions }, None)
            if data.provenance() == Provenance::Real =>
        {
            let n = data.n_rows();
            let mut pairs = Vec::with_capacity(folds * repetitions);
            for rep in 0..repetitions {
                let test_folds = fold_indices(n, folds, seed::derive(seed, &[rep as u64]))?;
                for (f, test_idx) in test_folds.iter().enumerate() {
                    let mut in_test = vec![false; n];
                    for &i in test_idx {
                        in_test[i] = true;
                    }
                    let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
                    pairs.push(FoldPair {
                        repetition: rep,
                        fold: f,
                        train: data.select_rows(&train_idx, Role::Train)?,
                        test: data.select_rows(test_idx, Role::Test)?,
                    });
                }
            }
            Ok(pairs)
        }
        (SplitPlan::FixedRepeats { repeats }, Some(test))
            if data.provenance() == Provenance::Synthetic =>
        {
            let train = data.clone().with_role(Role::Train);
            let test = test.clone().with_role(Role::Test);
            Ok((0..repeats)
                .map(|r| FoldPair {
                    repetition: r,
                    fold: 0,
                    train: train.clone(),
                    test: test.clone(),
                })
                .collect())
        }
        _ => Err(DatasetError::PlanMismatch {
            plan,
            provenance: data.provenance(),
        }),
    }
}
