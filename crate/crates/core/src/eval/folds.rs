use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::corpus::Corpus;
use crate::error::{Error, Result};

pub const FOLD_COUNT: usize = 10;
pub const TRAIN_FRACTION: f64 = 0.6;
pub const VALIDATION_FRACTION: f64 = 0.2;

/// One random train/validation/test partition; each list is sorted.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Fold {
    pub train: Vec<usize>,
    pub validation: Vec<usize>,
    pub test: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    pub seed: u64,
    pub documents: usize,
    pub folds: Vec<Fold>,
}

/// Ten independent 60/20/20 splits of the corpus documents.
pub fn make_folds(corpus: &Corpus, seed: u64) -> Result<FoldPlan> {
    FoldPlan::for_size(corpus.len(), seed)
}

impl FoldPlan {
    /// Every fold reshuffles all `n` indices with one seeded generator.
    pub fn for_size(n: usize, seed: u64) -> Result<Self> {
        if n < FOLD_COUNT {
            return Err(Error::CorpusTooSmall {
                found: n,
                needed: FOLD_COUNT,
            });
        }
        let n_train = (TRAIN_FRACTION * n as f64).round() as usize;
        let n_validation = (VALIDATION_FRACTION * n as f64).round() as usize;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let folds = (0..FOLD_COUNT)
            .map(|_| {
                let mut order: Vec<usize> = (0..n).collect();
                order.shuffle(&mut rng);
                let sorted = |s: &[usize]| {
                    let mut v = s.to_vec();
                    v.sort_unstable();
                    v
                };
                Fold {
                    train: sorted(&order[..n_train]),
                    validation: sorted(&order[n_train..n_train + n_validation]),
                    test: sorted(&order[n_train + n_validation..]),
                }
            })
            .collect();
        Ok(Self {
            seed,
            documents: n,
            folds,
        })
    }
}
