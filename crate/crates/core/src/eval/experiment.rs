use std::fmt;

use log::{debug, info};
use rayon::prelude::*;

use super::folds::{Fold, FoldPlan};
use super::select::{select_hyperparams, GridPoint, Outcome};
use crate::classifiers::{
    train_mnb, train_mvb, train_msm, train_sa, train_svm, train_tfmsm, Classifier, FeatureKind, FeatureSpace,
    LsaModel, Prediction, Strategy, SubspaceModel, SubspaceParams, SvmParams, DEFAULT_SEED,
};
use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::subspace::DimPolicy;

/// Candidate hyperparameter values searched on each validation split.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid {
    /// Class subspace dimensions, each capped by the class's rank.
    pub class_dims: Vec<usize>,
    /// Query subspace dimensions, each capped by the query's rank.
    pub query_dims: Vec<usize>,
    /// LSA ranks; a rank above the training matrix rank is skipped.
    pub lsa_ranks: Vec<usize>,
    pub svm_lambdas: Vec<f64>,
}

impl Default for Grid {
    fn default() -> Self {
        Self {
            class_dims: vec![50, 100, 150, 175, 200],
            query_dims: vec![1, 5, 10, 25, 50, 100, 200],
            lsa_ranks: vec![10, 30, 50, 90, 130, 200],
            svm_lambdas: vec![1e-5, 1e-4, 1e-3],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub strategy: Strategy,
    pub feature: FeatureKind,
    pub grid: Grid,
    pub normalize_vectors: bool,
    pub svm_epochs: usize,
    /// Seeds the randomized training steps (SVM, large LSA).
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            feature: strategy.default_feature(),
            grid: Grid::default(),
            normalize_vectors: true,
            svm_epochs: SvmParams::default().epochs,
            seed: DEFAULT_SEED,
        }
    }
}

/// Hyperparameters chosen on a fold's validation split.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Hyperparams {
    pub class_dim: Option<usize>,
    pub query_dim: Option<usize>,
    pub rank: Option<usize>,
    pub lambda: Option<f64>,
}

impl fmt::Display for Hyperparams {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts = Vec::new();
        if let Some(v) = self.class_dim {
            parts.push(format!("mc={v}"));
        }
        if let Some(v) = self.query_dim {
            parts.push(format!("mq={v}"));
        }
        if let Some(v) = self.rank {
            parts.push(format!("k={v}"));
        }
        if let Some(v) = self.lambda {
            parts.push(format!("lambda={v}"));
        }
        if parts.is_empty() {
            f.write_str("-")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FoldResult {
    pub fold: usize,
    pub accuracy: f64,
    pub correct: usize,
    pub total: usize,
    /// Test documents that could not be classified; counted as errors.
    pub unclassifiable: usize,
    pub selected: Hyperparams,
    pub validation_accuracy: Option<f64>,
    pub notes: Vec<String>,
    /// The training split held a single class.
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StrategyReport {
    pub strategy: Strategy,
    pub feature: FeatureKind,
    pub folds: Vec<FoldResult>,
    pub mean_accuracy: f64,
    /// Sample standard deviation (`n − 1`) of the per-fold accuracies.
    pub std_accuracy: f64,
    pub degenerate: bool,
}

impl StrategyReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.folds.iter().map(|f| f.accuracy).collect()
    }
}

/// Runs every fold of `plan`: fit on the training split, choose
/// hyperparameters on the validation split, score the test split.
pub fn run_experiment(
    corpus: &Corpus,
    embeddings: Option<&EmbeddingTable>,
    config: &ExperimentConfig,
    plan: &FoldPlan,
) -> Result<StrategyReport> {
    if !config.strategy.supports(config.feature) {
        return Err(Error::Config(format!(
            "strategy {} does not support feature {}",
            config.strategy, config.feature
        )));
    }
    let needs_embeddings = config.feature == FeatureKind::W2v;
    if needs_embeddings && embeddings.is_none() {
        return Err(Error::Config("word-vector features require an embedding table".into()));
    }
    if plan.documents != corpus.len() {
        return Err(Error::Config(format!(
            "fold plan covers {} documents but the corpus has {}",
            plan.documents,
            corpus.len()
        )));
    }
    let folds = plan
        .folds
        .par_iter()
        .enumerate()
        .map(|(i, fold)| run_fold(corpus, embeddings, config, i, fold).map_err(|e| e.in_fold(i)))
        .collect::<Result<Vec<_>>>()?;

    let accuracies: Vec<f64> = folds.iter().map(|f| f.accuracy).collect();
    let (mean_accuracy, std_accuracy) = mean_std(&accuracies);
    let degenerate = corpus.classes().len() == 1 || folds.iter().any(|f| f.degenerate);
    info!(
        "{} ({}): mean accuracy {mean_accuracy:.4}, std {std_accuracy:.4}",
        config.strategy, config.feature
    );
    Ok(StrategyReport {
        strategy: config.strategy,
        feature: config.feature,
        folds,
        mean_accuracy,
        std_accuracy,
        degenerate,
    })
}

/// Mean and sample standard deviation.
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    (mean, std)
}

/// Counts of correct and unclassifiable documents.
#[derive(Debug, Clone, Copy, Default)]
struct Tally {
    correct: usize,
    unclassifiable: usize,
    total: usize,
}

impl Tally {
    fn accuracy(&self) -> f64 {
        if self.total == 0 {
            0.0
        } else {
            self.correct as f64 / self.total as f64
        }
    }
}

fn tally<F>(corpus: &Corpus, indices: &[usize], mut predict: F) -> Result<Tally>
where
    F: FnMut(usize) -> Result<Prediction>,
{
    let mut t = Tally {
        total: indices.len(),
        ..Tally::default()
    };
    for &i in indices {
        match predict(i) {
            Ok(p) => {
                if p.label == corpus.documents()[i].label() {
                    t.correct += 1;
                }
            }
            Err(Error::DegenerateQuery(_)) => t.unclassifiable += 1,
            Err(e) => return Err(e),
        }
    }
    Ok(t)
}

fn run_fold(
    corpus: &Corpus,
    embeddings: Option<&EmbeddingTable>,
    config: &ExperimentConfig,
    index: usize,
    fold: &Fold,
) -> Result<FoldResult> {
    let train = corpus.subset(&fold.train)?;
    let done = |test: Tally, selected: Hyperparams, validation: Option<f64>, notes: Vec<String>, degenerate: bool| {
        debug!("fold {index}: accuracy {:.4} with {selected}", test.accuracy());
        FoldResult {
            fold: index,
            accuracy: test.accuracy(),
            correct: test.correct,
            total: test.total,
            unclassifiable: test.unclassifiable,
            selected,
            validation_accuracy: validation,
            notes,
            degenerate,
        }
    };

    if train.classes().len() == 1 {
        let only = train.classes()[0].clone();
        let test = tally(corpus, &fold.test, |_| Ok(Prediction::from_scores(std::slice::from_ref(&only), vec![1.0])))?;
        let note = format!("training split has the single class `{only}`");
        return Ok(done(test, Hyperparams::default(), None, vec![note], true));
    }

    let tokens = |i: usize| corpus.documents()[i].tokens();
    let grid = &config.grid;
    match config.strategy {
        Strategy::Msm | Strategy::TfMsm => {
            let table = embeddings.expect("checked by run_experiment");
            let params = SubspaceParams {
                class_dim: DimPolicy::AtMost(max_of(&grid.class_dims)?),
                query_dim: DimPolicy::AtMost(max_of(&grid.query_dims)?),
                angles: None,
                normalize_vectors: config.normalize_vectors,
            };
            let model = if config.strategy == Strategy::Msm {
                train_msm(&train, table, &params)?
            } else {
                train_tfmsm(&train, table, &params)?
            };
            let products: Vec<_> = fold
                .validation
                .iter()
                .map(|&i| match model.query_products(tokens(i), table, params.query_dim) {
                    Ok(p) => Ok(Some(p)),
                    Err(Error::DegenerateQuery(_)) => Ok(None),
                    Err(e) => Err(e),
                })
                .collect::<Result<_>>()?;
            let mut points = Vec::new();
            for &mc in &grid.class_dims {
                for &mq in &grid.query_dims {
                    points.push(GridPoint {
                        params: (mc, mq),
                        dims: vec![mc, mq],
                    });
                }
            }
            let selection = select_hyperparams(&points, |&(mc, mq)| {
                let mut t = Tally {
                    total: products.len(),
                    ..Tally::default()
                };
                for (p, &i) in products.iter().zip(&fold.validation) {
                    match p {
                        Some(p) => {
                            let pred = Prediction::from_scores(model.classes(), p.scores(mc, mq, None)?);
                            if pred.label == corpus.documents()[i].label() {
                                t.correct += 1;
                            }
                        }
                        None => t.unclassifiable += 1,
                    }
                }
                Ok(Outcome::Accuracy(t.accuracy()))
            })?;
            let (mc, mq) = selection.params;
            let test = tally(corpus, &fold.test, |i| subspace_predict(&model, tokens(i), table, mc, mq))?;
            let selected = Hyperparams {
                class_dim: Some(mc),
                query_dim: Some(mq),
                ..Hyperparams::default()
            };
            Ok(done(test, selected, Some(selection.validation_accuracy), selection.notes, false))
        }
        Strategy::Sa | Strategy::Mvb | Strategy::Mnb => {
            let model: Box<dyn Classifier + Sync> = match config.strategy {
                Strategy::Sa => Box::new(train_sa(&train, embeddings.expect("checked by run_experiment"))?),
                Strategy::Mvb => Box::new(train_mvb(&train)?),
                _ => Box::new(train_mnb(&train)?),
            };
            let validation = tally(corpus, &fold.validation, |i| model.predict(tokens(i), embeddings))?;
            let test = tally(corpus, &fold.test, |i| model.predict(tokens(i), embeddings))?;
            Ok(done(test, Hyperparams::default(), Some(validation.accuracy()), Vec::new(), false))
        }
        Strategy::Lsa => {
            let features = FeatureSpace::fit(config.feature, &train, embeddings, config.normalize_vectors)?;
            let model = LsaModel::train_capped(&train, features, embeddings, max_of(&grid.lsa_ranks)?, config.seed)?;
            let points: Vec<GridPoint<usize>> = grid
                .lsa_ranks
                .iter()
                .map(|&k| GridPoint {
                    params: k,
                    dims: vec![k],
                })
                .collect();
            let selection = select_hyperparams(&points, |&k| {
                if k > model.max_rank() {
                    return Ok(Outcome::Infeasible(format!(
                        "k={k} exceeds the training matrix rank {}",
                        model.max_rank()
                    )));
                }
                let view = model.with_rank(k)?;
                let t = tally(corpus, &fold.validation, |i| view.predict(tokens(i), embeddings))?;
                Ok(Outcome::Accuracy(t.accuracy()))
            })?;
            let view = model.with_rank(selection.params)?;
            let test = tally(corpus, &fold.test, |i| view.predict(tokens(i), embeddings))?;
            let selected = Hyperparams {
                rank: Some(selection.params),
                ..Hyperparams::default()
            };
            Ok(done(test, selected, Some(selection.validation_accuracy), selection.notes, false))
        }
        Strategy::Svm => {
            let features = FeatureSpace::fit(config.feature, &train, embeddings, config.normalize_vectors)?;
            let points: Vec<GridPoint<f64>> = grid
                .svm_lambdas
                .iter()
                .map(|&l| GridPoint {
                    params: l,
                    dims: Vec::new(),
                })
                .collect();
            let mut best_model = None;
            let mut best_accuracy = f64::NEG_INFINITY;
            let selection = select_hyperparams(&points, |&lambda| {
                let params = SvmParams {
                    lambda,
                    epochs: config.svm_epochs,
                    seed: config.seed,
                };
                let model = train_svm(&train, features.clone(), embeddings, &params)?;
                let t = tally(corpus, &fold.validation, |i| model.predict(tokens(i), embeddings))?;
                if t.accuracy() > best_accuracy {
                    best_accuracy = t.accuracy();
                    best_model = Some(model);
                }
                Ok(Outcome::Accuracy(t.accuracy()))
            })?;
            let model = best_model.expect("at least one grid point was evaluated");
            let test = tally(corpus, &fold.test, |i| model.predict(tokens(i), embeddings))?;
            let selected = Hyperparams {
                lambda: Some(selection.params),
                ..Hyperparams::default()
            };
            Ok(done(test, selected, Some(selection.validation_accuracy), selection.notes, false))
        }
    }
}

fn subspace_predict(
    model: &SubspaceModel,
    tokens: &[String],
    table: &EmbeddingTable,
    class_dim: usize,
    query_dim: usize,
) -> Result<Prediction> {
    let products = model.query_products(tokens, table, DimPolicy::AtMost(query_dim))?;
    Ok(Prediction::from_scores(model.classes(), products.scores(class_dim, query_dim, None)?))
}

fn max_of(values: &[usize]) -> Result<usize> {
    values
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::Config("hyperparameter grid is empty".into()))
}
