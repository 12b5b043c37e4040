//! Cross-validation harness: folds, validation-based hyperparameter
//! selection, accuracy reports, eigenvalue spectra and paired t-tests.

mod experiment;
mod folds;
mod report;
mod select;
mod spectrum;
mod ttest;

pub use experiment::{mean_std, run_experiment, ExperimentConfig, FoldResult, Grid, Hyperparams, StrategyReport};
pub use folds::{make_folds, Fold, FoldPlan, FOLD_COUNT, TRAIN_FRACTION, VALIDATION_FRACTION};
pub use report::{Comparison, EvalReport, REPORT_FORMAT, REPORT_VERSION};
pub use select::{select_hyperparams, GridPoint, Outcome, Selection};
pub use spectrum::{spectrum_report, SpectrumReport};
pub use ttest::{paired_ttest, two_tailed_p, TTest};
