//! Text classification with word subspaces: documents and classes are
//! modeled as linear subspaces of a word-embedding space and compared by
//! their canonical angles. Bag-of-words baselines and a cross-validation
//! harness are included.

pub mod classifiers;
pub mod container;
pub mod corpus;
pub mod embedding;
pub mod eval;
pub mod error;
pub mod linalg;
pub mod subspace;

pub use error::{Error, ErrorCategory, Result};
