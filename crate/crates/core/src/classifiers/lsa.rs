//! Latent semantic analysis with cosine nearest-neighbor classification.
//!
//! Documents are projected as `d̂ = Σ_k⁻¹ U_kᵀ d`. A query takes the label of
//! the training projection with the largest cosine. With word-vector
//! features each query word is matched separately and a class scores the
//! mean over query words of its best cosine.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::features::{FeatureSpace, SparseVector};
use super::{Classifier, Prediction};
use crate::container::{Decoder, Encoder};
use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::linalg::truncated_svd;

/// Singular values at or below this fraction of the largest are treated as
/// zero when determining rank.
pub const SINGULAR_VALUE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LsaModel {
    classes: Vec<String>,
    features: FeatureSpace,
    u: DMatrix<f64>,
    sigma: DVector<f64>,
    /// Projected training samples, one row each, `k_max` columns.
    projections: DMatrix<f64>,
    sample_classes: Vec<usize>,
    rank: usize,
}

/// Trains with exactly rank `k`.
pub fn train_lsa(
    corpus: &Corpus,
    features: FeatureSpace,
    embeddings: Option<&EmbeddingTable>,
    k: usize,
    seed: u64,
) -> Result<LsaModel> {
    LsaModel::train_up_to(corpus, features, embeddings, k, seed)
}

impl LsaModel {
    /// Decomposes once for every rank up to `k_max`; the active rank starts
    /// at `k_max` and can be lowered with [`LsaModel::with_rank`].
    pub fn train_up_to(
        corpus: &Corpus,
        features: FeatureSpace,
        embeddings: Option<&EmbeddingTable>,
        k_max: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::fit(corpus, features, embeddings, k_max, seed, false)
    }

    /// As [`LsaModel::train_up_to`], but keeps `min(k_max, rank)` dimensions
    /// instead of failing when the rank is smaller.
    pub fn train_capped(
        corpus: &Corpus,
        features: FeatureSpace,
        embeddings: Option<&EmbeddingTable>,
        k_max: usize,
        seed: u64,
    ) -> Result<Self> {
        Self::fit(corpus, features, embeddings, k_max, seed, true)
    }

    fn fit(
        corpus: &Corpus,
        features: FeatureSpace,
        embeddings: Option<&EmbeddingTable>,
        k_max: usize,
        seed: u64,
        cap: bool,
    ) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Config("LSA rank must be at least 1".into()));
        }
        let samples = features.training_samples(corpus, embeddings)?;
        let columns: Vec<SparseVector> = samples.iter().map(|s| s.vector.clone()).collect();
        let svd = truncated_svd(features.dimension(), &columns, k_max, seed);
        let largest = svd.sigma.iter().copied().fold(0.0, f64::max);
        let rank = svd
            .sigma
            .iter()
            .take_while(|&&s| s > SINGULAR_VALUE_TOLERANCE * largest && largest > 0.0)
            .count();
        let k_max = if cap && rank > 0 { k_max.min(rank) } else { k_max };
        if k_max > rank {
            return Err(Error::Dimension {
                requested: k_max,
                cap: rank,
            });
        }
        let u = svd.u.columns(0, k_max).into_owned();
        let sigma = svd.sigma.rows(0, k_max).into_owned();
        let mut projections = DMatrix::zeros(columns.len(), k_max);
        for (i, col) in columns.iter().enumerate() {
            let p = project(&u, &sigma, col);
            projections.row_mut(i).copy_from(&p.transpose());
        }
        Ok(Self {
            classes: corpus.classes().to_vec(),
            features,
            u,
            sigma,
            projections,
            sample_classes: samples.iter().map(|s| s.class).collect(),
            rank: k_max,
        })
    }

    /// A copy using only the leading `k` dimensions.
    pub fn with_rank(&self, k: usize) -> Result<Self> {
        if k == 0 || k > self.sigma.len() {
            return Err(Error::Dimension {
                requested: k,
                cap: self.sigma.len(),
            });
        }
        let mut m = self.clone();
        m.rank = k;
        Ok(m)
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn features(&self) -> &FeatureSpace {
        &self.features
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    /// Largest rank available without retraining.
    pub fn max_rank(&self) -> usize {
        self.sigma.len()
    }

    pub fn singular_values(&self) -> &[f64] {
        &self.sigma.as_slice()[..self.rank]
    }

    /// `Σ_k⁻¹ U_kᵀ d` at the active rank.
    pub fn project(&self, d: &SparseVector) -> DVector<f64> {
        project(&self.u, &self.sigma, d).rows(0, self.rank).into_owned()
    }

    /// Stored projection of training sample `i` at the active rank.
    pub fn training_projection(&self, i: usize) -> DVector<f64> {
        self.projections.row(i).columns(0, self.rank).transpose()
    }

    pub fn class_sample_count(&self, class: usize) -> usize {
        self.sample_classes.iter().filter(|&&c| c == class).count()
    }

    /// Best cosine per class for one query sample.
    fn best_cosines(&self, q: &SparseVector) -> Result<Vec<f64>> {
        let coords = self.u.columns(0, self.rank).tr_mul(&dense_column(self.u.nrows(), q));
        if coords.norm() <= 1e-12 * q.norm() || q.nnz() == 0 {
            return Err(Error::DegenerateQuery("query has no component in the latent space".into()));
        }
        let projected = DVector::from_iterator(self.rank, (0..self.rank).map(|i| coords[i] / self.sigma[i]));
        let qn = projected.norm();
        let mut best = vec![-1.0; self.classes.len()];
        let projections = self.projections.columns(0, self.rank);
        for (row, &class) in projections.row_iter().zip(&self.sample_classes) {
            let norm = row.norm();
            if norm == 0.0 {
                continue;
            }
            let cos = (row.transpose().dot(&projected) / (norm * qn)).clamp(-1.0, 1.0);
            if cos > best[class] {
                best[class] = cos;
            }
        }
        Ok(best)
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        enc.strings(&self.classes)?;
        self.features.encode(enc)?;
        enc.usize(self.rank)?;
        enc.matrix(&self.u)?;
        enc.reals(self.sigma.as_slice())?;
        enc.matrix(&self.projections)?;
        enc.counts(&self.sample_classes)
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        let classes = dec.strings()?;
        let features = FeatureSpace::decode(dec)?;
        let rank = dec.usize()?;
        let u = dec.matrix()?;
        let sigma = DVector::from_vec(dec.reals()?);
        let projections = dec.matrix()?;
        let sample_classes = dec.counts()?;
        let k = sigma.len();
        if classes.is_empty()
            || rank == 0
            || rank > k
            || u.ncols() != k
            || u.nrows() != features.dimension()
            || projections.ncols() != k
            || projections.nrows() != sample_classes.len()
            || sample_classes.iter().any(|&c| c >= classes.len())
            || sigma.iter().any(|&s| !(s > 0.0))
        {
            return Err(Error::Container("inconsistent LSA model".into()));
        }
        Ok(Self {
            classes,
            features,
            u,
            sigma,
            projections,
            sample_classes,
            rank,
        })
    }
}

impl Classifier for LsaModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, tokens: &[String], embeddings: Option<&EmbeddingTable>) -> Result<Prediction> {
        let queries = self.features.query_samples(tokens, embeddings)?;
        let mut scores = vec![0.0; self.classes.len()];
        for q in &queries {
            for (s, b) in scores.iter_mut().zip(self.best_cosines(q)?) {
                *s += b;
            }
        }
        for s in scores.iter_mut() {
            *s /= queries.len() as f64;
        }
        Ok(Prediction::from_scores(&self.classes, scores))
    }
}

fn dense_column(rows: usize, v: &SparseVector) -> DVector<f64> {
    let mut d = DVector::zeros(rows);
    for (i, x) in v.iter() {
        d[i] = x;
    }
    d
}

fn project(u: &DMatrix<f64>, sigma: &DVector<f64>, d: &SparseVector) -> DVector<f64> {
    let mut out = DVector::zeros(u.ncols());
    for (i, x) in d.iter() {
        for k in 0..u.ncols() {
            out[k] += u[(i, k)] * x;
        }
    }
    out.component_div(sigma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::FeatureKind;
    use crate::corpus::Document;

    fn doc(label: &str, text: &str) -> Document {
        Document::new(label, text.split_whitespace()).unwrap()
    }

    fn toks(text: &str) -> Vec<String> {
        text.split_whitespace().map(String::from).collect()
    }

    fn fit(corpus: &Corpus, k: usize) -> Result<LsaModel> {
        let features = FeatureSpace::fit(FeatureKind::TfBow, corpus, None, true)?;
        train_lsa(corpus, features, None, k, 0)
    }

    #[test]
    fn identity_documents() {
        let corpus = Corpus::new(vec![doc("x", "a"), doc("y", "b")]).unwrap();
        let model = fit(&corpus, 2).unwrap();
        let p = model.predict(&toks("a"), None).unwrap();
        assert_eq!(p.label, "x");
        assert!((p.score() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn training_projection_reconstructs() {
        let corpus = Corpus::new(vec![doc("x", "a a b"), doc("y", "b c"), doc("x", "c a")]).unwrap();
        let model = fit(&corpus, 3).unwrap();
        let features = model.features().clone();
        let samples = features.training_samples(&corpus, None).unwrap();
        for (i, s) in samples.iter().enumerate() {
            let lhs = DVector::from_iterator(3, (0..3).map(|k| model.sigma[k] * model.training_projection(i)[k]));
            let rhs = model.u.tr_mul(&dense_column(3, &s.vector));
            assert!((lhs - rhs).norm() <= 1e-8);
        }
    }

    #[test]
    fn rank_one_documents_are_colinear() {
        let corpus = Corpus::new(vec![doc("x", "a b"), doc("y", "a a b b")]).unwrap();
        let model = fit(&corpus, 1).unwrap();
        let p = model.predict(&toks("a b"), None).unwrap();
        assert!(p.tie);
        assert!((p.scores[0] - 1.0).abs() < 1e-12 && (p.scores[1] - 1.0).abs() < 1e-12);
        assert!(matches!(fit(&corpus, 2), Err(Error::Dimension { requested: 2, cap: 1 })));
    }

    #[test]
    fn out_of_vocabulary_query_is_degenerate() {
        let corpus = Corpus::new(vec![doc("x", "a"), doc("y", "b")]).unwrap();
        let model = fit(&corpus, 2).unwrap();
        assert!(matches!(model.predict(&toks("zz"), None), Err(Error::DegenerateQuery(_))));
    }

    #[test]
    fn lower_rank_view_uses_prefix() {
        let corpus = Corpus::new(vec![doc("x", "a a b"), doc("y", "b c"), doc("x", "c a")]).unwrap();
        let full = fit(&corpus, 3).unwrap();
        let direct = fit(&corpus, 2).unwrap();
        let view = full.with_rank(2).unwrap();
        let q = toks("a c");
        let a = direct.predict(&q, None).unwrap();
        let b = view.predict(&q, None).unwrap();
        for (x, y) in a.scores.iter().zip(&b.scores) {
            assert!((x - y).abs() < 1e-10);
        }
    }
}
