//! Linear one-vs-rest SVM trained by stochastic subgradient descent on the
//! regularized hinge loss (Pegasos schedule `η_t = 1 / (λ t)`).
//!
//! The bias is learned as the weight of a constant feature, so it is
//! regularized along with `w`. Each class scores `w·x − b`.

use std::io::{Read, Write};

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::features::{FeatureSpace, Sample, SparseVector};
use super::{Classifier, Prediction};
use crate::container::{Decoder, Encoder};
use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct SvmParams {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmParams {
    fn default() -> Self {
        Self {
            lambda: 1e-4,
            epochs: 20,
            seed: super::DEFAULT_SEED,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SvmModel {
    classes: Vec<String>,
    features: FeatureSpace,
    params: SvmParams,
    weights: Vec<Vec<f64>>,
    offsets: Vec<f64>,
}

pub fn train_svm(
    corpus: &Corpus,
    features: FeatureSpace,
    embeddings: Option<&EmbeddingTable>,
    params: &SvmParams,
) -> Result<SvmModel> {
    if corpus.classes().len() < 2 {
        return Err(Error::Training("SVM needs at least two classes".into()));
    }
    if !(params.lambda > 0.0 && params.lambda.is_finite()) {
        return Err(Error::Config(format!("SVM regularization must be positive, got {}", params.lambda)));
    }
    if params.epochs == 0 {
        return Err(Error::Config("SVM epochs must be at least 1".into()));
    }
    let samples = features.training_samples(corpus, embeddings)?;
    if samples.iter().any(|s| s.vector.values.iter().any(|v| !v.is_finite())) {
        return Err(Error::Training("non-finite feature value".into()));
    }
    let dim = features.dimension();
    let trained: Vec<(Vec<f64>, f64)> = (0..corpus.classes().len())
        .into_par_iter()
        .map(|c| {
            let seed = params.seed ^ (c as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15);
            pegasos(&samples, c, dim, params.lambda, params.epochs, seed)
        })
        .collect();
    let (weights, offsets) = trained.into_iter().unzip();
    Ok(SvmModel {
        classes: corpus.classes().to_vec(),
        features,
        params: params.clone(),
        weights,
        offsets,
    })
}

/// Binary scorer for `class` against the rest; returns `(w, b)`.
fn pegasos(samples: &[Sample], class: usize, dim: usize, lambda: f64, epochs: usize, seed: u64) -> (Vec<f64>, f64) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    // w = scale · v, with the bias weight stored last.
    let mut v = vec![0.0; dim + 1];
    let mut scale = 1.0;
    let mut order: Vec<usize> = (0..samples.len()).collect();
    let mut t = 0usize;
    for _ in 0..epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            t += 1;
            let eta = 1.0 / (lambda * t as f64);
            let x = &samples[i].vector;
            let y = if samples[i].class == class { 1.0 } else { -1.0 };
            let margin = y * scale * (x.dot(&v) + v[dim]);
            let shrink = 1.0 - eta * lambda;
            if shrink <= 0.0 {
                v.iter_mut().for_each(|w| *w = 0.0);
                scale = 1.0;
            } else {
                scale *= shrink;
            }
            if margin < 1.0 {
                let step = eta * y / scale;
                for (j, xj) in x.iter() {
                    v[j] += step * xj;
                }
                v[dim] += step;
            }
            if scale < 1e-100 {
                v.iter_mut().for_each(|w| *w *= scale);
                scale = 1.0;
            }
        }
    }
    let bias_weight = scale * v[dim];
    let w = v[..dim].iter().map(|x| x * scale).collect();
    (w, -bias_weight)
}

impl SvmModel {
    /// Wraps explicit per-class weights and offsets.
    pub fn from_weights(
        classes: Vec<String>,
        features: FeatureSpace,
        weights: Vec<Vec<f64>>,
        offsets: Vec<f64>,
    ) -> Result<Self> {
        let dim = features.dimension();
        if classes.is_empty() || weights.len() != classes.len() || offsets.len() != classes.len() || weights.iter().any(|w| w.len() != dim) {
            return Err(Error::Training("weights do not match classes and features".into()));
        }
        Ok(Self {
            classes,
            features,
            params: SvmParams::default(),
            weights,
            offsets,
        })
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn features(&self) -> &FeatureSpace {
        &self.features
    }

    pub fn params(&self) -> &SvmParams {
        &self.params
    }

    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    /// `w_j·x − b_j` for every class.
    pub fn decision_values(&self, x: &SparseVector) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.offsets)
            .map(|(w, b)| x.dot(w) - b)
            .collect()
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        enc.strings(&self.classes)?;
        self.features.encode(enc)?;
        enc.f64(self.params.lambda)?;
        enc.usize(self.params.epochs)?;
        enc.usize(self.params.seed as usize)?;
        for w in &self.weights {
            enc.reals(w)?;
        }
        enc.reals(&self.offsets)
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        let classes = dec.strings()?;
        let features = FeatureSpace::decode(dec)?;
        let params = SvmParams {
            lambda: dec.f64()?,
            epochs: dec.usize()?,
            seed: dec.usize()? as u64,
        };
        let weights = (0..classes.len()).map(|_| dec.reals()).collect::<Result<Vec<_>>>()?;
        let offsets = dec.reals()?;
        let mut model = Self::from_weights(classes, features, weights, offsets)
            .map_err(|_| Error::Container("inconsistent SVM model".into()))?;
        model.params = params;
        Ok(model)
    }
}

impl Classifier for SvmModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    /// Word-vector queries average the decision values of their words.
    fn predict(&self, tokens: &[String], embeddings: Option<&EmbeddingTable>) -> Result<Prediction> {
        let queries = self.features.query_samples(tokens, embeddings)?;
        let mut scores = vec![0.0; self.classes.len()];
        for q in &queries {
            for (s, d) in scores.iter_mut().zip(self.decision_values(q)) {
                *s += d;
            }
        }
        for s in scores.iter_mut() {
            *s /= queries.len() as f64;
        }
        Ok(Prediction::from_scores(&self.classes, scores))
    }
}
