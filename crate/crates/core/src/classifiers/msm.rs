//! Mutual subspace classification over word embeddings, with uniform (MSM)
//! or term-frequency (TF-MSM) word weights.

use std::io::{Read, Write};

use nalgebra::DMatrix;
use rayon::prelude::*;

use super::{check_embedding_dimension, decode_policy, encode_policy, require_embeddings, Classifier, Prediction};
use crate::container::{Decoder, Encoder};
use crate::corpus::Corpus;
use crate::embedding::{EmbeddingTable, Lookup};
use crate::error::{Error, Result};
use crate::subspace::{
    cosines_from_product, normalize_columns, similarity_from_cosines, weighted_word_subspace_with,
    word_subspace_with, DimPolicy, Subspace, WeightVector,
};

/// How distinct words are weighted when building a subspace.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SubspaceWeighting {
    /// Every distinct word counts once.
    Uniform,
    /// Each distinct word is weighted by its occurrence count.
    TermFrequency,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceParams {
    pub class_dim: DimPolicy,
    pub query_dim: DimPolicy,
    /// Number of canonical angles; `None` uses `min(m_c, m_q)`.
    pub angles: Option<usize>,
    /// Scale word vectors to unit norm before modeling.
    pub normalize_vectors: bool,
}

impl Default for SubspaceParams {
    fn default() -> Self {
        Self {
            class_dim: DimPolicy::AtMost(150),
            query_dim: DimPolicy::AtMost(25),
            angles: None,
            normalize_vectors: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SubspaceModel {
    weighting: SubspaceWeighting,
    params: SubspaceParams,
    classes: Vec<String>,
    subspaces: Vec<Subspace>,
}

/// Class-by-query basis products at full dimension, reusable across every
/// `(m_c, m_q)` pair no larger than the stored bases.
#[derive(Debug, Clone)]
pub struct QueryProducts {
    products: Vec<DMatrix<f64>>,
    query_dim: usize,
}

impl QueryProducts {
    pub fn query_dim(&self) -> usize {
        self.query_dim
    }

    /// Similarity to every class using the leading `class_dim` class basis
    /// vectors and `query_dim` query basis vectors, with
    /// `t = min(angles, m_c, m_q)`.
    pub fn scores(&self, class_dim: usize, query_dim: usize, angles: Option<usize>) -> Result<Vec<f64>> {
        let mq = query_dim.min(self.query_dim);
        self.products
            .iter()
            .map(|g| {
                let mc = class_dim.min(g.nrows());
                let cosines = cosines_from_product(g.view((0, 0), (mc, mq)));
                let t = angles.map_or(mc.min(mq), |a| a.min(mc).min(mq));
                similarity_from_cosines(&cosines, t)
            })
            .collect()
    }
}

/// Trains MSM: one subspace per class from its distinct in-vocabulary words.
pub fn train_msm(corpus: &Corpus, embeddings: &EmbeddingTable, params: &SubspaceParams) -> Result<SubspaceModel> {
    SubspaceModel::train(corpus, embeddings, params, SubspaceWeighting::Uniform)
}

/// Trains TF-MSM: as [`train_msm`] with each word weighted by its class count.
pub fn train_tfmsm(corpus: &Corpus, embeddings: &EmbeddingTable, params: &SubspaceParams) -> Result<SubspaceModel> {
    SubspaceModel::train(corpus, embeddings, params, SubspaceWeighting::TermFrequency)
}

impl SubspaceModel {
    fn train(
        corpus: &Corpus,
        embeddings: &EmbeddingTable,
        params: &SubspaceParams,
        weighting: SubspaceWeighting,
    ) -> Result<Self> {
        let subspaces = (0..corpus.classes().len())
            .into_par_iter()
            .map(|c| {
                let lookup = embeddings.lookup_all(corpus.class_tokens(c));
                if lookup.is_empty() {
                    return Err(Error::EmptyClass(corpus.classes()[c].clone()));
                }
                build(&lookup, weighting, params.class_dim, params.normalize_vectors)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            weighting,
            params: params.clone(),
            classes: corpus.classes().to_vec(),
            subspaces,
        })
    }

    /// Wraps prebuilt class subspaces.
    pub fn from_subspaces(
        weighting: SubspaceWeighting,
        params: SubspaceParams,
        classes: Vec<String>,
        subspaces: Vec<Subspace>,
    ) -> Result<Self> {
        if classes.is_empty() || classes.len() != subspaces.len() {
            return Err(Error::Training(format!(
                "{} classes for {} subspaces",
                classes.len(),
                subspaces.len()
            )));
        }
        let p = subspaces[0].ambient_dim();
        if let Some(s) = subspaces.iter().find(|s| s.ambient_dim() != p) {
            return Err(Error::AmbientMismatch {
                left: p,
                right: s.ambient_dim(),
            });
        }
        Ok(Self {
            weighting,
            params,
            classes,
            subspaces,
        })
    }

    pub fn weighting(&self) -> SubspaceWeighting {
        self.weighting
    }

    pub fn params(&self) -> &SubspaceParams {
        &self.params
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_subspaces(&self) -> &[Subspace] {
        &self.subspaces
    }

    pub fn ambient_dim(&self) -> usize {
        self.subspaces[0].ambient_dim()
    }

    /// Subspace of a query document, built with the model's weighting.
    pub fn query_subspace(&self, tokens: &[String], embeddings: &EmbeddingTable, policy: DimPolicy) -> Result<Subspace> {
        check_embedding_dimension(self.ambient_dim(), embeddings)?;
        let lookup = embeddings.lookup_all(tokens);
        if lookup.is_empty() {
            return Err(Error::DegenerateQuery(if tokens.is_empty() {
                "empty document".into()
            } else {
                "no in-vocabulary words".into()
            }));
        }
        build(&lookup, self.weighting, policy, self.params.normalize_vectors)
    }

    /// Predicts with explicit query dimension and angle count.
    pub fn predict_with(
        &self,
        tokens: &[String],
        embeddings: &EmbeddingTable,
        query_dim: DimPolicy,
        angles: Option<usize>,
    ) -> Result<Prediction> {
        let query = self.query_subspace(tokens, embeddings, query_dim)?;
        let scores = self
            .subspaces
            .iter()
            .map(|class| {
                let product = class.basis().transpose() * query.basis();
                let cosines = cosines_from_product(product.as_view());
                let max = class.dim().min(query.dim());
                let t = angles.map_or(max, |a| a.min(max));
                similarity_from_cosines(&cosines, t)
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Prediction::from_scores(&self.classes, scores))
    }

    /// Basis products against a query subspace built with `query_dim`.
    pub fn query_products(&self, tokens: &[String], embeddings: &EmbeddingTable, query_dim: DimPolicy) -> Result<QueryProducts> {
        let query = self.query_subspace(tokens, embeddings, query_dim)?;
        Ok(QueryProducts {
            products: self
                .subspaces
                .iter()
                .map(|c| c.basis().transpose() * query.basis())
                .collect(),
            query_dim: query.dim(),
        })
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        enc.u8(match self.weighting {
            SubspaceWeighting::Uniform => 0,
            SubspaceWeighting::TermFrequency => 1,
        })?;
        encode_policy(enc, self.params.class_dim)?;
        encode_policy(enc, self.params.query_dim)?;
        enc.usize(self.params.angles.unwrap_or(0))?;
        enc.bool(self.params.normalize_vectors)?;
        enc.strings(&self.classes)?;
        for s in &self.subspaces {
            enc.subspace(s)?;
        }
        Ok(())
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        let weighting = match dec.u8()? {
            0 => SubspaceWeighting::Uniform,
            1 => SubspaceWeighting::TermFrequency,
            t => return Err(Error::Container(format!("unknown weighting tag {t}"))),
        };
        let class_dim = decode_policy(dec)?;
        let query_dim = decode_policy(dec)?;
        let angles = match dec.usize()? {
            0 => None,
            t => Some(t),
        };
        let normalize_vectors = dec.bool()?;
        let classes = dec.strings()?;
        let subspaces = (0..classes.len())
            .map(|_| dec.subspace())
            .collect::<Result<Vec<_>>>()?;
        Self::from_subspaces(
            weighting,
            SubspaceParams {
                class_dim,
                query_dim,
                angles,
                normalize_vectors,
            },
            classes,
            subspaces,
        )
        .map_err(|e| Error::Container(format!("stored model is invalid: {e}")))
    }
}

impl Classifier for SubspaceModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, tokens: &[String], embeddings: Option<&EmbeddingTable>) -> Result<Prediction> {
        self.predict_with(tokens, require_embeddings(embeddings)?, self.params.query_dim, self.params.angles)
    }
}

fn build(lookup: &Lookup, weighting: SubspaceWeighting, policy: DimPolicy, normalize: bool) -> Result<Subspace> {
    let x = if normalize {
        normalize_columns(&lookup.vectors)?
    } else {
        lookup.vectors.clone()
    };
    match weighting {
        SubspaceWeighting::Uniform => word_subspace_with(&x, policy),
        SubspaceWeighting::TermFrequency => {
            weighted_word_subspace_with(&x, &WeightVector::from_counts(&lookup.counts)?, policy)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;
    use crate::subspace::projector_distance;

    fn axis_table(words: &[&str], p: usize) -> EmbeddingTable {
        let mut t = EmbeddingTable::new(p).unwrap();
        for (i, w) in words.iter().enumerate() {
            let mut v = vec![0.0; p];
            v[i] = 1.0;
            t.insert(*w, &v).unwrap();
        }
        t
    }

    fn doc(label: &str, text: &str) -> Document {
        Document::new(label, text.split_whitespace()).unwrap()
    }

    fn toks(text: &str) -> Vec<String> {
        text.split_whitespace().map(String::from).collect()
    }

    fn fixture() -> (Corpus, EmbeddingTable) {
        let table = axis_table(&["a", "b", "c", "d", "e", "f"], 6);
        let corpus = Corpus::new(vec![doc("x", "a b a"), doc("y", "c d"), doc("x", "b c"), doc("z", "e")]).unwrap();
        (corpus, table)
    }

    #[test]
    fn exact_multiset_query_scores_one() {
        let (corpus, table) = fixture();
        let model = train_msm(&corpus, &table, &SubspaceParams::default()).unwrap();
        let p = model.predict(&toks("c d"), Some(&table)).unwrap();
        assert_eq!(p.label, "y");
        assert!((p.score() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn orthogonal_query_ties_to_first_class() {
        let (corpus, table) = fixture();
        let model = train_msm(&corpus, &table, &SubspaceParams::default()).unwrap();
        let p = model.predict(&toks("f"), Some(&table)).unwrap();
        assert!(p.tie);
        assert_eq!(p.class_index, 0);
        assert!(p.scores.iter().all(|&s| s.abs() < 1e-12));
    }

    #[test]
    fn single_word_query_picks_owner() {
        let (corpus, table) = fixture();
        let model = train_msm(&corpus, &table, &SubspaceParams::default()).unwrap();
        let p = model.predict(&toks("e"), Some(&table)).unwrap();
        assert_eq!(p.label, "z");
        assert!(!p.tie);
        for (s, want) in p.scores.iter().zip([0.0, 0.0, 1.0]) {
            assert!((s - want).abs() < 1e-12);
        }
    }

    #[test]
    fn oov_class_and_query_are_rejected() {
        let table = axis_table(&["a"], 2);
        let corpus = Corpus::new(vec![doc("x", "a"), doc("y", "zzz")]).unwrap();
        assert!(matches!(
            train_msm(&corpus, &table, &SubspaceParams::default()),
            Err(Error::EmptyClass(c)) if c == "y"
        ));
        let corpus = Corpus::new(vec![doc("x", "a")]).unwrap();
        let model = train_msm(&corpus, &table, &SubspaceParams::default()).unwrap();
        assert!(matches!(model.predict(&toks("qq"), Some(&table)), Err(Error::DegenerateQuery(_))));
        assert!(matches!(model.predict(&[], Some(&table)), Err(Error::DegenerateQuery(_))));
        let other = axis_table(&["a"], 3);
        assert!(matches!(
            model.predict(&toks("a"), Some(&other)),
            Err(Error::AmbientMismatch { left: 2, right: 3 })
        ));
    }

    #[test]
    fn duplicates_do_not_change_msm() {
        let (corpus, table) = fixture();
        let dedup = Corpus::new(vec![doc("x", "a b"), doc("y", "c d"), doc("x", "c"), doc("z", "e")]).unwrap();
        let a = train_msm(&corpus, &table, &SubspaceParams::default()).unwrap();
        let b = train_msm(&dedup, &table, &SubspaceParams::default()).unwrap();
        for (s, t) in a.class_subspaces().iter().zip(b.class_subspaces()) {
            assert!(projector_distance(s, t) < 1e-12);
        }
    }

    #[test]
    fn tf_weight_dominates_first_basis_vector() {
        let table = axis_table(&["a", "b", "c"], 3);
        let text = format!("{} b c", "a ".repeat(100));
        let corpus = Corpus::new(vec![doc("x", &text)]).unwrap();
        let params = SubspaceParams {
            class_dim: DimPolicy::Exact(1),
            ..SubspaceParams::default()
        };
        let model = train_tfmsm(&corpus, &table, &params).unwrap();
        let first = model.class_subspaces()[0].basis().column(0).into_owned();
        let angle = first[0].abs().min(1.0).acos();
        assert!(angle < 1e-3);
    }

    #[test]
    fn grid_products_match_direct_prediction() {
        let (corpus, table) = fixture();
        let model = train_tfmsm(&corpus, &table, &SubspaceParams::default()).unwrap();
        let query = toks("a b c c");
        let products = model.query_products(&query, &table, DimPolicy::AtMost(50)).unwrap();
        for mq in 1..=3 {
            let direct = model.predict_with(&query, &table, DimPolicy::AtMost(mq), None).unwrap();
            let grid = products.scores(150, mq, None).unwrap();
            for (a, b) in direct.scores.iter().zip(&grid) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
