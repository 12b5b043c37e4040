//! Similarity average: mean pairwise cosine between the distinct word
//! vectors of a class and of a query.

use std::io::{Read, Write};

use nalgebra::{DMatrix, DVector};

use super::{check_embedding_dimension, require_embeddings, Classifier, Prediction};
use crate::container::{Decoder, Encoder};
use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::subspace::normalize_columns;

/// `(1 / (N_A N_B)) Σ_a Σ_b x_aᵀ x_b` over unit-normalized columns of `a`
/// and `b`.
pub fn similarity_average(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<f64> {
    if a.nrows() != b.nrows() {
        return Err(Error::AmbientMismatch {
            left: a.nrows(),
            right: b.nrows(),
        });
    }
    if a.ncols() == 0 || b.ncols() == 0 {
        return Err(Error::DegenerateInput("empty word set".into()));
    }
    let a = normalize_columns(a)?;
    let b = normalize_columns(b)?;
    let mut total = 0.0;
    for x in a.column_iter() {
        for y in b.column_iter() {
            total += x.dot(&y);
        }
    }
    Ok(total / (a.ncols() * b.ncols()) as f64)
}

/// The double sum factors into a dot product of mean unit vectors, so each
/// class is stored as its mean.
#[derive(Debug, Clone, PartialEq)]
pub struct SaModel {
    classes: Vec<String>,
    means: Vec<DVector<f64>>,
    word_counts: Vec<usize>,
}

pub fn train_sa(corpus: &Corpus, embeddings: &EmbeddingTable) -> Result<SaModel> {
    let mut means = Vec::with_capacity(corpus.classes().len());
    let mut word_counts = Vec::with_capacity(corpus.classes().len());
    for (c, label) in corpus.classes().iter().enumerate() {
        let lookup = embeddings.lookup_all(corpus.class_tokens(c));
        if lookup.is_empty() {
            return Err(Error::EmptyClass(label.clone()));
        }
        means.push(mean_unit(&lookup.vectors)?);
        word_counts.push(lookup.words.len());
    }
    Ok(SaModel {
        classes: corpus.classes().to_vec(),
        means,
        word_counts,
    })
}

fn mean_unit(x: &DMatrix<f64>) -> Result<DVector<f64>> {
    let x = normalize_columns(x)?;
    Ok(x.column_mean())
}

impl SaModel {
    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn dimension(&self) -> usize {
        self.means[0].len()
    }

    /// Distinct in-vocabulary words per class.
    pub fn word_counts(&self) -> &[usize] {
        &self.word_counts
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        enc.strings(&self.classes)?;
        enc.counts(&self.word_counts)?;
        for m in &self.means {
            enc.reals(m.as_slice())?;
        }
        Ok(())
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        let classes = dec.strings()?;
        let word_counts = dec.counts()?;
        let means = (0..classes.len())
            .map(|_| dec.reals().map(DVector::from_vec))
            .collect::<Result<Vec<_>>>()?;
        if classes.is_empty() || word_counts.len() != classes.len() || means.iter().any(|m| m.len() != means[0].len()) {
            return Err(Error::Container("inconsistent similarity-average model".into()));
        }
        Ok(Self {
            classes,
            means,
            word_counts,
        })
    }
}

impl Classifier for SaModel {
    fn classes(&self) -> &[String] {
        &self.classes
    }

    fn predict(&self, tokens: &[String], embeddings: Option<&EmbeddingTable>) -> Result<Prediction> {
        let embeddings = require_embeddings(embeddings)?;
        check_embedding_dimension(self.dimension(), embeddings)?;
        let lookup = embeddings.lookup_all(tokens);
        if lookup.is_empty() {
            return Err(Error::DegenerateQuery("no in-vocabulary words".into()));
        }
        let query = mean_unit(&lookup.vectors)?;
        let scores = self.means.iter().map(|m| m.dot(&query)).collect();
        Ok(Prediction::from_scores(&self.classes, scores))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn e(i: usize) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(3, 1);
        m[(i, 0)] = 1.0;
        m
    }

    #[test]
    fn pairwise_examples() {
        assert_eq!(similarity_average(&e(0), &e(0)).unwrap(), 1.0);
        assert_eq!(similarity_average(&e(0), &e(1)).unwrap(), 0.0);
        let ab = DMatrix::from_columns(&[e(0).column(0), e(1).column(0)]);
        assert_eq!(similarity_average(&ab, &e(0)).unwrap(), 0.5);
    }

    #[test]
    fn model_matches_double_sum() {
        let mut table = EmbeddingTable::new(3).unwrap();
        table.insert("a", &[1.0, 0.2, 0.0]).unwrap();
        table.insert("b", &[0.0, 2.0, 1.0]).unwrap();
        table.insert("c", &[-1.0, 0.5, 3.0]).unwrap();
        let corpus = Corpus::new(vec![
            Document::new("x", ["a", "b", "a"]).unwrap(),
            Document::new("y", ["c"]).unwrap(),
        ])
        .unwrap();
        let model = train_sa(&corpus, &table).unwrap();
        let query: Vec<String> = ["b", "c", "c", "zz"].iter().map(|s| s.to_string()).collect();
        let p = model.predict(&query, Some(&table)).unwrap();
        let q = table.lookup_all(&query).vectors;
        for (c, score) in p.scores.iter().enumerate() {
            let class = table.lookup_all(corpus.class_tokens(c)).vectors;
            let direct = similarity_average(&class, &q).unwrap();
            assert!((score - direct).abs() < 1e-12);
        }
    }
}
