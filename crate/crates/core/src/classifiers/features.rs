//! Sample extraction for the vector-space baselines (LSA, SVM).
//!
//! Bag-of-words features give one sample per document. Word-vector features
//! treat every distinct word vector of a class as a separate sample of that
//! class; a query becomes one sample per distinct in-vocabulary word.

use std::collections::HashMap;
use std::io::{Read, Write};

use super::{check_embedding_dimension, decode_feature, encode_feature, require_embeddings, FeatureKind};
use crate::container::{Decoder, Encoder};
use crate::corpus::{bow_tokens, Corpus, DocumentFrequencies, Vocabulary, Weighting};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

/// Sparse vector with strictly increasing indices.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn from_dense(values: &[f64]) -> Self {
        let mut v = Self::default();
        for (i, &x) in values.iter().enumerate() {
            if x != 0.0 {
                v.indices.push(i);
                v.values.push(x);
            }
        }
        v
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    /// Dot product with a dense vector.
    pub fn dot(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }
}

/// A fitted feature extractor.
#[derive(Debug, Clone, PartialEq)]
pub enum FeatureSpace {
    Bow {
        kind: FeatureKind,
        vocabulary: Vocabulary,
        /// Training-split document frequencies, kept for TF-IDF.
        frequencies: Option<DocumentFrequencies>,
    },
    WordVectors {
        dimension: usize,
        normalize: bool,
    },
}

/// One labeled training sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub class: usize,
    pub vector: SparseVector,
}

impl FeatureSpace {
    /// Fits the extractor on training data. The vocabulary and document
    /// frequencies come from `corpus` only.
    pub fn fit(kind: FeatureKind, corpus: &Corpus, embeddings: Option<&EmbeddingTable>, normalize: bool) -> Result<Self> {
        match kind {
            FeatureKind::W2v => Ok(FeatureSpace::WordVectors {
                dimension: require_embeddings(embeddings)?.dimension(),
                normalize,
            }),
            _ => {
                let vocabulary = Vocabulary::from_corpus(corpus);
                if vocabulary.is_empty() {
                    return Err(Error::Training("training vocabulary is empty".into()));
                }
                let frequencies = (kind == FeatureKind::TfidfBow).then(|| DocumentFrequencies::from_corpus(corpus));
                Ok(FeatureSpace::Bow {
                    kind,
                    vocabulary,
                    frequencies,
                })
            }
        }
    }

    pub fn kind(&self) -> FeatureKind {
        match self {
            FeatureSpace::Bow { kind, .. } => *kind,
            FeatureSpace::WordVectors { .. } => FeatureKind::W2v,
        }
    }

    /// Length of every sample vector.
    pub fn dimension(&self) -> usize {
        match self {
            FeatureSpace::Bow { vocabulary, .. } => vocabulary.len(),
            FeatureSpace::WordVectors { dimension, .. } => *dimension,
        }
    }

    pub fn embedding_dimension(&self) -> Option<usize> {
        match self {
            FeatureSpace::Bow { .. } => None,
            FeatureSpace::WordVectors { dimension, .. } => Some(*dimension),
        }
    }

    /// Labeled samples of `corpus`, whose class indices follow its class order.
    pub fn training_samples(&self, corpus: &Corpus, embeddings: Option<&EmbeddingTable>) -> Result<Vec<Sample>> {
        match self {
            FeatureSpace::Bow { .. } => corpus
                .documents()
                .iter()
                .map(|d| {
                    Ok(Sample {
                        class: corpus.class_index(d.label()).expect("document label is a corpus class"),
                        vector: self.bow(d.tokens())?,
                    })
                })
                .collect(),
            FeatureSpace::WordVectors { .. } => {
                let table = self.table(embeddings)?;
                let mut samples = Vec::new();
                for c in 0..corpus.classes().len() {
                    let lookup = table.lookup_all(corpus.class_tokens(c));
                    if lookup.is_empty() {
                        return Err(Error::EmptyClass(corpus.classes()[c].clone()));
                    }
                    for col in lookup.vectors.column_iter() {
                        samples.push(Sample {
                            class: c,
                            vector: self.word_vector(col.as_slice()),
                        });
                    }
                }
                Ok(samples)
            }
        }
    }

    /// Samples of a query document: one bag-of-words vector, or one vector
    /// per distinct in-vocabulary word.
    pub fn query_samples(&self, tokens: &[String], embeddings: Option<&EmbeddingTable>) -> Result<Vec<SparseVector>> {
        match self {
            FeatureSpace::Bow { .. } => Ok(vec![self.bow(tokens)?]),
            FeatureSpace::WordVectors { .. } => {
                let lookup = self.table(embeddings)?.lookup_all(tokens);
                if lookup.is_empty() {
                    return Err(Error::DegenerateQuery("no in-vocabulary words".into()));
                }
                Ok(lookup
                    .vectors
                    .column_iter()
                    .map(|col| self.word_vector(col.as_slice()))
                    .collect())
            }
        }
    }

    fn table<'a>(&self, embeddings: Option<&'a EmbeddingTable>) -> Result<&'a EmbeddingTable> {
        let table = require_embeddings(embeddings)?;
        check_embedding_dimension(self.dimension(), table)?;
        Ok(table)
    }

    fn word_vector(&self, v: &[f64]) -> SparseVector {
        let normalize = matches!(self, FeatureSpace::WordVectors { normalize: true, .. });
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if normalize && norm > 0.0 {
            SparseVector::from_dense(&v.iter().map(|x| x / norm).collect::<Vec<_>>())
        } else {
            SparseVector::from_dense(v)
        }
    }

    fn bow(&self, tokens: &[String]) -> Result<SparseVector> {
        let FeatureSpace::Bow {
            kind,
            vocabulary,
            frequencies,
        } = self
        else {
            unreachable!("bag-of-words extraction on a word-vector space")
        };
        let scheme = match kind {
            FeatureKind::BinBow => Weighting::Binary,
            FeatureKind::TfBow => Weighting::Tf,
            _ => Weighting::TfIdf,
        };
        let v = bow_tokens(tokens, vocabulary, scheme, frequencies.as_ref())?;
        Ok(SparseVector {
            indices: v.entries().iter().map(|e| e.0).collect(),
            values: v.entries().iter().map(|e| e.1).collect(),
        })
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        encode_feature(enc, self.kind())?;
        match self {
            FeatureSpace::Bow {
                vocabulary,
                frequencies,
                ..
            } => {
                enc.strings(vocabulary.terms())?;
                enc.bool(frequencies.is_some())?;
                if let Some(df) = frequencies {
                    enc.usize(df.documents())?;
                    let counts: Vec<usize> = vocabulary.terms().iter().map(|t| df.frequency(t)).collect();
                    enc.counts(&counts)?;
                }
                Ok(())
            }
            FeatureSpace::WordVectors { dimension, normalize } => {
                enc.usize(*dimension)?;
                enc.bool(*normalize)
            }
        }
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        let kind = decode_feature(dec)?;
        if kind == FeatureKind::W2v {
            return Ok(FeatureSpace::WordVectors {
                dimension: dec.usize()?,
                normalize: dec.bool()?,
            });
        }
        let terms = dec.strings()?;
        let frequencies = if dec.bool()? {
            let documents = dec.usize()?;
            let counts = dec.counts()?;
            if counts.len() != terms.len() {
                return Err(Error::Container("document frequency table does not match vocabulary".into()));
            }
            let map: HashMap<String, usize> = terms.iter().cloned().zip(counts).collect();
            Some(DocumentFrequencies::from_parts(documents, map))
        } else {
            None
        };
        Ok(FeatureSpace::Bow {
            kind,
            vocabulary: Vocabulary::from_terms(terms),
            frequencies,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Document;

    fn corpus() -> Corpus {
        Corpus::new(vec![
            Document::new("x", ["a", "b", "a"]).unwrap(),
            Document::new("y", ["b", "c"]).unwrap(),
        ])
        .unwrap()
    }

    #[test]
    fn bow_samples_follow_documents() {
        let space = FeatureSpace::fit(FeatureKind::TfBow, &corpus(), None, true).unwrap();
        let samples = space.training_samples(&corpus(), None).unwrap();
        assert_eq!(samples.len(), 2);
        assert_eq!(samples[0].vector.indices, vec![0, 1]);
        assert_eq!(samples[0].vector.values, vec![2.0, 1.0]);
        assert_eq!(samples[1].class, 1);
        let q = space.query_samples(&["c".into(), "zz".into()], None).unwrap();
        assert_eq!(q, vec![SparseVector { indices: vec![2], values: vec![1.0] }]);
    }

    #[test]
    fn tfidf_uses_training_frequencies() {
        let space = FeatureSpace::fit(FeatureKind::TfidfBow, &corpus(), None, true).unwrap();
        let q = space.query_samples(&["a".into(), "b".into()], None).unwrap();
        // b occurs in both documents, so its weight vanishes.
        assert_eq!(q[0].indices, vec![0]);
        assert!((q[0].values[0] - 2f64.log10()).abs() < 1e-15);
    }

    #[test]
    fn word_vector_samples_are_distinct_per_class() {
        let mut table = EmbeddingTable::new(2).unwrap();
        table.insert("a", &[3.0, 4.0]).unwrap();
        table.insert("b", &[0.0, 1.0]).unwrap();
        let space = FeatureSpace::fit(FeatureKind::W2v, &corpus(), Some(&table), true).unwrap();
        let samples = space.training_samples(&corpus(), Some(&table)).unwrap();
        assert_eq!(samples.len(), 3);
        assert_eq!(samples[0].vector.values, vec![0.6, 0.8]);
        assert!(matches!(
            space.query_samples(&["c".into()], Some(&table)),
            Err(Error::DegenerateQuery(_))
        ));
    }

    #[test]
    fn codec_round_trip() {
        for kind in [FeatureKind::BinBow, FeatureKind::TfidfBow] {
            let space = FeatureSpace::fit(kind, &corpus(), None, true).unwrap();
            let mut bytes = Vec::new();
            space.encode(&mut Encoder::new(&mut bytes)).unwrap();
            let back = FeatureSpace::decode(&mut Decoder::new(&bytes[..])).unwrap();
            assert_eq!(back, space);
        }
    }
}
