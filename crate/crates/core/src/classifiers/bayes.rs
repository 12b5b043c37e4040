//! Naive Bayes over bag-of-words: multi-variate Bernoulli (MVB) and
//! multinomial (MNB).
//!
//! Both share the smoothing `P(w|c) = (1 + |D_c^w|) / (|C| + |D|)` where
//! `|D_c^w|` counts documents of class `c` containing `w`, and the prior
//! `P(c) = (1 + |D_c|) / (|C| + |D|)`. The word estimate is not normalized
//! over the vocabulary.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};

use super::{Classifier, Prediction};
use crate::container::{Decoder, Encoder};
use crate::corpus::{Corpus, Vocabulary};
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};

/// Upper clamp keeping `log(1 − P)` finite.
pub const MAX_WORD_PROBABILITY: f64 = 1.0 - 1e-12;

/// Smoothed tables shared by both variants, in log space.
#[derive(Debug, Clone, PartialEq)]
struct Tables {
    classes: Vec<String>,
    vocabulary: Vocabulary,
    log_prior: Vec<f64>,
    /// `log P(w_k | c_j)`, indexed `[j][k]`.
    log_word: Vec<Vec<f64>>,
}

impl Tables {
    fn fit(corpus: &Corpus) -> Result<Self> {
        let vocabulary = Vocabulary::from_corpus(corpus);
        if vocabulary.is_empty() {
            return Err(Error::Training("training vocabulary is empty".into()));
        }
        let n_classes = corpus.classes().len();
        let denominator = (n_classes + corpus.len()) as f64;
        let mut log_prior = Vec::with_capacity(n_classes);
        let mut log_word = Vec::with_capacity(n_classes);
        for c in 0..n_classes {
            let docs = corpus.class_documents(c);
            log_prior.push(((1 + docs.len()) as f64 / denominator).ln());
            let mut containing = vec![0usize; vocabulary.len()];
            for &d in docs {
                let distinct: HashSet<&str> = corpus.documents()[d].tokens().iter().map(String::as_str).collect();
                for w in distinct {
                    if let Some(k) = vocabulary.get(w) {
                        containing[k] += 1;
                    }
                }
            }
            log_word.push(
                containing
                    .into_iter()
                    .map(|n| ((1 + n) as f64 / denominator).min(MAX_WORD_PROBABILITY).ln())
                    .collect(),
            );
        }
        Ok(Self {
            classes: corpus.classes().to_vec(),
            vocabulary,
            log_prior,
            log_word,
        })
    }

    fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        enc.strings(&self.classes)?;
        enc.strings(self.vocabulary.terms())?;
        enc.reals(&self.log_prior)?;
        for row in &self.log_word {
            enc.reals(row)?;
        }
        Ok(())
    }

    fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        let classes = dec.strings()?;
        let terms = dec.strings()?;
        let n_terms = terms.len();
        let vocabulary = Vocabulary::from_terms(terms);
        let log_prior = dec.reals()?;
        let log_word = (0..classes.len()).map(|_| dec.reals()).collect::<Result<Vec<_>>>()?;
        if classes.is_empty()
            || vocabulary.len() != n_terms
            || log_prior.len() != classes.len()
            || log_word.iter().any(|r| r.len() != n_terms)
        {
            return Err(Error::Container("inconsistent naive Bayes model".into()));
        }
        Ok(Self {
            classes,
            vocabulary,
            log_prior,
            log_word,
        })
    }

    /// Vocabulary term counts of the query; unknown words are dropped.
    fn query_counts(&self, tokens: &[String]) -> BTreeMap<usize, usize> {
        let mut counts = BTreeMap::new();
        for t in tokens {
            if let Some(k) = self.vocabulary.get(t) {
                *counts.entry(k).or_insert(0) += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BernoulliNb {
    tables: Tables,
    /// `log P(c_j) + Σ_k log(1 − P(w_k | c_j))`: the score of a document
    /// containing no vocabulary word.
    base: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MultinomialNb {
    tables: Tables,
}

pub fn train_mvb(corpus: &Corpus) -> Result<BernoulliNb> {
    Ok(BernoulliNb::from_tables(Tables::fit(corpus)?))
}

pub fn train_mnb(corpus: &Corpus) -> Result<MultinomialNb> {
    Ok(MultinomialNb {
        tables: Tables::fit(corpus)?,
    })
}

impl BernoulliNb {
    fn from_tables(tables: Tables) -> Self {
        let base = tables
            .log_prior
            .iter()
            .zip(&tables.log_word)
            .map(|(prior, row)| prior + row.iter().map(|&lp| log1m_exp(lp)).sum::<f64>())
            .collect();
        Self { tables, base }
    }

    pub fn classes(&self) -> &[String] {
        &self.tables.classes
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.tables.vocabulary
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.tables.log_prior
    }

    /// `log P(w | c)` for the class at `class`, if `word` is in the vocabulary.
    pub fn log_word_probability(&self, class: usize, word: &str) -> Option<f64> {
        self.tables.vocabulary.get(word).map(|k| self.tables.log_word[class][k])
    }

    /// Log joint probability `log P(c_j) + log P(d | c_j)` for every class.
    pub fn log_scores(&self, tokens: &[String]) -> Vec<f64> {
        let present = self.tables.query_counts(tokens);
        self.base
            .iter()
            .zip(&self.tables.log_word)
            .map(|(base, row)| {
                base + present
                    .keys()
                    .map(|&k| row[k] - log1m_exp(row[k]))
                    .sum::<f64>()
            })
            .collect()
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        self.tables.encode(enc)
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        Ok(Self::from_tables(Tables::decode(dec)?))
    }
}

impl MultinomialNb {
    pub fn classes(&self) -> &[String] {
        &self.tables.classes
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.tables.vocabulary
    }

    pub fn log_prior(&self) -> &[f64] {
        &self.tables.log_prior
    }

    pub fn log_word_probability(&self, class: usize, word: &str) -> Option<f64> {
        self.tables.vocabulary.get(word).map(|k| self.tables.log_word[class][k])
    }

    /// `log P(c_j) + Σ_k n_k log P(w_k | c_j)`; the length and multinomial
    /// coefficient factors are identical across classes and omitted.
    pub fn log_scores(&self, tokens: &[String]) -> Vec<f64> {
        let counts = self.tables.query_counts(tokens);
        self.tables
            .log_prior
            .iter()
            .zip(&self.tables.log_word)
            .map(|(prior, row)| prior + counts.iter().map(|(&k, &n)| n as f64 * row[k]).sum::<f64>())
            .collect()
    }

    pub(crate) fn encode<W: Write>(&self, enc: &mut Encoder<W>) -> Result<()> {
        self.tables.encode(enc)
    }

    pub(crate) fn decode<R: Read>(dec: &mut Decoder<R>) -> Result<Self> {
        Ok(Self {
            tables: Tables::decode(dec)?,
        })
    }
}

impl Classifier for BernoulliNb {
    fn classes(&self) -> &[String] {
        &self.tables.classes
    }

    fn predict(&self, tokens: &[String], _: Option<&EmbeddingTable>) -> Result<Prediction> {
        Ok(Prediction::from_scores(&self.tables.classes, self.log_scores(tokens)))
    }
}

impl Classifier for MultinomialNb {
    fn classes(&self) -> &[String] {
        &self.tables.classes
    }

    fn predict(&self, tokens: &[String], _: Option<&EmbeddingTable>) -> Result<Prediction> {
        Ok(Prediction::from_scores(&self.tables.classes, self.log_scores(tokens)))
    }
}

/// `log(1 − e^x)` for `x < 0`.
fn log1m_exp(x: f64) -> f64 {
    if x > -std::f64::consts::LN_2 {
        (-x.exp_m1()).ln()
    } else {
        (-x.exp()).ln_1p()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classifiers::posteriors;
    use crate::corpus::Document;

    fn doc(label: &str, text: &str) -> Document {
        Document::new(label, text.split_whitespace()).unwrap()
    }

    fn toks(text: &str) -> Vec<String> {
        text.split_whitespace().map(String::from).collect()
    }

    #[test]
    fn prior_from_class_document_counts() {
        // 8 classes, 7674 documents, one class with 51 of them.
        let mut docs = vec![];
        for i in 0..7 {
            docs.push(doc(&format!("c{i}"), "w"));
        }
        for _ in 0..51 {
            docs.push(doc("grain", "w"));
        }
        while docs.len() < 7674 {
            docs.push(doc("c0", "w"));
        }
        let corpus = Corpus::new(docs).unwrap();
        let model = train_mnb(&corpus).unwrap();
        let g = corpus.class_index("grain").unwrap();
        assert!((model.log_prior()[g].exp() - 52.0 / 7682.0).abs() < 1e-15);
    }

    #[test]
    fn word_probability_uses_document_counts() {
        let corpus = Corpus::new(vec![doc("x", "a a b"), doc("x", "a"), doc("y", "b")]).unwrap();
        let model = train_mvb(&corpus).unwrap();
        // |C| + |D| = 5
        assert!((model.log_word_probability(0, "a").unwrap().exp() - 3.0 / 5.0).abs() < 1e-15);
        assert!((model.log_word_probability(0, "b").unwrap().exp() - 2.0 / 5.0).abs() < 1e-15);
        assert!((model.log_word_probability(1, "a").unwrap().exp() - 1.0 / 5.0).abs() < 1e-15);
        assert!(model.log_word_probability(0, "zzz").is_none());
    }

    #[test]
    fn bernoulli_scores_by_hand() {
        let corpus = Corpus::new(vec![doc("x", "a a b"), doc("x", "a"), doc("y", "b")]).unwrap();
        let model = train_mvb(&corpus).unwrap();
        let s = model.log_scores(&toks("a unknown"));
        let x = (3.0 / 5.0) * (3.0 / 5.0) * (1.0 - 2.0 / 5.0);
        let y = (2.0 / 5.0) * (1.0 / 5.0) * (1.0 - 2.0 / 5.0);
        assert!((s[0] - f64::ln(x)).abs() < 1e-12);
        assert!((s[1] - f64::ln(y)).abs() < 1e-12);
    }

    #[test]
    fn multinomial_counts_repeats() {
        let corpus = Corpus::new(vec![doc("x", "a"), doc("x", "a"), doc("x", "a c"), doc("y", "b"), doc("y", "c")]).unwrap();
        let model = train_mnb(&corpus).unwrap();
        let s = model.log_scores(&toks("a a"));
        let d: f64 = 7.0;
        let x = (4.0 / d) * (4.0 / d).powi(2);
        let y = (3.0 / d) * (1.0 / d).powi(2);
        assert!((s[0] - x.ln()).abs() < 1e-12);
        assert!((s[1] - y.ln()).abs() < 1e-12);
        let p = model.predict(&toks("a a"), None).unwrap();
        assert_eq!(p.label, "x");
    }

    #[test]
    fn empty_document_uses_priors() {
        let corpus = Corpus::new(vec![doc("x", "a"), doc("y", "b"), doc("y", "b")]).unwrap();
        let model = train_mnb(&corpus).unwrap();
        let p = model.predict(&[], None).unwrap();
        assert_eq!(p.label, "y");
        assert_eq!(p.scores, model.log_prior());
    }

    #[test]
    fn identical_classes_tie() {
        let corpus = Corpus::new(vec![doc("x", "a b"), doc("y", "a b")]).unwrap();
        let p = train_mvb(&corpus).unwrap().predict(&toks("a"), None).unwrap();
        assert!(p.tie);
        assert_eq!(p.class_index, 0);
        let q = posteriors(&p.scores);
        assert!((q.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_class_saturated_word_is_clamped() {
        let corpus = Corpus::new(vec![doc("x", "a")]).unwrap();
        let model = train_mvb(&corpus).unwrap();
        let s = model.log_scores(&[]);
        assert!(s[0].is_finite());
        assert_eq!(model.predict(&toks("a"), None).unwrap().label, "x");
    }

    #[test]
    fn log1m_exp_is_accurate() {
        for &p in &[1e-300, 1e-9, 0.3, 0.5, 0.9, 1.0 - 1e-12] {
            let x: f64 = f64::ln(p);
            assert!((log1m_exp(x) - (1.0 - p).ln()).abs() <= 1e-9 * (1.0 - p).ln().abs().max(1.0));
        }
    }
}
