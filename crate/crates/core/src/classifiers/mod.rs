//! Classification strategies behind one train/predict contract.
//!
//! Word-vector strategies (MSM, TF-MSM, SA) need an [`EmbeddingTable`] at
//! both training and prediction time; the bag-of-words strategies (MVB, MNB)
//! never do; LSA and SVM need one only with word-vector features.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use crate::container::{Decoder, Encoder, MODEL_MAGIC};
use crate::corpus::Corpus;
use crate::embedding::EmbeddingTable;
use crate::error::{Error, Result};
use crate::subspace::DimPolicy;

pub mod bayes;
pub mod features;
pub mod lsa;
pub mod msm;
pub mod sa;
pub mod svm;

pub use bayes::{train_mnb, train_mvb, BernoulliNb, MultinomialNb};
pub use features::{FeatureSpace, SparseVector};
pub use lsa::{train_lsa, LsaModel};
pub use msm::{train_msm, train_tfmsm, SubspaceModel, SubspaceParams, SubspaceWeighting};
pub use sa::{similarity_average, train_sa, SaModel};
pub use svm::{train_svm, SvmModel, SvmParams};

/// Default seed for every randomized step (fold shuffles, SVM sampling,
/// randomized SVD).
pub const DEFAULT_SEED: u64 = 20_180_101;

/// Scores within this relative distance of the maximum count as tied.
pub const TIE_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Strategy {
    Msm,
    TfMsm,
    Sa,
    Mvb,
    Mnb,
    Lsa,
    Svm,
}

impl Strategy {
    pub const ALL: [Strategy; 7] = [
        Strategy::Msm,
        Strategy::TfMsm,
        Strategy::Sa,
        Strategy::Mvb,
        Strategy::Mnb,
        Strategy::Lsa,
        Strategy::Svm,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Msm => "msm",
            Strategy::TfMsm => "tfmsm",
            Strategy::Sa => "sa",
            Strategy::Mvb => "mvb",
            Strategy::Mnb => "mnb",
            Strategy::Lsa => "lsa",
            Strategy::Svm => "svm",
        }
    }

    pub fn default_feature(self) -> FeatureKind {
        match self {
            Strategy::Msm | Strategy::TfMsm | Strategy::Sa => FeatureKind::W2v,
            Strategy::Mvb => FeatureKind::BinBow,
            Strategy::Mnb => FeatureKind::TfBow,
            Strategy::Lsa | Strategy::Svm => FeatureKind::TfBow,
        }
    }

    /// Whether the strategy can run on `feature`.
    pub fn supports(self, feature: FeatureKind) -> bool {
        match self {
            Strategy::Msm | Strategy::TfMsm | Strategy::Sa => feature == FeatureKind::W2v,
            Strategy::Mvb => feature == FeatureKind::BinBow,
            Strategy::Mnb => feature == FeatureKind::TfBow,
            Strategy::Lsa | Strategy::Svm => true,
        }
    }

    fn tag(self) -> u8 {
        match self {
            Strategy::Msm => 1,
            Strategy::TfMsm => 2,
            Strategy::Sa => 3,
            Strategy::Mvb => 4,
            Strategy::Mnb => 5,
            Strategy::Lsa => 6,
            Strategy::Svm => 7,
        }
    }
}

impl fmt::Display for Strategy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Strategy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Strategy::ALL
            .into_iter()
            .find(|st| st.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown strategy `{s}`")))
    }
}

/// Document representation fed to a strategy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum FeatureKind {
    BinBow,
    TfBow,
    TfidfBow,
    W2v,
}

impl FeatureKind {
    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::BinBow => "binbow",
            FeatureKind::TfBow => "tfbow",
            FeatureKind::TfidfBow => "tfidfbow",
            FeatureKind::W2v => "w2v",
        }
    }

    fn tag(self) -> u8 {
        match self {
            FeatureKind::BinBow => 1,
            FeatureKind::TfBow => 2,
            FeatureKind::TfidfBow => 3,
            FeatureKind::W2v => 4,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        Ok(match tag {
            1 => FeatureKind::BinBow,
            2 => FeatureKind::TfBow,
            3 => FeatureKind::TfidfBow,
            4 => FeatureKind::W2v,
            _ => return Err(Error::Container(format!("unknown feature tag {tag}"))),
        })
    }
}

impl fmt::Display for FeatureKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            FeatureKind::BinBow,
            FeatureKind::TfBow,
            FeatureKind::TfidfBow,
            FeatureKind::W2v,
        ]
        .into_iter()
        .find(|f| f.name() == s)
        .ok_or_else(|| Error::Config(format!("unknown feature `{s}`")))
    }
}

/// Outcome of classifying one document.
#[derive(Debug, Clone, PartialEq)]
pub struct Prediction {
    pub class_index: usize,
    pub label: String,
    /// One score per class, in class order: similarities for subspace and
    /// SA models, log joint probabilities for naive Bayes, best cosine for
    /// LSA, decision values for SVM.
    pub scores: Vec<f64>,
    /// More than one class attained the maximal score.
    pub tie: bool,
}

impl Prediction {
    pub(crate) fn from_scores(classes: &[String], scores: Vec<f64>) -> Self {
        let (class_index, tie) = argmax(&scores);
        Self {
            class_index,
            label: classes[class_index].clone(),
            scores,
            tie,
        }
    }

    pub fn score(&self) -> f64 {
        self.scores[self.class_index]
    }
}

/// Index of the maximal score (first wins among ties) and whether a tie
/// occurred.
pub fn argmax(scores: &[f64]) -> (usize, bool) {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let tol = TIE_TOLERANCE * max.abs().max(1.0);
    let mut winners = scores.iter().enumerate().filter(|(_, &s)| max - s <= tol);
    let first = winners.next().map(|(i, _)| i).unwrap_or(0);
    (first, winners.next().is_some())
}

/// Normalized class posteriors from log joint scores.
pub fn posteriors(log_scores: &[f64]) -> Vec<f64> {
    let max = log_scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = log_scores.iter().map(|s| (s - max).exp()).collect();
    let total: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / total).collect()
}

/// Common contract of every trained model.
pub trait Classifier {
    fn classes(&self) -> &[String];

    /// Classifies a token sequence. `embeddings` is required by word-vector
    /// models and ignored otherwise.
    fn predict(&self, tokens: &[String], embeddings: Option<&EmbeddingTable>) -> Result<Prediction>;
}

pub(crate) fn require_embeddings(embeddings: Option<&EmbeddingTable>) -> Result<&EmbeddingTable> {
    embeddings.ok_or_else(|| Error::Config("word-vector features require an embedding table".into()))
}

pub(crate) fn check_embedding_dimension(expected: usize, table: &EmbeddingTable) -> Result<()> {
    if expected != table.dimension() {
        return Err(Error::AmbientMismatch {
            left: expected,
            right: table.dimension(),
        });
    }
    Ok(())
}

/// Everything needed to train any strategy.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub strategy: Strategy,
    pub feature: FeatureKind,
    pub subspace: SubspaceParams,
    pub lsa_rank: usize,
    pub svm: SvmParams,
    pub normalize_vectors: bool,
    pub seed: u64,
}

impl TrainConfig {
    pub fn new(strategy: Strategy) -> Self {
        Self {
            strategy,
            feature: strategy.default_feature(),
            subspace: SubspaceParams::default(),
            lsa_rank: 50,
            svm: SvmParams::default(),
            normalize_vectors: true,
            seed: DEFAULT_SEED,
        }
    }
}

/// A trained model of any strategy.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Subspace(SubspaceModel),
    SimilarityAverage(SaModel),
    Bernoulli(BernoulliNb),
    Multinomial(MultinomialNb),
    Lsa(LsaModel),
    Svm(SvmModel),
}

/// Trains the configured strategy on `corpus`.
pub fn train(corpus: &Corpus, embeddings: Option<&EmbeddingTable>, config: &TrainConfig) -> Result<Model> {
    if !config.strategy.supports(config.feature) {
        return Err(Error::Config(format!(
            "strategy {} does not support feature {}",
            config.strategy, config.feature
        )));
    }
    let mut subspace = config.subspace.clone();
    subspace.normalize_vectors = config.normalize_vectors;
    Ok(match config.strategy {
        Strategy::Msm => Model::Subspace(train_msm(corpus, require_embeddings(embeddings)?, &subspace)?),
        Strategy::TfMsm => {
            Model::Subspace(train_tfmsm(corpus, require_embeddings(embeddings)?, &subspace)?)
        }
        Strategy::Sa => Model::SimilarityAverage(train_sa(corpus, require_embeddings(embeddings)?)?),
        Strategy::Mvb => Model::Bernoulli(train_mvb(corpus)?),
        Strategy::Mnb => Model::Multinomial(train_mnb(corpus)?),
        Strategy::Lsa => {
            let features = FeatureSpace::fit(config.feature, corpus, embeddings, config.normalize_vectors)?;
            Model::Lsa(train_lsa(corpus, features, embeddings, config.lsa_rank, config.seed)?)
        }
        Strategy::Svm => {
            let features = FeatureSpace::fit(config.feature, corpus, embeddings, config.normalize_vectors)?;
            let mut params = config.svm.clone();
            params.seed = config.seed;
            Model::Svm(train_svm(corpus, features, embeddings, &params)?)
        }
    })
}

impl Model {
    pub fn strategy(&self) -> Strategy {
        match self {
            Model::Subspace(m) => match m.weighting() {
                SubspaceWeighting::Uniform => Strategy::Msm,
                SubspaceWeighting::TermFrequency => Strategy::TfMsm,
            },
            Model::SimilarityAverage(_) => Strategy::Sa,
            Model::Bernoulli(_) => Strategy::Mvb,
            Model::Multinomial(_) => Strategy::Mnb,
            Model::Lsa(_) => Strategy::Lsa,
            Model::Svm(_) => Strategy::Svm,
        }
    }

    /// Embedding dimension the model was trained with, for word-vector models.
    pub fn embedding_dimension(&self) -> Option<usize> {
        match self {
            Model::Subspace(m) => Some(m.ambient_dim()),
            Model::SimilarityAverage(m) => Some(m.dimension()),
            Model::Lsa(m) => m.features().embedding_dimension(),
            Model::Svm(m) => m.features().embedding_dimension(),
            Model::Bernoulli(_) | Model::Multinomial(_) => None,
        }
    }

    /// Human-readable per-class description.
    pub fn summary(&self) -> Vec<String> {
        let classes = self.classes();
        match self {
            Model::Subspace(m) => m
                .class_subspaces()
                .iter()
                .zip(classes)
                .map(|(s, c)| format!("{c}\tdim={}\twords={}", s.dim(), s.source_word_count()))
                .collect(),
            Model::SimilarityAverage(m) => classes
                .iter()
                .zip(m.word_counts())
                .map(|(c, n)| format!("{c}\twords={n}"))
                .collect(),
            Model::Bernoulli(m) => classes
                .iter()
                .map(|c| format!("{c}\tvocabulary={}", m.vocabulary().len()))
                .collect(),
            Model::Multinomial(m) => classes
                .iter()
                .map(|c| format!("{c}\tvocabulary={}", m.vocabulary().len()))
                .collect(),
            Model::Lsa(m) => classes
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{c}\ttraining_samples={}\trank={}", m.class_sample_count(i), m.rank()))
                .collect(),
            Model::Svm(m) => classes
                .iter()
                .enumerate()
                .map(|(i, c)| format!("{c}\toffset={}", m.offsets()[i]))
                .collect(),
        }
    }

    /// Writes the model container.
    pub fn save<W: Write>(&self, out: W) -> Result<()> {
        let mut enc = Encoder::new(out);
        enc.header(MODEL_MAGIC)?;
        enc.u8(self.strategy().tag())?;
        match self {
            Model::Subspace(m) => m.encode(&mut enc),
            Model::SimilarityAverage(m) => m.encode(&mut enc),
            Model::Bernoulli(m) => m.encode(&mut enc),
            Model::Multinomial(m) => m.encode(&mut enc),
            Model::Lsa(m) => m.encode(&mut enc),
            Model::Svm(m) => m.encode(&mut enc),
        }
    }

    /// Reads a model container.
    pub fn load<R: Read>(input: R) -> Result<Model> {
        let mut dec = Decoder::new(input);
        dec.header(MODEL_MAGIC)?;
        let tag = dec.u8()?;
        let strategy = Strategy::ALL
            .into_iter()
            .find(|s| s.tag() == tag)
            .ok_or_else(|| Error::Container(format!("unknown strategy tag {tag}")))?;
        Ok(match strategy {
            Strategy::Msm | Strategy::TfMsm => Model::Subspace(SubspaceModel::decode(&mut dec)?),
            Strategy::Sa => Model::SimilarityAverage(SaModel::decode(&mut dec)?),
            Strategy::Mvb => Model::Bernoulli(BernoulliNb::decode(&mut dec)?),
            Strategy::Mnb => Model::Multinomial(MultinomialNb::decode(&mut dec)?),
            Strategy::Lsa => Model::Lsa(LsaModel::decode(&mut dec)?),
            Strategy::Svm => Model::Svm(SvmModel::decode(&mut dec)?),
        })
    }
}

impl Classifier for Model {
    fn classes(&self) -> &[String] {
        match self {
            Model::Subspace(m) => m.classes(),
            Model::SimilarityAverage(m) => m.classes(),
            Model::Bernoulli(m) => m.classes(),
            Model::Multinomial(m) => m.classes(),
            Model::Lsa(m) => m.classes(),
            Model::Svm(m) => m.classes(),
        }
    }

    fn predict(&self, tokens: &[String], embeddings: Option<&EmbeddingTable>) -> Result<Prediction> {
        match self {
            Model::Subspace(m) => m.predict(tokens, embeddings),
            Model::SimilarityAverage(m) => m.predict(tokens, embeddings),
            Model::Bernoulli(m) => m.predict(tokens, embeddings),
            Model::Multinomial(m) => m.predict(tokens, embeddings),
            Model::Lsa(m) => m.predict(tokens, embeddings),
            Model::Svm(m) => m.predict(tokens, embeddings),
        }
    }
}

pub(crate) fn encode_policy<W: Write>(enc: &mut Encoder<W>, policy: DimPolicy) -> Result<()> {
    match policy {
        DimPolicy::Exact(m) => {
            enc.u8(0)?;
            enc.usize(m)
        }
        DimPolicy::AtMost(m) => {
            enc.u8(1)?;
            enc.usize(m)
        }
    }
}

pub(crate) fn decode_policy<R: Read>(dec: &mut Decoder<R>) -> Result<DimPolicy> {
    match dec.u8()? {
        0 => Ok(DimPolicy::Exact(dec.usize()?)),
        1 => Ok(DimPolicy::AtMost(dec.usize()?)),
        t => Err(Error::Container(format!("unknown dimension policy tag {t}"))),
    }
}

pub(crate) fn encode_feature<W: Write>(enc: &mut Encoder<W>, kind: FeatureKind) -> Result<()> {
    enc.u8(kind.tag())
}

pub(crate) fn decode_feature<R: Read>(dec: &mut Decoder<R>) -> Result<FeatureKind> {
    FeatureKind::from_tag(dec.u8()?)
}
