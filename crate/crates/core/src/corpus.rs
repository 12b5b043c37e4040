//! Labeled document collections and bag-of-words featurization.
//!
//! Corpus files are UTF-8, one document per line: the first
//! whitespace-delimited field is the class label and the remainder is the
//! pre-tokenized text. Blank lines are skipped.

use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// A labeled token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Document {
    label: String,
    tokens: Vec<String>,
}

impl Document {
    pub fn new<L, I, S>(label: L, tokens: I) -> Result<Self>
    where
        L: Into<String>,
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let label = label.into();
        if label.is_empty() || label.chars().any(char::is_whitespace) {
            return Err(Error::Format(format!("invalid class label `{label}`")));
        }
        let tokens: Vec<String> = tokens.into_iter().map(Into::into).collect();
        if let Some(bad) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::Format(format!("invalid token `{bad}`")));
        }
        Ok(Self { label, tokens })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Occurrence count of `word` in `doc`.
pub fn tf(word: &str, doc: &Document) -> usize {
    doc.tokens.iter().filter(|t| *t == word).count()
}

/// Documents with their ordered class list and per-class index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    documents: Vec<Document>,
    classes: Vec<String>,
    by_class: Vec<Vec<usize>>,
}

/// A parsed corpus and the non-fatal issues found while reading it.
#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

/// Distinct words of a class with their total occurrence counts.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct WordMultiset {
    pub words: Vec<String>,
    pub counts: Vec<usize>,
}

impl WordMultiset {
    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl Corpus {
    /// Builds a corpus; classes are ordered by first appearance.
    pub fn new(documents: Vec<Document>) -> Result<Self> {
        if documents.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut classes: Vec<String> = Vec::new();
        let mut class_of: HashMap<String, usize> = HashMap::new();
        let mut by_class: Vec<Vec<usize>> = Vec::new();
        for (i, doc) in documents.iter().enumerate() {
            let c = *class_of.entry(doc.label.clone()).or_insert_with(|| {
                classes.push(doc.label.clone());
                by_class.push(Vec::new());
                classes.len() - 1
            });
            by_class[c].push(i);
        }
        Ok(Self {
            documents,
            classes,
            by_class,
        })
    }

    /// Reads a corpus file. An empty stream is an error.
    pub fn parse<R: BufRead>(reader: R) -> Result<ParsedCorpus> {
        let (documents, warnings) = parse_documents(reader)?;
        Ok(ParsedCorpus {
            corpus: Self::new(documents)?,
            warnings,
        })
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn classes(&self) -> &[String] {
        &self.classes
    }

    pub fn class_index(&self, label: &str) -> Option<usize> {
        self.classes.iter().position(|c| c == label)
    }

    /// Indices of the documents in class `class`.
    pub fn class_documents(&self, class: usize) -> &[usize] {
        &self.by_class[class]
    }

    pub fn total_tokens(&self) -> usize {
        self.documents.iter().map(Document::len).sum()
    }

    /// The corpus restricted to `indices` (in the given order).
    pub fn subset(&self, indices: &[usize]) -> Result<Corpus> {
        Corpus::new(indices.iter().map(|&i| self.documents[i].clone()).collect())
    }

    /// All tokens of the class's documents, in document order.
    pub fn class_tokens(&self, class: usize) -> impl Iterator<Item = &str> + '_ {
        self.by_class[class]
            .iter()
            .flat_map(move |&d| self.documents[d].tokens.iter().map(String::as_str))
    }

    /// The class's word multiset `W_c`: distinct words in first-occurrence
    /// order with total counts.
    pub fn class_word_multiset(&self, label: &str) -> Result<WordMultiset> {
        let class = self
            .class_index(label)
            .ok_or_else(|| Error::UnknownClass(label.to_owned()))?;
        let mut position: HashMap<&str, usize> = HashMap::new();
        let mut set = WordMultiset::default();
        for token in self.class_tokens(class) {
            let i = *position.entry(token).or_insert_with(|| {
                set.words.push(token.to_owned());
                set.counts.push(0);
                set.words.len() - 1
            });
            set.counts[i] += 1;
        }
        Ok(set)
    }
}

/// Reads documents line by line, allowing an empty result.
///
/// A line whose label is present but text is absent yields an empty document
/// and a warning; a non-blank line that starts with whitespace has no label
/// and is rejected.
pub fn parse_documents<R: BufRead>(reader: R) -> Result<(Vec<Document>, Vec<String>)> {
    let mut documents = Vec::new();
    let mut warnings = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        let line = line.trim_end_matches(['\r', '\n']);
        if line.trim().is_empty() {
            continue;
        }
        if line.starts_with(char::is_whitespace) {
            return Err(Error::FormatAtLine {
                line: line_no,
                message: "missing class label".into(),
            });
        }
        let mut fields = line.split_whitespace();
        let label = fields.next().expect("non-blank line has a field");
        let tokens: Vec<&str> = fields.collect();
        if tokens.is_empty() {
            warnings.push(format!("line {line_no}: class `{label}` document has no tokens"));
        }
        let doc = Document::new(label, tokens).map_err(|e| Error::FormatAtLine {
            line: line_no,
            message: e.to_string(),
        })?;
        documents.push(doc);
    }
    Ok((documents, warnings))
}

/// Ordered distinct terms with a reverse index.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Vocabulary {
    terms: Vec<String>,
    index: HashMap<String, usize>,
}

impl Vocabulary {
    /// All terms of the corpus in first-appearance order.
    pub fn from_corpus(corpus: &Corpus) -> Self {
        Self::from_terms(
            corpus
                .documents
                .iter()
                .flat_map(|d| d.tokens.iter().cloned()),
        )
    }

    /// Deduplicates `terms`, keeping first appearances.
    pub fn from_terms<I: IntoIterator<Item = String>>(terms: I) -> Self {
        let mut vocab = Self::default();
        for term in terms {
            if !vocab.index.contains_key(&term) {
                vocab.index.insert(term.clone(), vocab.terms.len());
                vocab.terms.push(term);
            }
        }
        vocab
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn get(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }
}

/// Document frequencies `|D^w|` over a reference corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocumentFrequencies {
    documents: usize,
    counts: HashMap<String, usize>,
}

impl DocumentFrequencies {
    pub fn from_corpus(corpus: &Corpus) -> Self {
        let mut counts: HashMap<String, usize> = HashMap::new();
        for doc in &corpus.documents {
            let mut seen: Vec<&str> = doc.tokens.iter().map(String::as_str).collect();
            seen.sort_unstable();
            seen.dedup();
            for term in seen {
                *counts.entry(term.to_owned()).or_default() += 1;
            }
        }
        Self {
            documents: corpus.len(),
            counts,
        }
    }

    pub(crate) fn from_parts(documents: usize, counts: HashMap<String, usize>) -> Self {
        Self { documents, counts }
    }

    pub fn documents(&self) -> usize {
        self.documents
    }

    pub fn frequency(&self, term: &str) -> usize {
        self.counts.get(term).copied().unwrap_or(0)
    }

    /// `|D| / |D^w|`; errors when the term occurs in no document.
    pub fn idf(&self, term: &str) -> Result<f64> {
        match self.frequency(term) {
            0 => Err(Error::UndefinedIdf(term.to_owned())),
            df => Ok(self.documents as f64 / df as f64),
        }
    }
}

/// `|D| / |D^w|` for `word` over `corpus`.
pub fn idf(word: &str, corpus: &Corpus) -> Result<f64> {
    let df = corpus
        .documents
        .iter()
        .filter(|d| d.tokens.iter().any(|t| t == word))
        .count();
    if df == 0 {
        return Err(Error::UndefinedIdf(word.to_owned()));
    }
    Ok(corpus.len() as f64 / df as f64)
}

/// Term-weighting scheme of a bag-of-words vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Weighting {
    Binary,
    Tf,
    /// `tf × log10(|D| / |D^w|)`.
    TfIdf,
}

/// Sparse bag-of-words vector; entries are sorted by term index and never
/// zero.
#[derive(Debug, Clone, PartialEq)]
pub struct BowVector {
    scheme: Weighting,
    entries: Vec<(usize, f64)>,
}

impl BowVector {
    pub fn scheme(&self) -> Weighting {
        self.scheme
    }

    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries
    }

    pub fn get(&self, term: usize) -> f64 {
        self.entries
            .binary_search_by_key(&term, |&(i, _)| i)
            .map(|p| self.entries[p].1)
            .unwrap_or(0.0)
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }
}

/// Featurizes `doc` over `vocab`. Terms outside the vocabulary are dropped.
/// TF-IDF needs document frequencies, normally from the training split.
pub fn bow(
    doc: &Document,
    vocab: &Vocabulary,
    scheme: Weighting,
    frequencies: Option<&DocumentFrequencies>,
) -> Result<BowVector> {
    bow_tokens(&doc.tokens, vocab, scheme, frequencies)
}

/// [`bow`] over a bare token sequence.
pub fn bow_tokens<S: AsRef<str>>(
    tokens: &[S],
    vocab: &Vocabulary,
    scheme: Weighting,
    frequencies: Option<&DocumentFrequencies>,
) -> Result<BowVector> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for token in tokens {
        let token = token.as_ref();
        if let Some(i) = vocab.get(token) {
            *counts.entry(i).or_default() += 1;
        }
    }
    let mut entries = Vec::with_capacity(counts.len());
    for (term, count) in counts {
        let weight = match scheme {
            Weighting::Binary => 1.0,
            Weighting::Tf => count as f64,
            Weighting::TfIdf => {
                let df = frequencies.ok_or_else(|| {
                    Error::Config("TF-IDF weighting requires document frequencies".into())
                })?;
                count as f64 * df.idf(&vocab.terms[term])?.log10()
            }
        };
        if weight != 0.0 {
            entries.push((term, weight));
        }
    }
    entries.sort_unstable_by_key(|&(i, _)| i);
    Ok(BowVector { scheme, entries })
}
