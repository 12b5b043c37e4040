//! Pretrained word-embedding tables.
//!
//! Two on-disk layouts are understood:
//!
//! * binary: an ASCII header `"<vocab_count> <dimension>\n"`, then one record
//!   per word consisting of the word bytes, a single ASCII space, and
//!   `dimension` little-endian `f32` values, optionally followed by `\n`;
//! * text: an optional `"<count> <dim>"` header line, then one line per word
//!   holding the word and `dim` space-separated decimal reals.
//!
//! Vectors are stored as parsed (widened to `f64`); no normalization happens
//! here.

use std::collections::HashMap;
use std::io::{self, BufRead, Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Immutable-after-load map from words to dense vectors of a fixed dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dimension: usize,
    words: Vec<String>,
    index: HashMap<String, usize>,
    // Row-major: word i occupies data[i * dimension..(i + 1) * dimension].
    data: Vec<f64>,
}

/// Result of resolving a word multiset against a table.
#[derive(Debug, Clone, PartialEq)]
pub struct Lookup {
    /// One column per distinct in-vocabulary word, first-occurrence order.
    pub vectors: DMatrix<f64>,
    /// The words behind each column.
    pub words: Vec<String>,
    /// Occurrence count of each column's word in the input.
    pub counts: Vec<usize>,
    /// Distinct out-of-vocabulary words, first-occurrence order.
    pub oov: Vec<String>,
    /// Total out-of-vocabulary occurrences (with multiplicity).
    pub oov_occurrences: usize,
}

impl Lookup {
    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }
}

impl EmbeddingTable {
    /// Creates an empty table.
    ///
    /// The dimension must be positive.
    pub fn new(dimension: usize) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Format("embedding dimension must be positive".into()));
        }
        Ok(Self {
            dimension,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        })
    }

    pub fn with_capacity(dimension: usize, capacity: usize) -> Result<Self> {
        let mut table = Self::new(dimension)?;
        table.words.reserve(capacity);
        table.index.reserve(capacity);
        table.data.reserve(capacity.saturating_mul(dimension));
        Ok(table)
    }

    /// Adds a word. Fails on an empty word, a duplicate, a wrong-length
    /// vector, or a non-finite component.
    pub fn insert(&mut self, word: impl Into<String>, vector: &[f64]) -> Result<()> {
        let word = word.into();
        if word.is_empty() {
            return Err(Error::Format("empty word".into()));
        }
        if vector.len() != self.dimension {
            return Err(Error::Format(format!(
                "vector for `{word}` has {} components, expected {}",
                vector.len(),
                self.dimension
            )));
        }
        if let Some(pos) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::Format(format!(
                "vector for `{word}` has a non-finite component at position {pos}"
            )));
        }
        if self.index.contains_key(&word) {
            return Err(Error::DuplicateWord(word));
        }
        self.index.insert(word.clone(), self.words.len());
        self.words.push(word);
        self.data.extend_from_slice(vector);
        Ok(())
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn contains(&self, word: &str) -> bool {
        self.index.contains_key(word)
    }

    pub fn get(&self, word: &str) -> Option<&[f64]> {
        self.index.get(word).map(|&i| self.row(i))
    }

    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Iterates `(word, vector)` in storage order.
    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> + '_ {
        self.words
            .iter()
            .enumerate()
            .map(move |(i, w)| (w.as_str(), self.row(i)))
    }

    fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dimension..(i + 1) * self.dimension]
    }

    /// Parses the binary layout, keeping every record.
    pub fn load_binary<R: BufRead>(reader: R) -> Result<Self> {
        Self::load_binary_filtered(reader, |_| true)
    }

    /// Parses the binary layout, storing only words accepted by `keep`.
    ///
    /// Filtering while streaming keeps peak memory proportional to the
    /// retained vocabulary. Duplicate detection applies to retained words.
    pub fn load_binary_filtered<R, F>(reader: R, mut keep: F) -> Result<Self>
    where
        R: BufRead,
        F: FnMut(&str) -> bool,
    {
        let mut reader = CountingReader::new(reader);

        let mut header = Vec::new();
        reader.read_until(b'\n', &mut header)?;
        if header.last() != Some(&b'\n') {
            return Err(Error::Format("missing header line".into()));
        }
        let header = std::str::from_utf8(&header[..header.len() - 1])
            .map_err(|_| Error::Format("header is not ASCII".into()))?;
        let (count, dimension) = parse_header(header)
            .ok_or_else(|| Error::Format(format!("malformed header `{}`", header.trim())))?;

        let mut table = Self::with_capacity(dimension, count.min(1 << 20))?;
        let mut raw = vec![0f32; dimension];
        let mut widened = vec![0f64; dimension];
        let mut word = Vec::new();

        for _ in 0..count {
            let offset = skip_newlines(&mut reader)?;
            read_binary_word(&mut reader, &mut word).map_err(|e| match e {
                WordError::Eof => Error::Truncated { offset },
                WordError::Empty => {
                    Error::Format(format!("empty word in record at byte offset {offset}"))
                }
                WordError::Io(e) => Error::Io(e),
            })?;
            match reader.read_f32_into::<LittleEndian>(&mut raw) {
                Ok(()) => {}
                Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => {
                    return Err(Error::Truncated { offset });
                }
                Err(e) => return Err(e.into()),
            }
            let word = std::str::from_utf8(&word).map_err(|_| {
                Error::Format(format!("word at byte offset {offset} is not valid UTF-8"))
            })?;
            if !keep(word) {
                continue;
            }
            for (dst, src) in widened.iter_mut().zip(&raw) {
                *dst = f64::from(*src);
            }
            table.insert(word, &widened)?;
        }
        Ok(table)
    }

    /// Parses the text layout, keeping every line.
    pub fn load_text<R: BufRead>(reader: R) -> Result<Self> {
        Self::load_text_filtered(reader, |_| true)
    }

    /// Parses the text layout, storing only words accepted by `keep`.
    pub fn load_text_filtered<R, F>(reader: R, mut keep: F) -> Result<Self>
    where
        R: BufRead,
        F: FnMut(&str) -> bool,
    {
        let mut table: Option<EmbeddingTable> = None;
        let mut declared_count = None;
        let mut records = 0usize;
        let mut values = Vec::new();

        for (i, line) in reader.lines().enumerate() {
            let line_no = i + 1;
            let line = line?;
            let line = line.trim_end_matches(['\r', '\n']);
            let mut fields = line.split(' ').filter(|f| !f.is_empty());
            let Some(word) = fields.next() else {
                continue;
            };

            if line_no == 1 {
                let rest: Vec<&str> = fields.clone().collect();
                if rest.len() == 1 {
                    if let Some((count, dim)) = parse_header(line) {
                        table = Some(Self::new(dim).map_err(|e| Error::FormatAtLine {
                            line: line_no,
                            message: e.to_string(),
                        })?);
                        declared_count = Some(count);
                        continue;
                    }
                }
            }

            values.clear();
            for field in fields {
                let v: f64 = field.parse().map_err(|_| Error::FormatAtLine {
                    line: line_no,
                    message: format!("cannot parse `{field}` as a real number"),
                })?;
                values.push(v);
            }
            if table.is_none() {
                table = Some(Self::new(values.len()).map_err(|_| Error::FormatAtLine {
                    line: line_no,
                    message: "no vector components".into(),
                })?);
            }
            let table = table.as_mut().expect("initialized above");
            if values.len() != table.dimension {
                return Err(Error::FormatAtLine {
                    line: line_no,
                    message: format!(
                        "expected {} components, found {}",
                        table.dimension,
                        values.len()
                    ),
                });
            }
            records += 1;
            if !keep(word) {
                continue;
            }
            table.insert(word, &values).map_err(|e| match e {
                Error::DuplicateWord(w) => Error::DuplicateWord(w),
                other => Error::FormatAtLine {
                    line: line_no,
                    message: other.to_string(),
                },
            })?;
        }

        if let Some(count) = declared_count {
            if count != records {
                return Err(Error::Format(format!(
                    "header declares {count} entries but {records} were found"
                )));
            }
        }
        table.ok_or_else(|| Error::Format("no embedding records".into()))
    }

    /// Writes the text layout with a header. Values use the shortest
    /// representation that parses back to the identical `f64`.
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "{} {}", self.len(), self.dimension)?;
        for (word, vector) in self.iter() {
            write!(out, "{word}")?;
            for v in vector {
                write!(out, " {v}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Writes the binary layout. Components are narrowed to `f32`.
    pub fn write_binary<W: Write>(&self, mut out: W) -> Result<()> {
        write!(out, "{} {}\n", self.len(), self.dimension)?;
        for (word, vector) in self.iter() {
            out.write_all(word.as_bytes())?;
            out.write_all(b" ")?;
            for &v in vector {
                out.write_f32::<LittleEndian>(v as f32)?;
            }
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    /// Keeps only words made of ASCII letters, digits, and `_ - ' .`.
    pub fn filter_roman(&self) -> Self {
        let mut out = Self {
            dimension: self.dimension,
            words: Vec::new(),
            index: HashMap::new(),
            data: Vec::new(),
        };
        for (word, vector) in self.iter() {
            if is_roman_word(word) {
                out.index.insert(word.to_owned(), out.words.len());
                out.words.push(word.to_owned());
                out.data.extend_from_slice(vector);
            }
        }
        out
    }

    /// Resolves a word multiset: one column per distinct known word (first
    /// occurrence order) with its count, plus the unknown words.
    pub fn lookup_all<I, S>(&self, words: I) -> Lookup
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut column_of: HashMap<&str, usize> = HashMap::new();
        let mut rows: Vec<usize> = Vec::new();
        let mut counts: Vec<usize> = Vec::new();
        let mut oov_seen: HashMap<String, ()> = HashMap::new();
        let mut oov = Vec::new();
        let mut oov_occurrences = 0;

        for word in words {
            let word = word.as_ref();
            match self.index.get_key_value(word) {
                Some((key, &row)) => {
                    let col = *column_of.entry(key.as_str()).or_insert_with(|| {
                        rows.push(row);
                        counts.push(0);
                        rows.len() - 1
                    });
                    counts[col] += 1;
                }
                None => {
                    oov_occurrences += 1;
                    if oov_seen.insert(word.to_owned(), ()).is_none() {
                        oov.push(word.to_owned());
                    }
                }
            }
        }

        let vectors = DMatrix::from_fn(self.dimension, rows.len(), |r, c| {
            self.data[rows[c] * self.dimension + r]
        });
        Lookup {
            vectors,
            words: rows.iter().map(|&r| self.words[r].clone()).collect(),
            counts,
            oov,
            oov_occurrences,
        }
    }
}

/// True when `word` consists solely of ASCII letters, digits, `_`, `-`, `'`
/// and `.`.
pub fn is_roman_word(word: &str) -> bool {
    !word.is_empty()
        && word
            .bytes()
            .all(|b| b.is_ascii_alphanumeric() || matches!(b, b'_' | b'-' | b'\'' | b'.'))
}

fn parse_header(line: &str) -> Option<(usize, usize)> {
    let mut parts = line.split_ascii_whitespace();
    let count = parts.next()?.parse().ok()?;
    let dim = parts.next()?.parse().ok()?;
    if parts.next().is_some() {
        return None;
    }
    Some((count, dim))
}

enum WordError {
    Eof,
    Empty,
    Io(io::Error),
}

/// Consumes the newline(s) that may terminate the previous record and
/// returns the offset where the next record starts.
fn skip_newlines<R: BufRead>(reader: &mut CountingReader<R>) -> io::Result<u64> {
    loop {
        let buf = reader.fill_buf()?;
        match buf.first() {
            Some(b'\n') => reader.consume(1),
            _ => return Ok(reader.position()),
        }
    }
}

fn read_binary_word<R: BufRead>(
    reader: &mut CountingReader<R>,
    word: &mut Vec<u8>,
) -> std::result::Result<(), WordError> {
    word.clear();
    reader.read_until(b' ', word).map_err(WordError::Io)?;
    if word.pop() != Some(b' ') {
        return Err(WordError::Eof);
    }
    if word.is_empty() {
        return Err(WordError::Empty);
    }
    Ok(())
}

/// Tracks the absolute byte offset of a buffered reader.
struct CountingReader<R> {
    inner: R,
    position: u64,
}

impl<R> CountingReader<R> {
    fn new(inner: R) -> Self {
        Self { inner, position: 0 }
    }

    fn position(&self) -> u64 {
        self.position
    }
}

impl<R: Read> Read for CountingReader<R> {
    fn read(&mut self, buf: &mut [u8]) -> io::Result<usize> {
        let n = self.inner.read(buf)?;
        self.position += n as u64;
        Ok(n)
    }
}

impl<R: BufRead> BufRead for CountingReader<R> {
    fn fill_buf(&mut self) -> io::Result<&[u8]> {
        self.inner.fill_buf()
    }

    fn consume(&mut self, amt: usize) {
        self.position += amt as u64;
        self.inner.consume(amt);
    }
}
