//! Versioned binary containers for subspaces and trained models.
//!
//! All integers are little-endian `u64` unless noted, reals are
//! little-endian IEEE-754 `f64`, strings are a `u64` byte length followed by
//! UTF-8 bytes, and matrices are `rows`, `cols`, then `rows × cols` values in
//! row-major order.
//!
//! Subspace file:
//!
//! ```text
//! magic "WSUBSPC\0" | version u32 | p | m | basis (p × m, row-major)
//!                   | spectrum (m reals) | source_word_count
//! ```
//!
//! Model file:
//!
//! ```text
//! magic "WSMODEL\0" | version u32 | strategy tag u8 | strategy payload
//! ```
//!
//! Subspace models embed subspaces using the same `p | m | basis | spectrum |
//! source_word_count` layout as the standalone file body.

use std::io::{Read, Write};

use byteorder::{LittleEndian, ReadBytesExt, WriteBytesExt};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::subspace::Subspace;

pub const SUBSPACE_MAGIC: &[u8; 8] = b"WSUBSPC\0";
pub const MODEL_MAGIC: &[u8; 8] = b"WSMODEL\0";
pub const FORMAT_VERSION: u32 = 1;

// Guards allocations driven by corrupt length fields.
const MAX_ELEMENTS: u64 = 1 << 32;

pub(crate) struct Encoder<W> {
    out: W,
}

impl<W: Write> Encoder<W> {
    pub(crate) fn new(out: W) -> Self {
        Self { out }
    }

    pub(crate) fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        self.out.write_all(magic)?;
        self.out.write_u32::<LittleEndian>(FORMAT_VERSION)?;
        Ok(())
    }

    pub(crate) fn u8(&mut self, v: u8) -> Result<()> {
        Ok(self.out.write_u8(v)?)
    }

    pub(crate) fn bool(&mut self, v: bool) -> Result<()> {
        self.u8(u8::from(v))
    }

    pub(crate) fn usize(&mut self, v: usize) -> Result<()> {
        Ok(self.out.write_u64::<LittleEndian>(v as u64)?)
    }

    pub(crate) fn f64(&mut self, v: f64) -> Result<()> {
        Ok(self.out.write_f64::<LittleEndian>(v)?)
    }

    pub(crate) fn reals(&mut self, values: &[f64]) -> Result<()> {
        self.usize(values.len())?;
        for &v in values {
            self.f64(v)?;
        }
        Ok(())
    }

    pub(crate) fn counts(&mut self, values: &[usize]) -> Result<()> {
        self.usize(values.len())?;
        for &v in values {
            self.usize(v)?;
        }
        Ok(())
    }

    pub(crate) fn str(&mut self, s: &str) -> Result<()> {
        self.usize(s.len())?;
        Ok(self.out.write_all(s.as_bytes())?)
    }

    pub(crate) fn strings(&mut self, items: &[String]) -> Result<()> {
        self.usize(items.len())?;
        for s in items {
            self.str(s)?;
        }
        Ok(())
    }

    pub(crate) fn matrix(&mut self, m: &DMatrix<f64>) -> Result<()> {
        self.usize(m.nrows())?;
        self.usize(m.ncols())?;
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                self.f64(m[(r, c)])?;
            }
        }
        Ok(())
    }

    pub(crate) fn subspace(&mut self, s: &Subspace) -> Result<()> {
        self.usize(s.ambient_dim())?;
        self.usize(s.dim())?;
        let basis = s.basis();
        for r in 0..basis.nrows() {
            for c in 0..basis.ncols() {
                self.f64(basis[(r, c)])?;
            }
        }
        for &v in s.spectrum() {
            self.f64(v)?;
        }
        self.usize(s.source_word_count())
    }
}

pub(crate) struct Decoder<R> {
    input: R,
}

impl<R: Read> Decoder<R> {
    pub(crate) fn new(input: R) -> Self {
        Self { input }
    }

    pub(crate) fn header(&mut self, magic: &[u8; 8]) -> Result<()> {
        let mut found = [0u8; 8];
        self.input
            .read_exact(&mut found)
            .map_err(|_| Error::Container("file too short for header".into()))?;
        if &found != magic {
            return Err(Error::Container("unrecognized file signature".into()));
        }
        let version = self.input.read_u32::<LittleEndian>().map_err(eof)?;
        if version != FORMAT_VERSION {
            return Err(Error::Container(format!(
                "unsupported format version {version} (expected {FORMAT_VERSION})"
            )));
        }
        Ok(())
    }

    pub(crate) fn u8(&mut self) -> Result<u8> {
        self.input.read_u8().map_err(eof)
    }

    pub(crate) fn bool(&mut self) -> Result<bool> {
        match self.u8()? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(Error::Container(format!("invalid boolean byte {v}"))),
        }
    }

    pub(crate) fn usize(&mut self) -> Result<usize> {
        let v = self.input.read_u64::<LittleEndian>().map_err(eof)?;
        usize::try_from(v).map_err(|_| Error::Container(format!("value {v} does not fit")))
    }

    fn length(&mut self) -> Result<usize> {
        let n = self.usize()?;
        if n as u64 > MAX_ELEMENTS {
            return Err(Error::Container(format!("implausible length {n}")));
        }
        Ok(n)
    }

    pub(crate) fn f64(&mut self) -> Result<f64> {
        self.input.read_f64::<LittleEndian>().map_err(eof)
    }

    pub(crate) fn reals(&mut self) -> Result<Vec<f64>> {
        let n = self.length()?;
        (0..n).map(|_| self.f64()).collect()
    }

    pub(crate) fn counts(&mut self) -> Result<Vec<usize>> {
        let n = self.length()?;
        (0..n).map(|_| self.usize()).collect()
    }

    pub(crate) fn string(&mut self) -> Result<String> {
        let n = self.length()?;
        let mut buf = vec![0u8; n];
        self.input.read_exact(&mut buf).map_err(eof)?;
        String::from_utf8(buf).map_err(|_| Error::Container("string is not UTF-8".into()))
    }

    pub(crate) fn strings(&mut self) -> Result<Vec<String>> {
        let n = self.length()?;
        (0..n).map(|_| self.string()).collect()
    }

    pub(crate) fn matrix(&mut self) -> Result<DMatrix<f64>> {
        let rows = self.length()?;
        let cols = self.length()?;
        if (rows as u64) * (cols as u64) > MAX_ELEMENTS {
            return Err(Error::Container(format!("implausible matrix {rows}x{cols}")));
        }
        let mut values = Vec::with_capacity(rows * cols);
        for _ in 0..rows * cols {
            values.push(self.f64()?);
        }
        Ok(DMatrix::from_row_slice(rows, cols, &values))
    }

    pub(crate) fn subspace(&mut self) -> Result<Subspace> {
        let p = self.length()?;
        let m = self.length()?;
        if (p as u64) * (m as u64) > MAX_ELEMENTS {
            return Err(Error::Container(format!("implausible basis {p}x{m}")));
        }
        let mut values = Vec::with_capacity(p * m);
        for _ in 0..p * m {
            values.push(self.f64()?);
        }
        let basis = DMatrix::from_row_slice(p, m, &values);
        let spectrum = (0..m).map(|_| self.f64()).collect::<Result<Vec<_>>>()?;
        let count = self.usize()?;
        Subspace::from_parts(basis, spectrum, count)
            .map_err(|e| Error::Container(format!("stored subspace is invalid: {e}")))
    }
}

fn eof(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Container("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

/// Writes a standalone subspace file.
pub fn write_subspace<W: Write>(out: W, subspace: &Subspace) -> Result<()> {
    let mut enc = Encoder::new(out);
    enc.header(SUBSPACE_MAGIC)?;
    enc.subspace(subspace)
}

/// Reads a standalone subspace file.
pub fn read_subspace<R: Read>(input: R) -> Result<Subspace> {
    let mut dec = Decoder::new(input);
    dec.header(SUBSPACE_MAGIC)?;
    dec.subspace()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::subspace::word_subspace;

    #[test]
    fn subspace_file_layout() {
        let x = DMatrix::from_column_slice(3, 2, &[1.0, 0.0, 0.0, 0.0, 2.0, 0.0]);
        let s = word_subspace(&x, 2).unwrap();
        let mut bytes = Vec::new();
        write_subspace(&mut bytes, &s).unwrap();
        assert_eq!(&bytes[..8], SUBSPACE_MAGIC);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 1);
        assert_eq!(u64::from_le_bytes(bytes[12..20].try_into().unwrap()), 3);
        assert_eq!(u64::from_le_bytes(bytes[20..28].try_into().unwrap()), 2);
        // header + p + m + 6 basis + 2 spectrum + count
        assert_eq!(bytes.len(), 12 + 16 + 8 * 6 + 8 * 2 + 8);
        // Row-major: the first row comes first.
        let first = f64::from_le_bytes(bytes[28..36].try_into().unwrap());
        assert_eq!(first, s.basis()[(0, 0)]);
        let second = f64::from_le_bytes(bytes[36..44].try_into().unwrap());
        assert_eq!(second, s.basis()[(0, 1)]);

        let back = read_subspace(&bytes[..]).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn rejects_bad_headers() {
        assert!(read_subspace(&b"WSUBSP"[..]).is_err());
        let mut bytes = SUBSPACE_MAGIC.to_vec();
        bytes.extend_from_slice(&7u32.to_le_bytes());
        assert!(matches!(read_subspace(&bytes[..]), Err(Error::Container(_))));
        let mut bytes = MODEL_MAGIC.to_vec();
        bytes.extend_from_slice(&1u32.to_le_bytes());
        assert!(read_subspace(&bytes[..]).is_err());
    }
}
