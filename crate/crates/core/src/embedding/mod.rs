//! Per-clip speaker embeddings and their preprocessing.

mod preprocess;

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use ndarray::Array2;

use crate::error::{Error, Result};

pub use preprocess::{fit_preprocessor, transform, Preprocessor, DEFAULT_TARGET_DIM};

pub const MAGIC: &[u8; 7] = b"SPFEMB1";

/// Dense row-per-clip embedding matrix with a clip-id index.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct EmbeddingStore {
    dim: usize,
    ids: Vec<String>,
    data: Vec<f32>,
    index: HashMap<String, usize>,
}

impl EmbeddingStore {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            ..Self::default()
        }
    }

    pub fn push(&mut self, clip_id: &str, vector: &[f32]) -> Result<usize> {
        if vector.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                found: vector.len(),
            });
        }
        if let Some(col) = vector.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: self.ids.len(),
                col,
            });
        }
        if self.index.contains_key(clip_id) {
            return Err(Error::Integrity(format!(
                "duplicate embedding for clip {clip_id}"
            )));
        }
        let row = self.ids.len();
        self.index.insert(clip_id.to_string(), row);
        self.ids.push(clip_id.to_string());
        self.data.extend_from_slice(vector);
        Ok(row)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn ids(&self) -> &[String] {
        &self.ids
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn index_of(&self, clip_id: &str) -> Option<usize> {
        self.index.get(clip_id).copied()
    }

    pub fn get(&self, clip_id: &str) -> Option<&[f32]> {
        self.index_of(clip_id).map(|i| self.row(i))
    }

    /// Gathers the given rows into an `f64` matrix.
    pub fn matrix(&self, rows: &[usize]) -> Array2<f64> {
        let mut out = Array2::zeros((rows.len(), self.dim));
        for (r, &i) in rows.iter().enumerate() {
            for (o, v) in out.row_mut(r).iter_mut().zip(self.row(i)) {
                *o = f64::from(*v);
            }
        }
        out
    }

    /// Reads either format, dispatching on the binary magic.
    pub fn load(path: &Path) -> Result<Self> {
        let mut head = [0u8; 7];
        let n = File::open(path)?.read(&mut head)?;
        if n == MAGIC.len() && &head == MAGIC {
            Self::load_binary(path)
        } else {
            Self::load_csv(path)
        }
    }

    pub fn save_binary(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(MAGIC)?;
        w.write_all(&u32::try_from(self.dim).expect("dim fits u32").to_le_bytes())?;
        w.write_all(
            &u32::try_from(self.len())
                .expect("count fits u32")
                .to_le_bytes(),
        )?;
        for (i, id) in self.ids.iter().enumerate() {
            let len = u16::try_from(id.len())
                .map_err(|_| Error::InvalidArgument(format!("clip id too long: {id}")))?;
            w.write_all(&len.to_le_bytes())?;
            w.write_all(id.as_bytes())?;
            for v in self.row(i) {
                w.write_all(&v.to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_binary(path: &Path) -> Result<Self> {
        let mut r = BufReader::new(File::open(path)?);
        let truncated = |e: std::io::Error| {
            if e.kind() == std::io::ErrorKind::UnexpectedEof {
                Error::format(path, 0, "truncated embedding file")
            } else {
                Error::Io(e)
            }
        };
        let mut magic = [0u8; 7];
        r.read_exact(&mut magic).map_err(truncated)?;
        if &magic != MAGIC {
            return Err(Error::format(path, 0, "bad magic"));
        }
        let mut u32buf = [0u8; 4];
        r.read_exact(&mut u32buf).map_err(truncated)?;
        let dim = u32::from_le_bytes(u32buf) as usize;
        r.read_exact(&mut u32buf).map_err(truncated)?;
        let count = u32::from_le_bytes(u32buf) as usize;
        if dim == 0 {
            return Err(Error::format(path, 0, "zero embedding dimension"));
        }
        let mut store = Self::new(dim);
        let mut vector = vec![0f32; dim];
        for _ in 0..count {
            let mut u16buf = [0u8; 2];
            r.read_exact(&mut u16buf).map_err(truncated)?;
            let mut id = vec![0u8; u16::from_le_bytes(u16buf) as usize];
            r.read_exact(&mut id).map_err(truncated)?;
            let id = String::from_utf8(id)
                .map_err(|_| Error::format(path, 0, "clip id is not UTF-8"))?;
            for v in vector.iter_mut() {
                r.read_exact(&mut u32buf).map_err(truncated)?;
                *v = f32::from_le_bytes(u32buf);
            }
            store.push(&id, &vector)?;
        }
        if r.read(&mut [0u8; 1])? != 0 {
            return Err(Error::format(path, 0, "trailing bytes after last record"));
        }
        Ok(store)
    }

    /// `ClipId,v0,...,v{dim-1}`.
    pub fn save_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        let mut header = vec!["ClipId".to_string()];
        header.extend((0..self.dim).map(|i| format!("v{i}")));
        w.write_record(&header)?;
        for (i, id) in self.ids.iter().enumerate() {
            let mut row = vec![id.clone()];
            row.extend(self.row(i).iter().map(|v| v.to_string()));
            w.write_record(&row)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn load_csv(path: &Path) -> Result<Self> {
        let mut reader = csv::Reader::from_path(path)?;
        let header = reader.headers()?.clone();
        if header.is_empty() || &header[0] != "ClipId" || header.len() < 2 {
            return Err(Error::format(path, 1, "expected header ClipId,v0,..."));
        }
        let mut store = Self::new(header.len() - 1);
        let mut vector = vec![0f32; store.dim];
        for record in reader.records() {
            let record = record.map_err(|e| {
                Error::format(
                    path,
                    e.position().map(|p| p.line()).unwrap_or(0),
                    e.to_string(),
                )
            })?;
            let line = record.position().map(|p| p.line()).unwrap_or(0);
            for (v, raw) in vector.iter_mut().zip(record.iter().skip(1)) {
                *v = raw
                    .trim()
                    .parse()
                    .map_err(|_| Error::format(path, line, format!("`{raw}` is not a number")))?;
            }
            store.push(&record[0], &vector)?;
        }
        Ok(store)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> EmbeddingStore {
        let mut s = EmbeddingStore::new(3);
        s.push("a_0_0", &[1.0, -2.5, 0.1]).unwrap();
        s.push("b_1_2", &[f32::MIN_POSITIVE, 3.25e7, -0.0]).unwrap();
        s
    }

    #[test]
    fn binary_and_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let s = sample();
        let bin = dir.path().join("e.bin");
        let csv = dir.path().join("e.csv");
        s.save_binary(&bin).unwrap();
        s.save_csv(&csv).unwrap();
        assert_eq!(EmbeddingStore::load(&bin).unwrap(), s);
        assert_eq!(EmbeddingStore::load(&csv).unwrap(), s);
        let bytes = std::fs::read(&bin).unwrap();
        assert_eq!(&bytes[..7], b"SPFEMB1");
        assert_eq!(u32::from_le_bytes(bytes[7..11].try_into().unwrap()), 3);
        assert_eq!(u32::from_le_bytes(bytes[11..15].try_into().unwrap()), 2);
        assert_eq!(u16::from_le_bytes(bytes[15..17].try_into().unwrap()), 5);
        assert_eq!(bytes.len(), 15 + 2 * (2 + 5 + 12));
    }

    #[test]
    fn rejects_bad_rows() {
        let mut s = EmbeddingStore::new(2);
        assert!(matches!(
            s.push("x", &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(matches!(
            s.push("x", &[1.0, f32::NAN]),
            Err(Error::NonFinite { .. })
        ));
        s.push("x", &[1.0, 2.0]).unwrap();
        assert!(matches!(s.push("x", &[1.0, 2.0]), Err(Error::Integrity(_))));
    }

    #[test]
    fn truncated_binary_is_format_error() {
        let dir = tempfile::tempdir().unwrap();
        let bin = dir.path().join("e.bin");
        sample().save_binary(&bin).unwrap();
        let bytes = std::fs::read(&bin).unwrap();
        std::fs::write(&bin, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(
            EmbeddingStore::load(&bin),
            Err(Error::FileFormat { .. })
        ));
    }

    #[test]
    fn matrix_gathers_rows() {
        let s = sample();
        let m = s.matrix(&[1, 0]);
        assert_eq!(m.shape(), &[2, 3]);
        assert_eq!(m[[1, 1]], -2.5);
    }
}
