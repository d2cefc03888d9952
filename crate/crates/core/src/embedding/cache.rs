//! Persistent embedding cache.
//!
//! Layout (all little-endian): magic `EMB1`, u32 row count, u32 dimension,
//! then per row a u64 FNV-1a hash of the source text followed by
//! `dimension` f32 values. The format is bit-exact; floats round-trip
//! unchanged.

use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::embedding::{fnv1a64, EmbeddingSpec, EmbeddingVector};
use crate::error::{Error, Result};

const MAGIC: [u8; 4] = *b"EMB1";

/// Embedding rows aligned with dataset record ids (row i = record i).
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingCache {
    pub spec: EmbeddingSpec,
    pub rows: Vec<EmbeddingVector>,
}

impl EmbeddingCache {
    /// All rows must match the spec's dimension.
    pub fn new(spec: EmbeddingSpec, rows: Vec<EmbeddingVector>) -> Result<Self> {
        if let Some(bad) = rows.iter().find(|r| r.dimension() != spec.dimension) {
            return Err(Error::SpecMismatch {
                expected: spec.dimension,
                found: bad.dimension(),
            });
        }
        Ok(EmbeddingCache { spec, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.spec.dimension
    }

    pub fn validate_dimension(&self, expected: usize) -> Result<()> {
        if self.spec.dimension != expected {
            return Err(Error::SpecMismatch {
                expected,
                found: self.spec.dimension,
            });
        }
        Ok(())
    }

    /// Check row hashes against the current source texts. Fails with the
    /// first stale row, or an input error when the row count changed.
    pub fn validate_texts<'a>(&self, texts: impl ExactSizeIterator<Item = &'a str>) -> Result<()> {
        if texts.len() != self.rows.len() {
            return Err(Error::Input(format!(
                "cache has {} rows but the dataset has {}",
                self.rows.len(),
                texts.len()
            )));
        }
        for (row, text) in texts.enumerate().map(|(i, t)| (i, fnv1a64(t.as_bytes()))) {
            if self.rows[row].source_hash != text {
                return Err(Error::StaleCache { row });
            }
        }
        Ok(())
    }
}

/// Write a non-empty cache. Bytes are a pure function of the cache contents.
pub fn write_cache(cache: &EmbeddingCache, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if cache.rows.is_empty() {
        return Err(Error::Input("refusing to write an empty embedding cache".into()));
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io_err = |e| Error::io(path, e);
    w.write_all(&MAGIC).map_err(io_err)?;
    w.write_all(&(cache.rows.len() as u32).to_le_bytes()).map_err(io_err)?;
    w.write_all(&(cache.spec.dimension as u32).to_le_bytes()).map_err(io_err)?;
    for row in &cache.rows {
        w.write_all(&row.source_hash.to_le_bytes()).map_err(io_err)?;
        for v in &row.values {
            w.write_all(&v.to_le_bytes()).map_err(io_err)?;
        }
    }
    w.flush().map_err(io_err)
}

/// Read a cache file back. The format does not store the provider name, so
/// the returned spec carries an empty `provider_name`.
pub fn read_cache(path: impl AsRef<Path>) -> Result<EmbeddingCache> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut r = BufReader::new(file);

    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(|e| Error::Corrupt {
        path: path.to_path_buf(),
        reason: format!("missing header: {e}"),
    })?;
    if magic != MAGIC {
        return Err(Error::Format {
            path: path.to_path_buf(),
            reason: format!("bad magic {:?}, expected {:?}", magic, MAGIC),
        });
    }

    let mut u32buf = [0u8; 4];
    let corrupt = |reason: String| Error::Corrupt {
        path: path.to_path_buf(),
        reason,
    };
    r.read_exact(&mut u32buf).map_err(|e| corrupt(format!("missing row count: {e}")))?;
    let count = u32::from_le_bytes(u32buf) as usize;
    r.read_exact(&mut u32buf).map_err(|e| corrupt(format!("missing dimension: {e}")))?;
    let dimension = u32::from_le_bytes(u32buf) as usize;

    let mut rows = Vec::with_capacity(count);
    let mut u64buf = [0u8; 8];
    for row in 0..count {
        r.read_exact(&mut u64buf)
            .map_err(|e| corrupt(format!("truncated at row {row} hash: {e}")))?;
        let source_hash = u64::from_le_bytes(u64buf);
        let mut values = Vec::with_capacity(dimension);
        for comp in 0..dimension {
            r.read_exact(&mut u32buf)
                .map_err(|e| corrupt(format!("truncated at row {row} component {comp}: {e}")))?;
            values.push(f32::from_le_bytes(u32buf));
        }
        rows.push(EmbeddingVector { values, source_hash });
    }
    let mut trailing = [0u8; 1];
    if r.read(&mut trailing).map_err(|e| corrupt(e.to_string()))? != 0 {
        return Err(corrupt("trailing bytes after the declared rows".into()));
    }

    EmbeddingCache::new(
        EmbeddingSpec {
            provider_name: String::new(),
            dimension,
        },
        rows,
    )
}
