//! Sentence embeddings behind a pluggable provider interface.
//!
//! The desk-scale path is [`StubProvider`], a deterministic bag-of-words
//! embedder. The pretrained encoders (bangla-bert, bangla-bert-base,
//! sahaj-bert) are consumed out of process through [`CommandProvider`]; the
//! pipeline itself never loads a transformer.

mod cache;

pub use cache::{read_cache, write_cache, EmbeddingCache};

use std::io::Write;
use std::process::{Command, Stdio};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// FNV-1a 64-bit over raw bytes. Fixed so cache files stay portable.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes.iter().fold(OFFSET, |h, b| (h ^ u64::from(*b)).wrapping_mul(PRIME))
}

/// Which provider produced a vector set and at what width.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct EmbeddingSpec {
    pub provider_name: String,
    pub dimension: usize,
}

/// One sentence vector plus the hash of the text it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector {
    pub values: Vec<f32>,
    pub source_hash: u64,
}

impl EmbeddingVector {
    pub fn dimension(&self) -> usize {
        self.values.len()
    }

    pub fn l2_norm(&self) -> f64 {
        self.values.iter().map(|v| f64::from(*v) * f64::from(*v)).sum::<f64>().sqrt()
    }
}

/// A sentence-embedding backend. Implementations must be deterministic per
/// (identity, text) and emit mean-pooled sentence vectors.
pub trait EmbeddingProvider {
    fn name(&self) -> &str;
    fn dimension(&self) -> usize;

    /// Pooling declared by the backend; the provider contract is mean pooling.
    fn pooling(&self) -> &str {
        "mean"
    }

    fn embed_one(&self, text: &str) -> Result<Vec<f32>>;

    /// Batched embedding; must equal mapping [`Self::embed_one`] elementwise.
    fn embed_many(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        texts.iter().map(|t| self.embed_one(t)).collect()
    }

    fn spec(&self) -> EmbeddingSpec {
        EmbeddingSpec {
            provider_name: self.name().to_string(),
            dimension: self.dimension(),
        }
    }
}

/// Deterministic offline embedder: each whitespace token expands through a
/// ChaCha stream keyed by its FNV hash; the token vectors are summed and
/// L2-normalized.
#[derive(Debug, Clone)]
pub struct StubProvider {
    dimension: usize,
    seed: u64,
    name: String,
}

impl StubProvider {
    pub fn new(dimension: usize, seed: u64) -> Result<Self> {
        if dimension == 0 {
            return Err(Error::Config("stub dimension must be >= 1".into()));
        }
        Ok(StubProvider {
            dimension,
            seed,
            name: format!("stub-{dimension}"),
        })
    }
}

impl EmbeddingProvider for StubProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_one(&self, text: &str) -> Result<Vec<f32>> {
        Ok(stub_embed(text, self.dimension, self.seed).values)
    }
}

/// Bag-of-words stub embedding. Empty text gives the zero vector.
pub fn stub_embed(text: &str, dimension: usize, seed: u64) -> EmbeddingVector {
    assert!(dimension >= 1, "stub dimension must be >= 1");
    let mut sum = vec![0f64; dimension];
    for token in text.split_whitespace() {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ fnv1a64(token.as_bytes()));
        for slot in sum.iter_mut() {
            *slot += rng.gen_range(-1.0..1.0);
        }
    }
    let norm = sum.iter().map(|v| v * v).sum::<f64>().sqrt();
    let values = if norm > 0.0 {
        sum.iter().map(|v| (v / norm) as f32).collect()
    } else {
        vec![0f32; dimension]
    };
    EmbeddingVector {
        values,
        source_hash: fnv1a64(text.as_bytes()),
    }
}

/// Out-of-process provider: pipes a JSON array of texts to a command's stdin
/// and reads a JSON array of float vectors from its stdout.
#[derive(Debug, Clone)]
pub struct CommandProvider {
    name: String,
    dimension: usize,
    command: Vec<String>,
}

impl CommandProvider {
    pub fn new(name: impl Into<String>, dimension: usize, command_line: &str) -> Result<Self> {
        let command: Vec<String> = command_line.split_whitespace().map(String::from).collect();
        if command.is_empty() {
            return Err(Error::Config("embedding command is empty".into()));
        }
        Ok(CommandProvider {
            name: name.into(),
            dimension,
            command,
        })
    }

    fn run(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        let err = |reason: String| Error::Provider {
            provider: self.name.clone(),
            index: None,
            reason,
        };
        let payload = serde_json::to_vec(texts).map_err(|e| err(e.to_string()))?;
        let mut child = Command::new(&self.command[0])
            .args(&self.command[1..])
            .stdin(Stdio::piped())
            .stdout(Stdio::piped())
            .stderr(Stdio::piped())
            .spawn()
            .map_err(|e| err(format!("failed to spawn '{}': {e}", self.command[0])))?;
        let mut stdin = child.stdin.take().expect("piped stdin");
        let writer = std::thread::spawn(move || stdin.write_all(&payload));
        let output = child
            .wait_with_output()
            .map_err(|e| err(format!("embedding command failed: {e}")))?;
        writer
            .join()
            .map_err(|_| err("stdin writer panicked".into()))?
            .map_err(|e| err(format!("failed writing texts to command: {e}")))?;
        if !output.status.success() {
            return Err(err(format!(
                "embedding command exited with {}: {}",
                output.status,
                String::from_utf8_lossy(&output.stderr).trim()
            )));
        }
        let vectors: Vec<Vec<f32>> =
            serde_json::from_slice(&output.stdout).map_err(|e| err(format!("bad output: {e}")))?;
        if vectors.len() != texts.len() {
            return Err(err(format!(
                "command returned {} vectors for {} texts",
                vectors.len(),
                texts.len()
            )));
        }
        Ok(vectors)
    }
}

impl EmbeddingProvider for CommandProvider {
    fn name(&self) -> &str {
        &self.name
    }

    fn dimension(&self) -> usize {
        self.dimension
    }

    fn embed_one(&self, text: &str) -> Result<Vec<f32>> {
        Ok(self.run(&[text])?.remove(0))
    }

    fn embed_many(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>> {
        self.run(texts)
    }
}

/// The pretrained encoders named on the CLI and their vector widths.
pub const NAMED_PROVIDERS: [(&str, usize); 3] = [
    ("bangla-bert", 768),
    ("bangla-bert-base", 768),
    ("sahaj-bert", 1024),
];

/// Environment variable consulted for the out-of-process embedding command.
pub const EMBED_CMD_ENV: &str = "RD_EMBED_CMD";

/// Resolve a `--provider` selection. Stub needs an explicit dimension; the
/// named encoders need an embedding command (flag or `RD_EMBED_CMD`).
pub fn provider_from_name(
    name: &str,
    stub_dimension: Option<usize>,
    stub_seed: u64,
    embed_cmd: Option<&str>,
) -> Result<Box<dyn EmbeddingProvider>> {
    if name == "stub" {
        let dim = stub_dimension.ok_or_else(|| {
            Error::Config("provider 'stub' requires an explicit dimension (--dim)".into())
        })?;
        return Ok(Box::new(StubProvider::new(dim, stub_seed)?));
    }
    if let Some((known, dim)) = NAMED_PROVIDERS.iter().find(|(n, _)| *n == name) {
        let cmd = embed_cmd
            .map(str::to_string)
            .or_else(|| std::env::var(EMBED_CMD_ENV).ok())
            .ok_or_else(|| Error::Provider {
                provider: known.to_string(),
                index: None,
                reason: format!(
                    "provider unavailable: set --embed-cmd or {EMBED_CMD_ENV} to an embedding \
                     command (see scripts/st_embed.py); retry once configured"
                ),
            })?;
        return Ok(Box::new(CommandProvider::new(*known, *dim, &cmd)?));
    }
    Err(Error::Config(format!(
        "unknown provider '{name}' (expected bangla-bert|bangla-bert-base|sahaj-bert|stub)"
    )))
}

fn check_vector(provider: &dyn EmbeddingProvider, values: Vec<f32>, index: Option<usize>) -> Result<Vec<f32>> {
    if values.len() != provider.dimension() {
        return Err(Error::SpecMismatch {
            expected: provider.dimension(),
            found: values.len(),
        });
    }
    if let Some(bad) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::Provider {
            provider: provider.name().to_string(),
            index,
            reason: format!("non-finite value at component {bad}"),
        });
    }
    Ok(values)
}

/// Embed one non-empty text.
pub fn embed_text(text: &str, provider: &dyn EmbeddingProvider) -> Result<EmbeddingVector> {
    if text.trim().is_empty() {
        return Err(Error::Input("cannot embed empty text".into()));
    }
    let values = check_vector(provider, provider.embed_one(text)?, None)?;
    Ok(EmbeddingVector {
        values,
        source_hash: fnv1a64(text.as_bytes()),
    })
}

/// Embed many texts in order, `batch_size` at a time. Equal to mapping
/// [`embed_text`] elementwise; errors carry the failing input index.
pub fn embed_batch(
    texts: &[&str],
    provider: &dyn EmbeddingProvider,
    batch_size: usize,
) -> Result<Vec<EmbeddingVector>> {
    if batch_size == 0 {
        return Err(Error::Input("batch_size must be >= 1".into()));
    }
    if let Some(i) = texts.iter().position(|t| t.trim().is_empty()) {
        return Err(Error::Input(format!("cannot embed empty text at input {i}")));
    }
    let mut out = Vec::with_capacity(texts.len());
    for (chunk_idx, chunk) in texts.chunks(batch_size).enumerate() {
        let base = chunk_idx * batch_size;
        let vectors = provider.embed_many(chunk).map_err(|e| match e {
            Error::Provider {
                provider,
                index,
                reason,
            } => Error::Provider {
                provider,
                index: Some(base + index.unwrap_or(0)),
                reason,
            },
            other => other,
        })?;
        if vectors.len() != chunk.len() {
            return Err(Error::Provider {
                provider: provider.name().to_string(),
                index: Some(base),
                reason: format!("batch returned {} vectors for {} texts", vectors.len(), chunk.len()),
            });
        }
        for (offset, (values, text)) in vectors.into_iter().zip(chunk).enumerate() {
            let values = check_vector(provider, values, Some(base + offset))?;
            out.push(EmbeddingVector {
                values,
                source_hash: fnv1a64(text.as_bytes()),
            });
        }
    }
    Ok(out)
}
