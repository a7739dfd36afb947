//! Dense retrieval over provider-supplied embeddings, with a
//! content-addressed vector cache and a deterministic mock provider.
//!
//! The mock assigns every token a hash-seeded random vector and embeds a
//! text as the normalized mean of its token vectors — a bag-of-words in a
//! random feature space. Texts sharing vocabulary get high cosine
//! similarity, so cleaning and merging have measurable retrieval effects
//! without any real model.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::{sort_ranking, RankedList};
use crate::corpus::Chunk;
use crate::text::Analyzer;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("embedding provider failed after {attempts} attempts: {message}")]
    Provider { attempts: u32, message: String },
    #[error("provider returned {got} vectors for {expected} texts")]
    CountMismatch { expected: usize, got: usize },
    #[error("provider returned a vector of dimension {got}, declared {expected}")]
    DimMismatch { expected: usize, got: usize },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// Batch text-embedding backend. Must be deterministic for a fixed model.
pub trait EmbeddingProvider: Send + Sync {
    fn model(&self) -> &str;
    fn dim(&self) -> usize;
    fn batch_limit(&self) -> usize;
    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, String>;
}

/// Hash-seeded random-feature embedder. Identical (seed, model, text)
/// always yields the identical vector; an empty text embeds to zero.
#[derive(Debug, Clone)]
pub struct MockEmbeddingProvider {
    model_name: String,
    dim: usize,
    seed: u64,
    batch_limit: usize,
    analyzer: Analyzer,
}

impl MockEmbeddingProvider {
    pub fn new(seed: u64, dim: usize) -> Self {
        MockEmbeddingProvider {
            model_name: format!("mock-embed-{dim}"),
            dim,
            seed,
            batch_limit: 64,
            analyzer: Analyzer::default(),
        }
    }

    fn token_vector(&self, token: &str) -> Vec<f32> {
        let mut hasher = Sha256::new();
        hasher.update(self.seed.to_le_bytes());
        hasher.update(self.model_name.as_bytes());
        hasher.update([0u8]);
        hasher.update(token.as_bytes());
        let seed: [u8; 32] = hasher.finalize().into();
        let mut rng = ChaCha8Rng::from_seed(seed);
        (0..self.dim).map(|_| rng.random::<f32>() * 2.0 - 1.0).collect()
    }

    fn embed_one(&self, text: &str) -> Vec<f32> {
        let tokens = self.analyzer.analyze(text);
        if tokens.is_empty() {
            return vec![0.0; self.dim];
        }
        let mut sum = vec![0.0f32; self.dim];
        for token in &tokens {
            for (acc, v) in sum.iter_mut().zip(self.token_vector(token)) {
                *acc += v;
            }
        }
        let inv = 1.0 / tokens.len() as f32;
        for v in sum.iter_mut() {
            *v *= inv;
        }
        let norm = sum.iter().map(|v| (*v as f64).powi(2)).sum::<f64>().sqrt();
        if norm > 0.0 {
            let inv = (1.0 / norm) as f32;
            for v in sum.iter_mut() {
                *v *= inv;
            }
        }
        sum
    }
}

impl EmbeddingProvider for MockEmbeddingProvider {
    fn model(&self) -> &str {
        &self.model_name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn batch_limit(&self) -> usize {
        self.batch_limit
    }

    fn embed_batch(&self, texts: &[&str]) -> Result<Vec<Vec<f32>>, String> {
        Ok(texts.iter().map(|t| self.embed_one(t)).collect())
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheRecord {
    key: String,
    vector: Vec<f32>,
}

/// Vector cache keyed by (model, text) content digest, so re-chunking
/// reuses every unchanged chunk's embedding.
#[derive(Debug, Default)]
pub struct EmbeddingCache {
    entries: HashMap<String, Vec<f32>>,
}

impl EmbeddingCache {
    pub fn key(model: &str, text: &str) -> String {
        let mut hasher = Sha256::new();
        hasher.update(model.as_bytes());
        hasher.update([0u8]);
        hasher.update(text.as_bytes());
        hex::encode(hasher.finalize())
    }

    /// Load a cache file. A missing file is an empty cache; a corrupt file
    /// is discarded wholesale (the cache is a pure performance artifact,
    /// so rebuild beats partial trust).
    pub fn load(path: &Path) -> EmbeddingCache {
        let Ok(file) = File::open(path) else {
            return EmbeddingCache::default();
        };
        let mut entries = HashMap::new();
        for line in BufReader::new(file).lines() {
            let Ok(line) = line else {
                return EmbeddingCache::default();
            };
            if line.trim().is_empty() {
                continue;
            }
            match serde_json::from_str::<CacheRecord>(&line) {
                Ok(record) => {
                    entries.insert(record.key, record.vector);
                }
                Err(_) => return EmbeddingCache::default(),
            }
        }
        EmbeddingCache { entries }
    }

    pub fn save(&self, path: &Path) -> Result<(), EmbedError> {
        let io = |source| EmbedError::Io { path: path.display().to_string(), source };
        let file = File::create(path).map_err(io)?;
        let mut w = BufWriter::new(file);
        let mut keys: Vec<&String> = self.entries.keys().collect();
        keys.sort();
        for key in keys {
            let record = CacheRecord { key: key.clone(), vector: self.entries[key].clone() };
            let line = serde_json::to_string(&record).expect("cache record serializes");
            writeln!(w, "{line}").map_err(io)?;
        }
        w.flush().map_err(io)
    }

    pub fn get(&self, key: &str) -> Option<&Vec<f32>> {
        self.entries.get(key)
    }

    pub fn insert(&mut self, key: String, vector: Vec<f32>) {
        self.entries.insert(key, vector);
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

/// Embed texts through the cache, batching misses up to the provider's
/// batch limit and retrying each failed batch up to `max_retries` extra
/// times.
pub fn embed_texts(
    provider: &dyn EmbeddingProvider,
    cache: &mut EmbeddingCache,
    texts: &[&str],
    max_retries: u32,
) -> Result<Vec<Vec<f32>>, EmbedError> {
    let model = provider.model().to_string();
    let keys: Vec<String> = texts.iter().map(|t| EmbeddingCache::key(&model, t)).collect();

    // Unique missing texts, in first-appearance order.
    let mut missing: Vec<(String, &str)> = Vec::new();
    let mut seen: HashMap<&str, ()> = HashMap::new();
    for (key, text) in keys.iter().zip(texts) {
        if cache.get(key).is_none() && seen.insert(key.as_str(), ()).is_none() {
            missing.push((key.clone(), text));
        }
    }

    let limit = provider.batch_limit().max(1);
    for batch in missing.chunks(limit) {
        let batch_texts: Vec<&str> = batch.iter().map(|(_, t)| *t).collect();
        let mut last_err = String::new();
        let mut vectors = None;
        let budget = max_retries + 1;
        for _ in 0..budget {
            match provider.embed_batch(&batch_texts) {
                Ok(v) => {
                    vectors = Some(v);
                    break;
                }
                Err(e) => last_err = e,
            }
        }
        let Some(vectors) = vectors else {
            return Err(EmbedError::Provider { attempts: budget, message: last_err });
        };
        if vectors.len() != batch.len() {
            return Err(EmbedError::CountMismatch { expected: batch.len(), got: vectors.len() });
        }
        for ((key, _), vector) in batch.iter().zip(vectors) {
            if vector.len() != provider.dim() {
                return Err(EmbedError::DimMismatch { expected: provider.dim(), got: vector.len() });
            }
            cache.insert(key.clone(), vector);
        }
    }

    Ok(keys
        .iter()
        .map(|k| cache.get(k).expect("just embedded").clone())
        .collect())
}

/// Cosine similarity, computed in f64 and clamped to [-1, 1]. Zero vectors
/// score 0.
pub fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0f64;
    let mut na = 0.0f64;
    let mut nb = 0.0f64;
    for (x, y) in a.iter().zip(b) {
        dot += *x as f64 * *y as f64;
        na += (*x as f64).powi(2);
        nb += (*y as f64).powi(2);
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    (dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0)
}

/// Chunk embeddings ready for exact cosine search.
#[derive(Debug)]
pub struct DenseIndex {
    chunk_ids: Vec<String>,
    vectors: Vec<Vec<f32>>,
}

impl DenseIndex {
    pub fn len(&self) -> usize {
        self.chunk_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chunk_ids.is_empty()
    }

    pub fn search(
        &self,
        provider: &dyn EmbeddingProvider,
        cache: &mut EmbeddingCache,
        query_id: &str,
        query: &str,
        k: usize,
        max_retries: u32,
    ) -> Result<RankedList, EmbedError> {
        let qv = embed_texts(provider, cache, &[query], max_retries)?.remove(0);
        let mut entries = self.score_vector(&qv);
        sort_ranking(&mut entries);
        entries.truncate(k);
        Ok(RankedList { query_id: query_id.to_string(), entries })
    }

    /// Cosine of the query vector against every chunk, unsorted.
    pub fn score_vector(&self, query_vector: &[f32]) -> Vec<(String, f64)> {
        self.chunk_ids
            .iter()
            .zip(&self.vectors)
            .map(|(id, v)| (id.clone(), cosine(query_vector, v)))
            .collect()
    }
}

/// Embed every chunk (through the cache) and assemble the index.
pub fn build_dense_index(
    provider: &dyn EmbeddingProvider,
    cache: &mut EmbeddingCache,
    chunks: &[Chunk],
    max_retries: u32,
) -> Result<DenseIndex, EmbedError> {
    let texts: Vec<&str> = chunks.iter().map(|c| c.text.as_str()).collect();
    let vectors = embed_texts(provider, cache, &texts, max_retries)?;
    Ok(DenseIndex {
        chunk_ids: chunks.iter().map(|c| c.chunk_id.clone()).collect(),
        vectors,
    })
}
