//! Command implementations and the shared run context.

pub mod pipeline;
pub mod reports;
pub mod retrieval;

use std::cell::RefCell;
use std::path::{Path, PathBuf};

use thresher_core::corpus::{load_corpus, load_query_set, Chunk, Corpus, Query};
use thresher_core::retrieval::{
    build_dense_index, build_index, Bm25Params, DenseIndex, EmbeddingCache, InvertedIndex,
    MockEmbeddingProvider, RankedList,
};
use thresher_core::text::{Analyzer, TokenizerKind};

use crate::config::{RetrieverKind, RunConfig};
use crate::error::CliError;
use crate::providers;

pub struct Ctx {
    pub config: RunConfig,
}

impl Ctx {
    pub fn load_corpus(&self) -> Result<Corpus, CliError> {
        let dir = &self.config.paths.corpus_dir;
        if !dir.is_dir() {
            return Err(CliError::validation(format!(
                "paths.corpus_dir: {} does not exist",
                dir.display()
            )));
        }
        load_corpus(dir).map_err(|e| CliError::Data(e.to_string()))
    }

    pub fn load_store(&self, path: &Path) -> Result<Vec<Chunk>, CliError> {
        if !path.is_file() {
            return Err(CliError::validation(format!(
                "chunk store {} does not exist",
                path.display()
            )));
        }
        thresher_core::corpus::load_chunk_store(path, TokenizerKind::Whitespace)
            .map_err(|e| CliError::Data(e.to_string()))
    }

    /// The original queries, or a configured rewritten set.
    pub fn queries(&self, corpus: &Corpus, set: Option<&str>) -> Result<Vec<Query>, CliError> {
        match set {
            None => Ok(corpus.queries.clone()),
            Some(name) => {
                let path = self.config.paths.query_sets.get(name).ok_or_else(|| {
                    CliError::validation(format!(
                        "query set {name:?} is not configured under paths.query_sets"
                    ))
                })?;
                load_query_set(corpus, name, path).map_err(|e| CliError::Data(e.to_string()))
            }
        }
    }

}

/// A retriever bound to one chunk store.
pub enum Retriever {
    Bm25 {
        index: InvertedIndex,
        params: Bm25Params,
        k: usize,
    },
    Dense {
        index: DenseIndex,
        provider: MockEmbeddingProvider,
        cache: RefCell<EmbeddingCache>,
        cache_path: Option<PathBuf>,
        max_retries: u32,
        k: usize,
    },
}

impl Retriever {
    pub fn build(
        ctx: &Ctx,
        kind: RetrieverKind,
        k: usize,
        chunks: &[Chunk],
    ) -> Result<Retriever, CliError> {
        let r = &ctx.config.retrieval;
        match kind {
            RetrieverKind::Bm25 => Ok(Retriever::Bm25 {
                index: build_index(chunks, Analyzer::default()),
                params: Bm25Params { k1: r.bm25_k1, b: r.bm25_b },
                k,
            }),
            RetrieverKind::Dense => {
                let provider =
                    providers::embedder(&ctx.config.providers.embedder, ctx.config.seeds.embedding)?;
                let cache_path = ctx.config.paths.embedding_cache.clone();
                let mut cache = match &cache_path {
                    Some(path) => EmbeddingCache::load(path),
                    None => EmbeddingCache::default(),
                };
                let index = build_dense_index(&provider, &mut cache, chunks, r.max_retries)
                    .map_err(|e| CliError::Provider(e.to_string()))?;
                Ok(Retriever::Dense {
                    index,
                    provider,
                    cache: RefCell::new(cache),
                    cache_path,
                    max_retries: r.max_retries,
                    k,
                })
            }
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Retriever::Bm25 { .. } => "bm25",
            Retriever::Dense { .. } => "dense",
        }
    }

    pub fn search(&self, query_id: &str, query: &str) -> Result<RankedList, CliError> {
        match self {
            Retriever::Bm25 { index, params, k } => Ok(index.search(query_id, query, *k, *params)),
            Retriever::Dense { index, provider, cache, max_retries, k, .. } => index
                .search(provider, &mut cache.borrow_mut(), query_id, query, *k, *max_retries)
                .map_err(|e| CliError::Provider(e.to_string())),
        }
    }

    /// Scores for every candidate chunk, unranked by k.
    pub fn score_all(&self, query: &str) -> Result<Vec<(String, f64)>, CliError> {
        match self {
            Retriever::Bm25 { index, params, .. } => Ok(index.score_all(query, *params)),
            Retriever::Dense { index, provider, cache, max_retries, .. } => {
                let vectors = thresher_core::retrieval::embed_texts(
                    provider,
                    &mut cache.borrow_mut(),
                    &[query],
                    *max_retries,
                )
                .map_err(|e| CliError::Provider(e.to_string()))?;
                Ok(index.score_vector(&vectors[0]))
            }
        }
    }

    /// Persist the embedding cache when one is configured.
    pub fn save_cache(&self) -> Result<(), CliError> {
        if let Retriever::Dense { cache, cache_path: Some(path), .. } = self {
            cache.borrow().save(path).map_err(|e| CliError::Io(e.to_string()))?;
        }
        Ok(())
    }
}

pub fn ensure_parent(path: &Path) -> Result<(), CliError> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
        }
    }
    Ok(())
}

pub fn write_json(path: &Path, value: &impl serde::Serialize) -> Result<(), CliError> {
    ensure_parent(path)?;
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    ensure_parent(path)?;
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}
