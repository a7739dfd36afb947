//! Indexing, retrieval, and reranking commands.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use thresher_core::agents::AgentRunner;
use thresher_core::retrieval::{
    load_ranked_lists, rerank_cross_encoder, rerank_llm, save_ranked_lists, RankedList,
    WordOverlapScorer,
};

use super::{ensure_parent, write_json, Ctx, Retriever};
use crate::config::{RerankerKind, RetrieverKind};
use crate::error::CliError;
use crate::providers;

pub fn parse_retriever(flag: Option<&str>, fallback: RetrieverKind) -> Result<RetrieverKind, CliError> {
    match flag {
        Some(s) => s.parse().map_err(CliError::validation),
        None => Ok(fallback),
    }
}

pub fn parse_reranker(flag: Option<&str>, fallback: RerankerKind) -> Result<RerankerKind, CliError> {
    match flag {
        Some(s) => s.parse().map_err(CliError::validation),
        None => Ok(fallback),
    }
}

pub struct IndexOptions {
    pub store: Option<PathBuf>,
    pub retriever: Option<String>,
}

pub fn cmd_index(ctx: &Ctx, opts: &IndexOptions) -> Result<(), CliError> {
    let store_path = opts.store.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let chunks = ctx.load_store(&store_path)?;
    let kind = parse_retriever(opts.retriever.as_deref(), ctx.config.retrieval.retriever)?;
    let retriever = Retriever::build(ctx, kind, ctx.config.retrieval.k, &chunks)?;
    retriever.save_cache()?;
    let mut meta = serde_json::json!({
        "retriever": retriever.kind(),
        "store": store_path,
        "chunks": chunks.len(),
    });
    if let Retriever::Dense { cache, .. } = &retriever {
        meta["dim"] = ctx.config.providers.embedder.dim.into();
        meta["cached_embeddings"] = cache.borrow().len().into();
    }
    let path = ctx.config.paths.reports_dir.join("index_meta.json");
    write_json(&path, &meta)?;
    println!(
        "indexed {} chunks from {} with {}",
        chunks.len(),
        store_path.display(),
        retriever.kind()
    );
    println!("metadata: {}", path.display());
    Ok(())
}

pub struct RetrieveOptions {
    pub store: Option<PathBuf>,
    pub retriever: Option<String>,
    pub k: Option<usize>,
    pub query_set: Option<String>,
    pub out: Option<PathBuf>,
}

pub fn cmd_retrieve(ctx: &Ctx, opts: &RetrieveOptions) -> Result<(), CliError> {
    if let Some(k) = opts.k {
        if k == 0 {
            return Err(CliError::validation("k must be at least 1"));
        }
    }
    let corpus = ctx.load_corpus()?;
    let queries = ctx.queries(&corpus, opts.query_set.as_deref())?;
    let store_path = opts.store.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let chunks = ctx.load_store(&store_path)?;
    let kind = parse_retriever(opts.retriever.as_deref(), ctx.config.retrieval.retriever)?;
    let k = opts.k.unwrap_or(ctx.config.retrieval.k);
    let retriever = Retriever::build(ctx, kind, k, &chunks)?;
    let mut lists = Vec::with_capacity(queries.len());
    for query in &queries {
        lists.push(retriever.search(&query.query_id, &query.text)?);
    }
    retriever.save_cache()?;
    let set_label = opts.query_set.as_deref();
    let out_path = opts.out.clone().unwrap_or_else(|| {
        ctx.config.paths.ranked_dir.join(format!(
            "{}_{}.jsonl",
            kind.as_str(),
            set_label.unwrap_or("original")
        ))
    });
    ensure_parent(&out_path)?;
    save_ranked_lists(&lists, set_label, &out_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_path.display())))?;
    println!(
        "ranked {} queries over {} chunks with {} (k = {})",
        lists.len(),
        chunks.len(),
        retriever.kind(),
        k
    );
    println!("rankings: {}", out_path.display());
    Ok(())
}

pub struct RerankOptions {
    pub rankings: PathBuf,
    pub store: Option<PathBuf>,
    pub reranker: Option<String>,
    pub mock_dir: Option<PathBuf>,
    pub out: Option<PathBuf>,
}

pub fn cmd_rerank(ctx: &Ctx, opts: &RerankOptions) -> Result<(), CliError> {
    let (lists, tag) = load_ranked_lists(&opts.rankings)
        .map_err(|e| CliError::Data(format!("{}: {e}", opts.rankings.display())))?;
    let corpus = ctx.load_corpus()?;
    let queries = ctx.queries(&corpus, tag.as_deref())?;
    let query_texts: BTreeMap<&str, &str> = queries
        .iter()
        .map(|q| (q.query_id.as_str(), q.text.as_str()))
        .collect();
    let store_path = opts.store.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let chunks = ctx.load_store(&store_path)?;
    let chunk_texts: BTreeMap<String, String> = chunks
        .iter()
        .map(|c| (c.chunk_id.clone(), c.text.clone()))
        .collect();
    let kind = parse_reranker(opts.reranker.as_deref(), ctx.config.retrieval.reranker)?;

    let query_for = |list: &RankedList| -> Result<String, CliError> {
        query_texts
            .get(list.query_id.as_str())
            .map(|t| t.to_string())
            .ok_or_else(|| {
                CliError::Data(format!(
                    "ranked list query {:?} is not in the query set",
                    list.query_id
                ))
            })
    };

    let mut reranked = Vec::with_capacity(lists.len());
    let mut fallbacks = 0usize;
    match kind {
        RerankerKind::None => {
            return Err(CliError::validation(
                "retrieval.reranker is \"none\"; pass --reranker cross|llm or set it in the config",
            ));
        }
        RerankerKind::Cross => {
            let scorer = WordOverlapScorer::default();
            for list in &lists {
                let query = query_for(list)?;
                let outcome = rerank_cross_encoder(&scorer, &query, list, &chunk_texts);
                fallbacks += usize::from(outcome.fell_back);
                reranked.push(outcome.list);
            }
        }
        RerankerKind::Llm => {
            let mock_dir = opts.mock_dir.clone().or_else(|| ctx.config.paths.mock_dir.clone());
            let provider = providers::chat_provider(
                "reranker",
                &ctx.config.providers.reranker,
                mock_dir.as_deref(),
                None,
            )?;
            let runner =
                AgentRunner::new(provider.as_ref(), None, ctx.config.retrieval.max_retries);
            let settings = providers::settings(&ctx.config.providers.reranker);
            for list in &lists {
                let query = query_for(list)?;
                let outcome = rerank_llm(&runner, &settings, &query, list, &chunk_texts);
                fallbacks += usize::from(outcome.fell_back);
                reranked.push(outcome.list);
            }
        }
    }

    let out_path = opts.out.clone().unwrap_or_else(|| {
        let stem = opts
            .rankings
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "rankings".to_string());
        ctx.config.paths.ranked_dir.join(format!("reranked_{stem}.jsonl"))
    });
    ensure_parent(&out_path)?;
    save_ranked_lists(&reranked, tag.as_deref(), &out_path)
        .map_err(|e| CliError::Io(format!("{}: {e}", out_path.display())))?;
    println!(
        "reranked {} lists with {} ({} kept the original order as a fallback)",
        reranked.len(),
        kind.as_str(),
        fallbacks
    );
    println!("rankings: {}", out_path.display());
    Ok(())
}

pub fn stem_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}
