//! Evaluation reports, corpus statistics, and the RAG loop.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use thresher_core::agents::AgentRunner;
use thresher_core::corpus::{Chunk, Query};
use thresher_core::evaluation::{
    gold_map, length_histogram, rag_evaluate, render_comparison, render_length_histogram,
    render_retention, retention_stats, score_distribution, summarize_ndcg, LengthHistogram,
    RagQuery, RunReport, ScoreHistogram,
};
use thresher_core::retrieval::{rerank_cross_encoder, rerank_llm, RankedList, WordOverlapScorer};

use super::retrieval::{parse_reranker, parse_retriever, stem_of};
use super::{write_json, write_text, Ctx, Retriever};
use crate::config::RerankerKind;
use crate::error::CliError;
use crate::providers;

fn query_pairs(queries: &[Query]) -> Vec<(&str, &str)> {
    queries.iter().map(|q| (q.query_id.as_str(), q.domain.as_str())).collect()
}

fn chunk_texts(chunks: &[Chunk]) -> BTreeMap<String, String> {
    chunks.iter().map(|c| (c.chunk_id.clone(), c.text.clone())).collect()
}

/// Rank every query, optionally rerank, and fold into a report.
#[allow(clippy::too_many_arguments)]
fn evaluate_store(
    ctx: &Ctx,
    store_path: &Path,
    queries: &[Query],
    kind: crate::config::RetrieverKind,
    reranker: RerankerKind,
    k: usize,
    set_label: Option<&str>,
    mock_dir: Option<&Path>,
) -> Result<RunReport, CliError> {
    let chunks = ctx.load_store(store_path)?;
    let retriever = Retriever::build(ctx, kind, k, &chunks)?;

    let mut rankings: BTreeMap<String, RankedList> = BTreeMap::new();
    for query in queries {
        rankings.insert(query.query_id.clone(), retriever.search(&query.query_id, &query.text)?);
    }
    retriever.save_cache()?;

    let reranker_label = match reranker {
        RerankerKind::None => None,
        RerankerKind::Cross => {
            let texts = chunk_texts(&chunks);
            let scorer = WordOverlapScorer::default();
            for query in queries {
                let list = rankings.remove(&query.query_id).expect("ranked above");
                let outcome = rerank_cross_encoder(&scorer, &query.text, &list, &texts);
                rankings.insert(query.query_id.clone(), outcome.list);
            }
            Some(reranker.as_str())
        }
        RerankerKind::Llm => {
            let texts = chunk_texts(&chunks);
            let provider = providers::chat_provider(
                "reranker",
                &ctx.config.providers.reranker,
                mock_dir,
                None,
            )?;
            let runner =
                AgentRunner::new(provider.as_ref(), None, ctx.config.retrieval.max_retries);
            let settings = providers::settings(&ctx.config.providers.reranker);
            for query in queries {
                let list = rankings.remove(&query.query_id).expect("ranked above");
                let outcome = rerank_llm(&runner, &settings, &query.text, &list, &texts);
                rankings.insert(query.query_id.clone(), outcome.list);
            }
            Some(reranker.as_str())
        }
    };

    let gold = gold_map(&chunks);
    let pairs = query_pairs(queries);
    let summary = summarize_ndcg(&pairs, &gold, &rankings, k);
    let token_counts: Vec<usize> = chunks.iter().map(|c| c.token_count).collect();
    let hist = length_histogram(&token_counts, None);
    let mut report =
        RunReport::new(retriever.kind(), reranker_label, set_label, k, summary, hist);
    report.config = serde_json::to_value(&ctx.config.retrieval).expect("config serializes");
    Ok(report)
}

pub struct EvalOptions {
    pub store_a: Option<PathBuf>,
    pub store_b: Option<PathBuf>,
    pub retriever: Option<String>,
    pub reranker: Option<String>,
    pub k: Option<usize>,
    pub query_set: Option<String>,
    pub mock_dir: Option<PathBuf>,
}

pub fn cmd_eval(ctx: &Ctx, opts: &EvalOptions) -> Result<(), CliError> {
    if opts.k == Some(0) {
        return Err(CliError::validation("k must be at least 1"));
    }
    let corpus = ctx.load_corpus()?;
    let queries = ctx.queries(&corpus, opts.query_set.as_deref())?;
    let kind = parse_retriever(opts.retriever.as_deref(), ctx.config.retrieval.retriever)?;
    let reranker = parse_reranker(opts.reranker.as_deref(), ctx.config.retrieval.reranker)?;
    let k = opts.k.unwrap_or(ctx.config.retrieval.k);
    let store_a = opts.store_a.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let store_b = opts.store_b.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let mock_dir = opts.mock_dir.clone().or_else(|| ctx.config.paths.mock_dir.clone());

    let set_label = opts.query_set.as_deref();
    let report_a = evaluate_store(
        ctx,
        &store_a,
        &queries,
        kind,
        reranker,
        k,
        set_label,
        mock_dir.as_deref(),
    )?;
    let report_b = evaluate_store(
        ctx,
        &store_b,
        &queries,
        kind,
        reranker,
        k,
        set_label,
        mock_dir.as_deref(),
    )?;

    let path_a = ctx.config.paths.reports_dir.join("eval_a.json");
    let path_b = ctx.config.paths.reports_dir.join("eval_b.json");
    write_json(&path_a, &report_a)?;
    write_json(&path_b, &report_b)?;

    print!("{}", render_comparison(&stem_of(&store_a), &report_a, &stem_of(&store_b), &report_b));
    println!("reports: {} {}", path_a.display(), path_b.display());
    Ok(())
}

/// Tokens per domain, resolved through each chunk's parent document.
fn domain_tokens(chunks: &[Chunk], domains: &BTreeMap<&str, &str>) -> BTreeMap<String, u64> {
    let mut tally: BTreeMap<String, u64> = BTreeMap::new();
    for chunk in chunks {
        let domain = domains.get(chunk.parent_doc_id.as_str()).copied().unwrap_or("unknown");
        *tally.entry(domain.to_string()).or_insert(0) += chunk.token_count as u64;
    }
    tally
}

fn length_csv(hist: &LengthHistogram) -> String {
    let mut csv = String::from("lo,hi,count\n");
    for (i, count) in hist.counts.iter().enumerate() {
        let hi = hist.edges.get(i + 1).map(|e| e.to_string()).unwrap_or_default();
        writeln!(csv, "{},{hi},{count}", hist.edges[i]).expect("string write");
    }
    csv
}

fn score_csv(hist: &ScoreHistogram) -> String {
    let mut csv = String::from("bin_lo,bin_hi,count\n");
    for (i, count) in hist.counts.iter().enumerate() {
        let lo = i as f64 * hist.bin_width;
        let hi = ((i + 1) as f64 * hist.bin_width).min(1.0);
        writeln!(csv, "{lo:.4},{hi:.4},{count}").expect("string write");
    }
    csv
}

pub struct StatsOptions {
    pub store_a: Option<PathBuf>,
    pub store_b: Option<PathBuf>,
    pub score_bin_width: Option<f64>,
    pub retriever: Option<String>,
}

pub fn cmd_stats(ctx: &Ctx, opts: &StatsOptions) -> Result<(), CliError> {
    let corpus = ctx.load_corpus()?;
    let domains: BTreeMap<&str, &str> = corpus
        .documents
        .iter()
        .map(|d| (d.doc_id.as_str(), d.domain.as_str()))
        .collect();
    let store_a = opts.store_a.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let store_b = opts.store_b.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let chunks_a = ctx.load_store(&store_a)?;
    let chunks_b = ctx.load_store(&store_b)?;

    let tokens_a = domain_tokens(&chunks_a, &domains);
    let tokens_b = domain_tokens(&chunks_b, &domains);
    let mut rows: Vec<(String, u64, u64)> = Vec::new();
    let mut all_domains: Vec<&String> = tokens_a.keys().chain(tokens_b.keys()).collect();
    all_domains.sort();
    all_domains.dedup();
    for domain in all_domains {
        let original = tokens_a.get(domain).copied().unwrap_or(0);
        let retained = tokens_b.get(domain).copied().unwrap_or(0);
        rows.push((domain.clone(), original, retained));
    }
    let retention = retention_stats(&rows).map_err(|e| CliError::Data(e.to_string()))?;

    print!("{}", render_retention(&retention));
    let mut csv = String::from("domain,original_tokens,retained_tokens,percent\n");
    for row in &retention {
        writeln!(csv, "{},{},{},{}", row.domain, row.original, row.retained, row.percent_display())
            .expect("string write");
    }
    let dir = &ctx.config.paths.reports_dir;
    write_text(&dir.join("retention.csv"), &csv)?;

    let hist_a = length_histogram(&chunks_a.iter().map(|c| c.token_count).collect::<Vec<_>>(), None);
    let hist_b = length_histogram(&chunks_b.iter().map(|c| c.token_count).collect::<Vec<_>>(), None);
    println!("\nchunk lengths: {}", stem_of(&store_a));
    print!("{}", render_length_histogram(&hist_a));
    println!("\nchunk lengths: {}", stem_of(&store_b));
    print!("{}", render_length_histogram(&hist_b));
    write_text(&dir.join("length_a.csv"), &length_csv(&hist_a))?;
    write_text(&dir.join("length_b.csv"), &length_csv(&hist_b))?;

    if let Some(width) = opts.score_bin_width {
        if !(width > 0.0 && width <= 1.0) {
            return Err(CliError::validation("score bin width must be in (0, 1]"));
        }
        let kind = parse_retriever(opts.retriever.as_deref(), ctx.config.retrieval.retriever)?;
        let retriever = Retriever::build(ctx, kind, ctx.config.retrieval.k, &chunks_b)?;
        let mut scores = Vec::with_capacity(corpus.queries.len() * chunks_b.len());
        for query in &corpus.queries {
            scores.extend(retriever.score_all(&query.text)?.into_iter().map(|(_, s)| s));
        }
        retriever.save_cache()?;
        let hist = score_distribution(&scores, width);
        println!(
            "\nscores over {}: {} query-chunk pairs with {} (raw range {:.4}..{:.4}{})",
            stem_of(&store_b),
            hist.total,
            retriever.kind(),
            hist.raw_min,
            hist.raw_max,
            if hist.degenerate { ", degenerate" } else { "" }
        );
        write_text(&dir.join("score_hist.csv"), &score_csv(&hist))?;
    }

    println!("\nstatistics written under {}", dir.display());
    Ok(())
}

pub struct RagOptions {
    pub store: Option<PathBuf>,
    pub retriever: Option<String>,
    pub k: Option<usize>,
    pub query_set: Option<String>,
    pub mock_dir: Option<PathBuf>,
}

pub fn cmd_rag_eval(ctx: &Ctx, opts: &RagOptions) -> Result<(), CliError> {
    if opts.k == Some(0) {
        return Err(CliError::validation("k must be at least 1"));
    }
    let corpus = ctx.load_corpus()?;
    let queries = ctx.queries(&corpus, opts.query_set.as_deref())?;
    let store_path = opts.store.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    let chunks = ctx.load_store(&store_path)?;
    let kind = parse_retriever(opts.retriever.as_deref(), ctx.config.retrieval.retriever)?;
    let k = opts.k.unwrap_or(ctx.config.retrieval.k);
    let retriever = Retriever::build(ctx, kind, k, &chunks)?;
    let texts = chunk_texts(&chunks);

    let mock_dir = opts.mock_dir.clone().or_else(|| ctx.config.paths.mock_dir.clone());
    let generator = providers::chat_provider(
        "generator",
        &ctx.config.providers.generator,
        mock_dir.as_deref(),
        None,
    )?;
    let judge =
        providers::chat_provider("judge", &ctx.config.providers.judge, mock_dir.as_deref(), None)?;
    let max_retries = ctx.config.retrieval.max_retries;
    let generator_runner = AgentRunner::new(generator.as_ref(), None, max_retries);
    let judge_runner = AgentRunner::new(judge.as_ref(), None, max_retries);
    let generator_settings = providers::settings(&ctx.config.providers.generator);
    let judge_settings = providers::settings(&ctx.config.providers.judge);

    let rag_queries: Vec<RagQuery> = queries
        .iter()
        .map(|q| RagQuery {
            query_id: q.query_id.clone(),
            domain: q.domain.clone(),
            text: q.text.clone(),
        })
        .collect();

    let retrieve = |query: &RagQuery| -> Result<Vec<String>, String> {
        let list =
            retriever.search(&query.query_id, &query.text).map_err(|e| e.to_string())?;
        Ok(list.chunk_ids().map(|id| texts.get(id).cloned().unwrap_or_default()).collect())
    };

    let report = rag_evaluate(
        &generator_runner,
        &generator_settings,
        &judge_runner,
        &judge_settings,
        &rag_queries,
        retrieve,
    )
    .map_err(|e| CliError::Provider(e.to_string()))?;
    retriever.save_cache()?;

    let path = ctx.config.paths.reports_dir.join("rag_report.json");
    write_json(&path, &report)?;

    println!("rag evaluation over {} queries (prompt {})", report.items.len(), report.prompt_version);
    for (domain, mean) in &report.per_domain {
        println!("  {domain}: {mean:.2}");
    }
    println!("  mean: {:.2} ({} skipped)", report.mean, report.skipped.len());
    println!("report: {}", path.display());
    Ok(())
}
