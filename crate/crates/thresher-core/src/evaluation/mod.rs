//! Evaluation harness: nDCG@k over gold labels, corpus statistics, RAG
//! generator+judge scoring, and report assembly.

pub mod metrics;
pub mod rag;
pub mod render;
pub mod stats;

pub use metrics::{ndcg_at_k, ndcg_over_ids, NdcgOutcome};
pub use rag::{
    first_integer, rag_evaluate, RagError, RagItem, RagQuery, RagReport, SkippedQuery,
    GENERATOR_PROMPT_V1, JUDGE_PROMPT_V1,
};
pub use render::{render_comparison, render_length_histogram, render_retention};
pub use stats::{
    length_histogram, retention_stats, score_distribution, LengthHistogram, RetentionRow,
    ScoreHistogram, StatsError, DEFAULT_LENGTH_EDGES,
};

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::Chunk;
use crate::retrieval::RankedList;

pub const REPORT_VERSION: u32 = 1;

/// Query ids each chunk is gold for, inverted into per-query gold sets.
pub fn gold_map(chunks: &[Chunk]) -> BTreeMap<String, BTreeSet<String>> {
    let mut map: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for chunk in chunks {
        for query_id in &chunk.gold_for {
            map.entry(query_id.clone()).or_default().insert(chunk.chunk_id.clone());
        }
    }
    map
}

/// Per-domain nDCG aggregate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainNdcg {
    pub domain: String,
    pub queries: u64,
    /// Queries with an empty gold set; they score 0 and stay in the mean.
    pub no_gold: u64,
    pub mean_ndcg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NdcgSummary {
    pub per_domain: Vec<DomainNdcg>,
    /// Mean of the per-domain means (macro average, Table-1 style).
    pub average: f64,
    pub total_queries: u64,
    pub no_gold_queries: u64,
}

/// Score every `(query_id, domain)` against its ranking. Queries without
/// a ranking are scored on an empty one.
pub fn summarize_ndcg(
    queries: &[(&str, &str)],
    gold: &BTreeMap<String, BTreeSet<String>>,
    rankings: &BTreeMap<String, RankedList>,
    k: usize,
) -> NdcgSummary {
    static EMPTY_GOLD: BTreeSet<String> = BTreeSet::new();
    let mut by_domain: BTreeMap<&str, (f64, u64, u64)> = BTreeMap::new();
    for (query_id, domain) in queries {
        let gold_set = gold.get(*query_id).unwrap_or(&EMPTY_GOLD);
        let outcome = match rankings.get(*query_id) {
            Some(list) => ndcg_at_k(list, gold_set, k),
            None => ndcg_over_ids(std::iter::empty(), gold_set, k),
        };
        let entry = by_domain.entry(domain).or_insert((0.0, 0, 0));
        entry.0 += outcome.value;
        entry.1 += 1;
        entry.2 += u64::from(outcome.no_gold);
    }

    let per_domain: Vec<DomainNdcg> = by_domain
        .into_iter()
        .map(|(domain, (sum, n, no_gold))| DomainNdcg {
            domain: domain.to_string(),
            queries: n,
            no_gold,
            mean_ndcg: sum / n as f64,
        })
        .collect();
    let average = if per_domain.is_empty() {
        0.0
    } else {
        per_domain.iter().map(|d| d.mean_ndcg).sum::<f64>() / per_domain.len() as f64
    };
    NdcgSummary {
        total_queries: per_domain.iter().map(|d| d.queries).sum(),
        no_gold_queries: per_domain.iter().map(|d| d.no_gold).sum(),
        per_domain,
        average,
    }
}

/// Everything one evaluation run produced, serializable for comparison
/// across pipeline variants.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunReport {
    pub report_version: u32,
    pub retriever: String,
    pub reranker: Option<String>,
    pub query_set: Option<String>,
    pub k: usize,
    pub per_domain: Vec<DomainNdcg>,
    pub average_ndcg: f64,
    pub total_queries: u64,
    pub no_gold_queries: u64,
    pub length_hist: LengthHistogram,
    pub score_hist: Option<ScoreHistogram>,
    pub rag: Option<RagReport>,
    /// Echo of the run configuration that produced this report.
    pub config: serde_json::Value,
}

impl RunReport {
    pub fn new(
        retriever: &str,
        reranker: Option<&str>,
        query_set: Option<&str>,
        k: usize,
        summary: NdcgSummary,
        length_hist: LengthHistogram,
    ) -> RunReport {
        RunReport {
            report_version: REPORT_VERSION,
            retriever: retriever.to_string(),
            reranker: reranker.map(str::to_string),
            query_set: query_set.map(str::to_string),
            k,
            per_domain: summary.per_domain,
            average_ndcg: summary.average,
            total_queries: summary.total_queries,
            no_gold_queries: summary.no_gold_queries,
            length_hist,
            score_hist: None,
            rag: None,
            config: serde_json::Value::Null,
        }
    }
}
