//! Ranking quality metrics.

use std::collections::BTreeSet;

use crate::retrieval::RankedList;

/// An nDCG value plus the degenerate-query marker. Queries with no gold
/// chunks score 0 and are flagged so reports can count them separately
/// instead of silently diluting the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NdcgOutcome {
    pub value: f64,
    pub no_gold: bool,
}

/// Normalized discounted cumulative gain with binary gains: DCG@k =
/// Σ_{i≤k} rel_i / log2(i+1) over 1-based ranks, IDCG from min(|gold|, k)
/// leading ones.
pub fn ndcg_at_k(ranking: &RankedList, gold: &BTreeSet<String>, k: usize) -> NdcgOutcome {
    ndcg_over_ids(ranking.chunk_ids(), gold, k)
}

/// `ndcg_at_k` over bare chunk ids, for callers without a scored list.
pub fn ndcg_over_ids<'a>(
    ids: impl IntoIterator<Item = &'a str>,
    gold: &BTreeSet<String>,
    k: usize,
) -> NdcgOutcome {
    assert!(k >= 1, "ndcg requires k >= 1");
    if gold.is_empty() {
        return NdcgOutcome { value: 0.0, no_gold: true };
    }
    let mut dcg = 0.0;
    for (i, id) in ids.into_iter().take(k).enumerate() {
        if gold.contains(id) {
            dcg += 1.0 / ((i + 2) as f64).log2();
        }
    }
    let ideal_hits = gold.len().min(k);
    let idcg: f64 = (0..ideal_hits).map(|i| 1.0 / ((i + 2) as f64).log2()).sum();
    NdcgOutcome { value: dcg / idcg, no_gold: false }
}
