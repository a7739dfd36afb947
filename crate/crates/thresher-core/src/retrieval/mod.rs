//! Retrieval backends: sparse BM25, dense embedding search, and two
//! second-stage rerankers. All rankings are deterministic — score ties
//! break by ascending chunk id.

pub mod dense;
pub mod index;
pub mod rerank;

pub use dense::{
    build_dense_index, cosine, embed_texts, DenseIndex, EmbedError, EmbeddingCache,
    EmbeddingProvider, MockEmbeddingProvider,
};
pub use index::{build_index, Bm25Params, InvertedIndex};
pub use rerank::{
    parse_rank_response, rerank_cross_encoder, rerank_llm, CrossScorer, RerankOutcome,
    WordOverlapScorer,
};

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// One query's ranking: `(chunk_id, score)` entries with non-increasing
/// scores and distinct chunk ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedList {
    pub query_id: String,
    pub entries: Vec<(String, f64)>,
}

impl RankedList {
    pub fn chunk_ids(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|(id, _)| id.as_str())
    }

    /// The leading `k` entries as a new list.
    pub fn top_k(&self, k: usize) -> RankedList {
        RankedList {
            query_id: self.query_id.clone(),
            entries: self.entries.iter().take(k).cloned().collect(),
        }
    }
}

/// Sort scored chunks into ranking order: score descending, chunk id
/// ascending on ties. NaN never enters rankings (scores come from finite
/// arithmetic), but is ordered last defensively.
pub fn sort_ranking(entries: &mut [(String, f64)]) {
    entries.sort_by(|(id_a, score_a), (id_b, score_b)| {
        score_b
            .partial_cmp(score_a)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| id_a.cmp(id_b))
    });
}

#[derive(Debug, Error)]
pub enum RankingIoError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed ranking record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct RankingRecord {
    query_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    query_set: Option<String>,
    ranking: Vec<(String, f64)>,
}

/// Persist rankings as JSONL, optionally tagged with the query-set name
/// they were computed from.
pub fn save_ranked_lists(
    lists: &[RankedList],
    query_set: Option<&str>,
    path: &Path,
) -> Result<(), RankingIoError> {
    let io = |source| RankingIoError::Io { path: path.display().to_string(), source };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    for list in lists {
        let record = RankingRecord {
            query_id: list.query_id.clone(),
            query_set: query_set.map(str::to_string),
            ranking: list.entries.clone(),
        };
        let line = serde_json::to_string(&record).expect("ranking record serializes");
        writeln!(w, "{line}").map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Load rankings along with the query-set tag (from the first tagged
/// record, if any).
pub fn load_ranked_lists(path: &Path) -> Result<(Vec<RankedList>, Option<String>), RankingIoError> {
    let file = File::open(path).map_err(|source| RankingIoError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let reader = BufReader::new(file);
    let mut lists = Vec::new();
    let mut tag = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|source| RankingIoError::Io {
            path: path.display().to_string(),
            source,
        })?;
        if line.trim().is_empty() {
            continue;
        }
        let record: RankingRecord =
            serde_json::from_str(&line).map_err(|e| RankingIoError::Malformed {
                path: path.display().to_string(),
                line: i + 1,
                message: e.to_string(),
            })?;
        if tag.is_none() {
            tag = record.query_set.clone();
        }
        lists.push(RankedList { query_id: record.query_id, entries: record.ranking });
    }
    Ok((lists, tag))
}
