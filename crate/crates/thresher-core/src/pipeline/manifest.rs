//! The run manifest: what each stage did, what was dropped, and how the
//! gold spans fared.

use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::PipelineConfig;

/// How many inputs each stage consumed or produced.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageCounts {
    pub documents_in: u64,
    pub gold_documents: u64,
    pub irrelevant_documents: u64,
    /// Gold parts sent through the conservative cleaner.
    pub parts_safe_cleaned: u64,
    /// Irrelevant parts of gold documents sent through the fast cleaner.
    pub parts_fast_cleaned: u64,
    /// Whole irrelevant documents sent through the fast cleaner.
    pub documents_fast_cleaned: u64,
    pub documents_split: u64,
    pub documents_heuristic_chunked: u64,
    pub documents_dropped: u64,
    pub chunks_emitted: u64,
}

/// A fallback or drop caused by an agent on one document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentFailure {
    pub doc_id: String,
    pub stage: String,
    pub message: String,
}

/// One gold span, for flag lists.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpanFlag {
    pub query_id: String,
    pub doc_id: String,
    pub start: usize,
    pub end: usize,
}

/// Where every gold span ended up. `total` always equals
/// `intact + split.len() + lost.len()` — no span falls through.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldSpanAccounting {
    pub total: u64,
    /// Spans contained verbatim in a single chunk.
    pub intact: u64,
    /// Spans whose characters all survive but across several chunks.
    pub split: Vec<SpanFlag>,
    /// Spans with characters in no chunk at all.
    pub lost: Vec<SpanFlag>,
    /// Gold characters not attributable to any chunk.
    pub lost_chars: u64,
}

impl GoldSpanAccounting {
    pub fn accounted(&self) -> u64 {
        self.intact + self.split.len() as u64 + self.lost.len() as u64
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub stage_counts: StageCounts,
    pub dropped_docs: Vec<String>,
    /// Queries whose gold spans mapped to zero chunks.
    pub orphaned_queries: Vec<String>,
    /// Provider calls beyond the first, summed over all agent invocations.
    pub retries: u64,
    pub elapsed_ms: u64,
    pub config: PipelineConfig,
    /// Per-document fallbacks; the run never aborts on these.
    pub agent_failures: Vec<AgentFailure>,
    pub gold_spans: GoldSpanAccounting,
}

pub fn save_manifest(manifest: &RunManifest, path: &Path) -> io::Result<()> {
    let json = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    fs::write(path, json)
}

pub fn load_manifest(path: &Path) -> io::Result<RunManifest> {
    let json = fs::read_to_string(path)?;
    serde_json::from_str(&json).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
}
