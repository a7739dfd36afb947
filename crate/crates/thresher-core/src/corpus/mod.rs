//! Data model, ingestion, and persistence for documents, queries, gold
//! annotations, rewritten query sets, and chunk stores.
//!
//! A corpus is immutable after load and safe to share across threads.

mod io;
mod store;

pub use io::{load_corpus, load_query_set, save_corpus, CorpusFormat};
pub use store::{load_chunk_store, save_chunk_store, StoreError};

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text::{char_len, CharSpan};

/// Whether a document carries answer-supporting content for any query.
///
/// Derived, never read from input: a document is gold iff at least one
/// annotation references it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DocumentKind {
    Gold,
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
    pub domain: String,
    pub kind: DocumentKind,
}

/// Which query formulation a query text belongs to: the corpus's own
/// queries, or a named set of LLM rewrites loaded alongside them.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum QueryVariant {
    Original,
    Rewrite(String),
}

impl QueryVariant {
    pub fn label(&self) -> &str {
        match self {
            QueryVariant::Original => "original",
            QueryVariant::Rewrite(name) => name,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Query {
    pub query_id: String,
    pub text: String,
    pub domain: String,
    pub variant: QueryVariant,
}

/// Span-level relevance evidence tying a query to a document.
///
/// Spans are half-open character ranges, non-overlapping and ascending.
/// Annotations supplied as original-chunk ordinals are resolved to
/// character ranges at load time.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GoldAnnotation {
    pub query_id: String,
    pub doc_id: String,
    pub spans: Vec<CharSpan>,
}

/// A retrievable unit produced by chunking a (possibly cleaned) document.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Chunk {
    pub chunk_id: String,
    pub parent_doc_id: String,
    /// 0-based position within the parent document.
    pub ordinal: usize,
    /// Agent-assigned label ("A", "B", ..., "AA", ...).
    pub label: String,
    pub text: String,
    pub token_count: usize,
    /// Queries for which this chunk is relevant.
    pub gold_for: BTreeSet<String>,
    /// Character range into the cleaned parent document this chunk was cut
    /// from, when the chunk text could be located verbatim.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source_span: Option<CharSpan>,
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("{file}:{line}: malformed record: {message}")]
    Malformed {
        file: String,
        line: usize,
        message: String,
    },
    #[error("duplicate {kind} id {id:?}")]
    DuplicateId { kind: &'static str, id: String },
    #[error("annotation references unknown {kind} id {id:?}")]
    UnknownRef { kind: &'static str, id: String },
    #[error("annotation for query {query_id:?} on doc {doc_id:?}: span not ascending ([{start}, {end}))")]
    SpanNotAscending {
        query_id: String,
        doc_id: String,
        start: usize,
        end: usize,
    },
    #[error("annotation for query {query_id:?} on doc {doc_id:?}: spans overlap or are unsorted")]
    SpansOverlap { query_id: String, doc_id: String },
    #[error("annotation for query {query_id:?} on doc {doc_id:?}: span [{start}, {end}) out of bounds for document of {len} chars")]
    SpanOutOfBounds {
        query_id: String,
        doc_id: String,
        start: usize,
        end: usize,
        len: usize,
    },
    #[error("annotation for query {query_id:?} on doc {doc_id:?} uses chunk indices but no original chunking was supplied for the document")]
    ChunkIndexWithoutChunking { query_id: String, doc_id: String },
    #[error("annotation for query {query_id:?} on doc {doc_id:?}: chunk index {index} out of range ({count} original chunks)")]
    ChunkIndexOutOfRange {
        query_id: String,
        doc_id: String,
        index: usize,
        count: usize,
    },
    #[error("annotation for query {query_id:?} on doc {doc_id:?}: chunk indices must be strictly ascending")]
    ChunkIndicesNotAscending { query_id: String, doc_id: String },
    #[error("gold document {doc_id:?} has empty text")]
    EmptyGoldText { doc_id: String },
    #[error("query {query_id:?} has no gold annotation")]
    QueryWithoutAnnotation { query_id: String },
    #[error("original chunking for doc {doc_id:?} is invalid: {message}")]
    InvalidChunking { doc_id: String, message: String },
    #[error("original chunking references unknown doc id {doc_id:?}")]
    ChunkingUnknownDoc { doc_id: String },
    #[error("query set {variant:?}: rewrite for query {query_id:?} is empty")]
    EmptyRewrite { variant: String, query_id: String },
    #[error("query set {variant:?}: query id {query_id:?} does not exist in the original query set")]
    UnknownRewriteQuery { variant: String, query_id: String },
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

/// An immutable, validated corpus: documents, queries, annotations, and
/// (optionally) the original chunk boundaries per document.
#[derive(Debug, Clone, PartialEq)]
pub struct Corpus {
    pub documents: Vec<Document>,
    pub queries: Vec<Query>,
    pub annotations: Vec<GoldAnnotation>,
    /// doc_id -> ascending chunk boundaries `[0, c1, ..., len]`.
    pub original_chunking: BTreeMap<String, Vec<usize>>,
    doc_index: HashMap<String, usize>,
    query_index: HashMap<String, usize>,
}

impl Corpus {
    /// Assemble and validate a corpus. Document kinds are derived here:
    /// a document is gold iff an annotation references it.
    pub fn build(
        mut documents: Vec<Document>,
        queries: Vec<Query>,
        annotations: Vec<GoldAnnotation>,
        original_chunking: BTreeMap<String, Vec<usize>>,
    ) -> Result<Corpus, CorpusError> {
        let mut doc_index = HashMap::new();
        for (i, d) in documents.iter().enumerate() {
            if doc_index.insert(d.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId { kind: "document", id: d.doc_id.clone() });
            }
        }
        let mut query_index = HashMap::new();
        for (i, q) in queries.iter().enumerate() {
            if query_index.insert(q.query_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId { kind: "query", id: q.query_id.clone() });
            }
        }

        for (doc_id, boundaries) in &original_chunking {
            let Some(&di) = doc_index.get(doc_id) else {
                return Err(CorpusError::ChunkingUnknownDoc { doc_id: doc_id.clone() });
            };
            let len = char_len(&documents[di].text);
            validate_boundaries(doc_id, boundaries, len)?;
        }

        let mut validated = Vec::with_capacity(annotations.len());
        for ann in annotations {
            let Some(&di) = doc_index.get(&ann.doc_id) else {
                return Err(CorpusError::UnknownRef { kind: "document", id: ann.doc_id.clone() });
            };
            if !query_index.contains_key(&ann.query_id) {
                return Err(CorpusError::UnknownRef { kind: "query", id: ann.query_id.clone() });
            }
            let len = char_len(&documents[di].text);
            let spans = validate_spans(&ann, len)?;
            // Zero-length spans are dropped; an annotation left without
            // spans carries no evidence and is dropped with them.
            if !spans.is_empty() {
                validated.push(GoldAnnotation { spans, ..ann });
            }
        }

        let referenced: HashSet<&str> = validated.iter().map(|a| a.doc_id.as_str()).collect();
        for d in documents.iter_mut() {
            d.kind = if referenced.contains(d.doc_id.as_str()) {
                DocumentKind::Gold
            } else {
                DocumentKind::Irrelevant
            };
            if d.kind == DocumentKind::Gold && d.text.is_empty() {
                return Err(CorpusError::EmptyGoldText { doc_id: d.doc_id.clone() });
            }
        }

        let annotated: HashSet<&str> = validated.iter().map(|a| a.query_id.as_str()).collect();
        for q in &queries {
            if !annotated.contains(q.query_id.as_str()) {
                return Err(CorpusError::QueryWithoutAnnotation { query_id: q.query_id.clone() });
            }
        }

        Ok(Corpus {
            documents,
            queries,
            annotations: validated,
            original_chunking,
            doc_index,
            query_index,
        })
    }

    pub fn doc(&self, doc_id: &str) -> Option<&Document> {
        self.doc_index.get(doc_id).map(|&i| &self.documents[i])
    }

    pub fn query(&self, query_id: &str) -> Option<&Query> {
        self.query_index.get(query_id).map(|&i| &self.queries[i])
    }

    pub fn annotations_for_doc<'a>(&'a self, doc_id: &'a str) -> impl Iterator<Item = &'a GoldAnnotation> {
        self.annotations.iter().filter(move |a| a.doc_id == doc_id)
    }

    pub fn annotations_for_query<'a>(&'a self, query_id: &'a str) -> impl Iterator<Item = &'a GoldAnnotation> {
        self.annotations.iter().filter(move |a| a.query_id == query_id)
    }

    pub fn gold_documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.kind == DocumentKind::Gold)
    }

    pub fn irrelevant_documents(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.kind == DocumentKind::Irrelevant)
    }

    /// Per-domain chunk counts of the original chunking. Documents without
    /// a supplied chunking count as a single chunk.
    pub fn original_chunk_counts(&self) -> BTreeMap<String, usize> {
        let mut counts: BTreeMap<String, usize> = BTreeMap::new();
        for d in &self.documents {
            let n = self
                .original_chunking
                .get(&d.doc_id)
                .map(|b| b.len() - 1)
                .unwrap_or(1);
            *counts.entry(d.domain.clone()).or_insert(0) += n;
        }
        counts
    }

    /// The original chunking of a document as character spans. Falls back
    /// to one whole-document chunk when no chunking was supplied.
    pub fn original_chunk_spans(&self, doc_id: &str) -> Vec<CharSpan> {
        match self.original_chunking.get(doc_id) {
            Some(b) => b.windows(2).map(|w| CharSpan::new(w[0], w[1])).collect(),
            None => {
                let len = self.doc(doc_id).map(|d| char_len(&d.text)).unwrap_or(0);
                vec![CharSpan::new(0, len)]
            }
        }
    }
}

fn validate_boundaries(doc_id: &str, boundaries: &[usize], len: usize) -> Result<(), CorpusError> {
    let fail = |message: String| CorpusError::InvalidChunking { doc_id: doc_id.to_string(), message };
    if boundaries.len() < 2 {
        return Err(fail("needs at least two boundaries".into()));
    }
    if boundaries[0] != 0 {
        return Err(fail("first boundary must be 0".into()));
    }
    if *boundaries.last().unwrap() != len {
        return Err(fail(format!(
            "last boundary {} must equal document length {}",
            boundaries.last().unwrap(),
            len
        )));
    }
    if !boundaries.windows(2).all(|w| w[0] < w[1]) {
        return Err(fail("boundaries must be strictly ascending".into()));
    }
    Ok(())
}

fn validate_spans(ann: &GoldAnnotation, doc_len: usize) -> Result<Vec<CharSpan>, CorpusError> {
    let mut spans = Vec::with_capacity(ann.spans.len());
    let mut prev_end: Option<usize> = None;
    for s in &ann.spans {
        if s.start > s.end {
            return Err(CorpusError::SpanNotAscending {
                query_id: ann.query_id.clone(),
                doc_id: ann.doc_id.clone(),
                start: s.start,
                end: s.end,
            });
        }
        if s.end > doc_len {
            return Err(CorpusError::SpanOutOfBounds {
                query_id: ann.query_id.clone(),
                doc_id: ann.doc_id.clone(),
                start: s.start,
                end: s.end,
                len: doc_len,
            });
        }
        if let Some(pe) = prev_end {
            if s.start < pe {
                return Err(CorpusError::SpansOverlap {
                    query_id: ann.query_id.clone(),
                    doc_id: ann.doc_id.clone(),
                });
            }
        }
        prev_end = Some(s.end);
        if !s.is_empty() {
            spans.push(*s);
        }
    }
    Ok(spans)
}

/// Resolve original-chunk ordinals to character spans via the document's
/// chunk boundaries, merging runs of consecutive ordinals into one span.
pub(crate) fn resolve_chunk_indices(
    query_id: &str,
    doc_id: &str,
    indices: &[usize],
    boundaries: Option<&Vec<usize>>,
) -> Result<Vec<CharSpan>, CorpusError> {
    let Some(boundaries) = boundaries else {
        return Err(CorpusError::ChunkIndexWithoutChunking {
            query_id: query_id.to_string(),
            doc_id: doc_id.to_string(),
        });
    };
    let count = boundaries.len() - 1;
    if !indices.windows(2).all(|w| w[0] < w[1]) {
        return Err(CorpusError::ChunkIndicesNotAscending {
            query_id: query_id.to_string(),
            doc_id: doc_id.to_string(),
        });
    }
    let mut spans: Vec<CharSpan> = Vec::new();
    for &i in indices {
        if i >= count {
            return Err(CorpusError::ChunkIndexOutOfRange {
                query_id: query_id.to_string(),
                doc_id: doc_id.to_string(),
                index: i,
                count,
            });
        }
        let span = CharSpan::new(boundaries[i], boundaries[i + 1]);
        match spans.last_mut() {
            Some(last) if last.end == span.start => last.end = span.end,
            _ => spans.push(span),
        }
    }
    Ok(spans)
}
