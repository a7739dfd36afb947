//! JSONL ingestion and emission for corpora and rewritten query sets.
//!
//! A corpus directory contains `documents.jsonl`, `queries.jsonl`,
//! `annotations.jsonl`, and optionally `chunking.jsonl`. Every parse error
//! is reported with file name and 1-based line number.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{
    resolve_chunk_indices, Corpus, CorpusError, Document, DocumentKind, GoldAnnotation, Query,
    QueryVariant,
};
use crate::text::CharSpan;

/// File names that make up an on-disk corpus directory.
#[derive(Debug, Clone)]
pub struct CorpusFormat {
    pub documents: &'static str,
    pub queries: &'static str,
    pub annotations: &'static str,
    pub chunking: &'static str,
}

impl Default for CorpusFormat {
    fn default() -> Self {
        CorpusFormat {
            documents: "documents.jsonl",
            queries: "queries.jsonl",
            annotations: "annotations.jsonl",
            chunking: "chunking.jsonl",
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct DocumentRecord {
    id: String,
    text: String,
    domain: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct QueryRecord {
    id: String,
    text: String,
    domain: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct AnnotationRecord {
    query_id: String,
    doc_id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    spans: Option<Vec<(usize, usize)>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    chunk_indices: Option<Vec<usize>>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChunkingRecord {
    doc_id: String,
    boundaries: Vec<usize>,
}

#[derive(Debug, Serialize, Deserialize)]
struct RewriteRecord {
    query_id: String,
    text: String,
}

fn io_err(path: &Path, source: std::io::Error) -> CorpusError {
    CorpusError::Io { path: path.display().to_string(), source }
}

/// Load and validate a corpus directory.
pub fn load_corpus(dir: &Path) -> Result<Corpus, CorpusError> {
    load_corpus_with(dir, &CorpusFormat::default())
}

pub fn load_corpus_with(dir: &Path, format: &CorpusFormat) -> Result<Corpus, CorpusError> {
    let doc_records: Vec<DocumentRecord> = read_all(&dir.join(format.documents))?;
    let query_records: Vec<QueryRecord> = read_all(&dir.join(format.queries))?;
    let ann_records: Vec<(usize, AnnotationRecord)> =
        read_all_numbered(&dir.join(format.annotations))?;

    let chunking_path = dir.join(format.chunking);
    let mut original_chunking = BTreeMap::new();
    if chunking_path.exists() {
        let records: Vec<ChunkingRecord> = read_all(&chunking_path)?;
        for r in records {
            if original_chunking.insert(r.doc_id.clone(), r.boundaries).is_some() {
                return Err(CorpusError::DuplicateId { kind: "chunking", id: r.doc_id });
            }
        }
    }

    let documents: Vec<Document> = doc_records
        .into_iter()
        .map(|r| Document {
            doc_id: r.id,
            text: r.text,
            domain: r.domain,
            kind: DocumentKind::Irrelevant,
        })
        .collect();
    let queries: Vec<Query> = query_records
        .into_iter()
        .map(|r| Query {
            query_id: r.id,
            text: r.text,
            domain: r.domain,
            variant: QueryVariant::Original,
        })
        .collect();

    let ann_file = format.annotations;
    let mut annotations = Vec::with_capacity(ann_records.len());
    for (line, r) in ann_records {
        let spans = match (&r.spans, &r.chunk_indices) {
            (Some(spans), None) => {
                spans.iter().map(|&(s, e)| CharSpan::new(s, e)).collect()
            }
            (None, Some(indices)) => resolve_chunk_indices(
                &r.query_id,
                &r.doc_id,
                indices,
                original_chunking.get(&r.doc_id),
            )?,
            (Some(_), Some(_)) => {
                return Err(CorpusError::Malformed {
                    file: ann_file.to_string(),
                    line,
                    message: "record sets both \"spans\" and \"chunk_indices\"".into(),
                })
            }
            (None, None) => {
                return Err(CorpusError::Malformed {
                    file: ann_file.to_string(),
                    line,
                    message: "record needs either \"spans\" or \"chunk_indices\"".into(),
                })
            }
        };
        annotations.push(GoldAnnotation { query_id: r.query_id, doc_id: r.doc_id, spans });
    }

    Corpus::build(documents, queries, annotations, original_chunking)
}

fn read_all<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>, CorpusError> {
    Ok(read_all_numbered(path)?.into_iter().map(|(_, r)| r).collect())
}

fn read_all_numbered<T: serde::de::DeserializeOwned>(
    path: &Path,
) -> Result<Vec<(usize, T)>, CorpusError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string());
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| io_err(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record: T = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            file: name.clone(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push((i + 1, record));
    }
    Ok(out)
}

/// Write a corpus back out in the directory layout `load_corpus` reads.
/// Annotations are always written in span form.
pub fn save_corpus(corpus: &Corpus, dir: &Path) -> Result<(), CorpusError> {
    fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    let format = CorpusFormat::default();

    write_jsonl(
        &dir.join(format.documents),
        corpus.documents.iter().map(|d| DocumentRecord {
            id: d.doc_id.clone(),
            text: d.text.clone(),
            domain: d.domain.clone(),
        }),
    )?;
    write_jsonl(
        &dir.join(format.queries),
        corpus.queries.iter().map(|q| QueryRecord {
            id: q.query_id.clone(),
            text: q.text.clone(),
            domain: q.domain.clone(),
        }),
    )?;
    write_jsonl(
        &dir.join(format.annotations),
        corpus.annotations.iter().map(|a| AnnotationRecord {
            query_id: a.query_id.clone(),
            doc_id: a.doc_id.clone(),
            spans: Some(a.spans.iter().map(|s| (s.start, s.end)).collect()),
            chunk_indices: None,
        }),
    )?;
    if !corpus.original_chunking.is_empty() {
        write_jsonl(
            &dir.join(format.chunking),
            corpus.original_chunking.iter().map(|(doc_id, boundaries)| ChunkingRecord {
                doc_id: doc_id.clone(),
                boundaries: boundaries.clone(),
            }),
        )?;
    }
    Ok(())
}

fn write_jsonl<T: Serialize>(
    path: &Path,
    records: impl Iterator<Item = T>,
) -> Result<(), CorpusError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(&r).map_err(|e| CorpusError::Malformed {
            file: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Load a rewritten query set: same ids as the originals, new text. The
/// returned queries inherit each original's domain and carry the set name
/// as their variant.
pub fn load_query_set(
    corpus: &Corpus,
    name: &str,
    path: &Path,
) -> Result<Vec<Query>, CorpusError> {
    let records: Vec<RewriteRecord> = read_all(path)?;
    let mut out = Vec::with_capacity(records.len());
    let mut seen = std::collections::HashSet::new();
    for r in records {
        if !seen.insert(r.query_id.clone()) {
            return Err(CorpusError::DuplicateId { kind: "query", id: r.query_id });
        }
        let Some(original) = corpus.query(&r.query_id) else {
            return Err(CorpusError::UnknownRewriteQuery {
                variant: name.to_string(),
                query_id: r.query_id,
            });
        };
        if r.text.trim().is_empty() {
            return Err(CorpusError::EmptyRewrite {
                variant: name.to_string(),
                query_id: r.query_id,
            });
        }
        out.push(Query {
            query_id: r.query_id,
            text: r.text,
            domain: original.domain.clone(),
            variant: QueryVariant::Rewrite(name.to_string()),
        });
    }
    Ok(out)
}
