//! Chunk store persistence: one JSONL record per chunk plus a trailing
//! checksum line, so truncation or tampering is caught on load.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use super::Chunk;
use crate::text::{CharSpan, TokenizerKind};

pub const STORE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("io error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: malformed chunk record: {message}")]
    Malformed {
        path: String,
        line: usize,
        message: String,
    },
    #[error("{path}: missing checksum line")]
    MissingChecksum { path: String },
    #[error("{path}: checksum mismatch (stored {stored}, computed {computed})")]
    ChecksumMismatch {
        path: String,
        stored: String,
        computed: String,
    },
    #[error("{path}: record count mismatch (checksum line says {declared}, found {found})")]
    CountMismatch {
        path: String,
        declared: usize,
        found: usize,
    },
    #[error("{path}: unsupported format version {found} (expected {expected})")]
    Version {
        path: String,
        found: u32,
        expected: u32,
    },
}

#[derive(Debug, Serialize, Deserialize)]
struct ChunkRecord {
    chunk_id: String,
    doc_id: String,
    ordinal: usize,
    label: String,
    text: String,
    gold_for: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    source_span: Option<(usize, usize)>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ChecksumRecord {
    checksum: String,
    format_version: u32,
    records: usize,
}

fn io_err(path: &Path, source: std::io::Error) -> StoreError {
    StoreError::Io { path: path.display().to_string(), source }
}

/// Write chunks as JSONL followed by a checksum line covering every byte
/// that precedes it.
pub fn save_chunk_store(chunks: &[Chunk], path: &Path) -> Result<(), StoreError> {
    let file = File::create(path).map_err(|e| io_err(path, e))?;
    let mut w = BufWriter::new(file);
    let mut hasher = Sha256::new();
    for c in chunks {
        let record = ChunkRecord {
            chunk_id: c.chunk_id.clone(),
            doc_id: c.parent_doc_id.clone(),
            ordinal: c.ordinal,
            label: c.label.clone(),
            text: c.text.clone(),
            gold_for: c.gold_for.iter().cloned().collect(),
            source_span: c.source_span.map(|s| (s.start, s.end)),
        };
        let mut line = serde_json::to_string(&record).map_err(|e| StoreError::Malformed {
            path: path.display().to_string(),
            line: 0,
            message: e.to_string(),
        })?;
        line.push('\n');
        hasher.update(line.as_bytes());
        w.write_all(line.as_bytes()).map_err(|e| io_err(path, e))?;
    }
    let trailer = ChecksumRecord {
        checksum: hex::encode(hasher.finalize()),
        format_version: STORE_FORMAT_VERSION,
        records: chunks.len(),
    };
    let line = serde_json::to_string(&trailer).unwrap();
    writeln!(w, "{line}").map_err(|e| io_err(path, e))?;
    w.flush().map_err(|e| io_err(path, e))
}

/// Load a chunk store, verifying the trailing checksum and record count.
/// Token counts are recomputed with `tokenizer`, not trusted from disk.
pub fn load_chunk_store(path: &Path, tokenizer: TokenizerKind) -> Result<Vec<Chunk>, StoreError> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let reader = BufReader::new(file);
    let display = path.display().to_string();

    let mut lines: Vec<String> = Vec::new();
    for line in reader.lines() {
        lines.push(line.map_err(|e| io_err(path, e))?);
    }
    while matches!(lines.last(), Some(l) if l.is_empty()) {
        lines.pop();
    }
    let Some(trailer_line) = lines.pop() else {
        return Err(StoreError::MissingChecksum { path: display });
    };
    let trailer: ChecksumRecord =
        serde_json::from_str(&trailer_line).map_err(|_| StoreError::MissingChecksum {
            path: display.clone(),
        })?;
    if trailer.format_version != STORE_FORMAT_VERSION {
        return Err(StoreError::Version {
            path: display,
            found: trailer.format_version,
            expected: STORE_FORMAT_VERSION,
        });
    }

    let mut hasher = Sha256::new();
    for l in &lines {
        hasher.update(l.as_bytes());
        hasher.update(b"\n");
    }
    let computed = hex::encode(hasher.finalize());
    if computed != trailer.checksum {
        return Err(StoreError::ChecksumMismatch {
            path: display,
            stored: trailer.checksum,
            computed,
        });
    }
    if trailer.records != lines.len() {
        return Err(StoreError::CountMismatch {
            path: display,
            declared: trailer.records,
            found: lines.len(),
        });
    }

    let mut chunks = Vec::with_capacity(lines.len());
    for (i, l) in lines.iter().enumerate() {
        let record: ChunkRecord =
            serde_json::from_str(l).map_err(|e| StoreError::Malformed {
                path: display.clone(),
                line: i + 1,
                message: e.to_string(),
            })?;
        let token_count = tokenizer.count(&record.text);
        chunks.push(Chunk {
            chunk_id: record.chunk_id,
            parent_doc_id: record.doc_id,
            ordinal: record.ordinal,
            label: record.label,
            text: record.text,
            token_count,
            gold_for: record.gold_for.into_iter().collect::<BTreeSet<_>>(),
            source_span: record.source_span.map(|(s, e)| CharSpan::new(s, e)),
        });
    }
    Ok(chunks)
}
