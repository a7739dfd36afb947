//! Append-only audit log of every provider call: who asked, what was
//! asked, and what came back. A journal doubles as a replay source for the
//! mock provider.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};

use super::provider::ChatRequest;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JournalRecord {
    /// Monotone sequence number in write order.
    pub seq: u64,
    /// Which agent issued the call ("safe_clean", "splitter", ...).
    pub agent: String,
    pub request_digest: String,
    pub request: ChatRequest,
    /// 1-based attempt number for this logical call.
    pub attempt: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub response: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

struct Inner {
    writer: BufWriter<File>,
    seq: u64,
}

/// Thread-safe journal writer. Records are flushed per line so a crashed
/// run still leaves a usable prefix.
pub struct Journal {
    inner: Mutex<Inner>,
}

impl Journal {
    pub fn create(path: &Path) -> std::io::Result<Journal> {
        let file = File::create(path)?;
        Ok(Journal { inner: Mutex::new(Inner { writer: BufWriter::new(file), seq: 0 }) })
    }

    pub fn record(
        &self,
        agent: &str,
        request: &ChatRequest,
        attempt: u32,
        outcome: Result<&str, &str>,
    ) -> std::io::Result<()> {
        let mut inner = self.inner.lock().expect("journal lock poisoned");
        inner.seq += 1;
        let record = JournalRecord {
            seq: inner.seq,
            agent: agent.to_string(),
            request_digest: request.digest(),
            request: request.clone(),
            attempt,
            response: outcome.ok().map(str::to_string),
            error: outcome.err().map(str::to_string),
        };
        let line = serde_json::to_string(&record).expect("journal record serializes");
        writeln!(inner.writer, "{line}")?;
        inner.writer.flush()
    }
}

pub fn read_journal(path: &Path) -> std::io::Result<Vec<JournalRecord>> {
    let reader = BufReader::new(File::open(path)?);
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: JournalRecord = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: malformed journal record: {e}", path.display(), i + 1),
            )
        })?;
        out.push(record);
    }
    Ok(out)
}
