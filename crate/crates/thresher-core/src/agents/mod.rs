//! LLM agents for cleaning and splitting: prompt construction, provider
//! abstraction, output validation, bounded retries, and call journaling.
//!
//! Every agent fails open: when the provider keeps erroring or its output
//! keeps failing validation, the caller gets a conservative result (the
//! original text, or one whole-input chunk) instead of an error, and the
//! outcome says so.

pub mod journal;
pub mod labels;
pub mod prompts;
pub mod provider;

pub use journal::{read_journal, Journal, JournalRecord};
pub use labels::{emit_chunks, label_for_index, labels_sequential, parse_chunk_labels, LabeledChunk};
pub use provider::{
    ChatMessage, ChatProvider, ChatRequest, LiveChatProvider, MockChatProvider, MockFallback,
    ProviderError, Role,
};

use serde::{Deserialize, Serialize};

use crate::text::{non_whitespace_chars, normalize_newlines};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AgentKind {
    SafeClean,
    FastClean,
    Splitter,
    Generator,
    Judge,
    Reranker,
}

impl AgentKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            AgentKind::SafeClean => "safe_clean",
            AgentKind::FastClean => "fast_clean",
            AgentKind::Splitter => "splitter",
            AgentKind::Generator => "generator",
            AgentKind::Judge => "judge",
            AgentKind::Reranker => "reranker",
        }
    }
}

/// Per-agent chat parameters. The model name is plain configuration; no
/// behavior branches on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AgentSettings {
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
}

impl Default for AgentSettings {
    fn default() -> Self {
        AgentSettings { model: "mock".into(), temperature: 0.0, max_tokens: 4096 }
    }
}

/// Issues validated provider calls with bounded retries, journaling every
/// attempt.
pub struct AgentRunner<'a> {
    provider: &'a dyn ChatProvider,
    journal: Option<&'a Journal>,
    /// Retries after the first call; a call budget of `max_retries + 1`.
    pub max_retries: u32,
}

/// What a validated call produced. `fell_back` means the budget ran out
/// and the caller substituted its conservative default.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AgentOutcome<T> {
    pub value: T,
    pub attempts: u32,
    pub fell_back: bool,
    /// Last provider error or validation complaint when falling back.
    pub failure: Option<String>,
}

impl<'a> AgentRunner<'a> {
    pub fn new(provider: &'a dyn ChatProvider, journal: Option<&'a Journal>, max_retries: u32) -> Self {
        AgentRunner { provider, journal, max_retries }
    }

    /// Call the provider until `validate` accepts the response or the
    /// budget is exhausted. Returns the accepted response, or the last
    /// failure message.
    pub(crate) fn complete_validated(
        &self,
        kind: AgentKind,
        request: &ChatRequest,
        mut validate: impl FnMut(&str) -> Result<(), String>,
    ) -> (Result<String, String>, u32) {
        let budget = self.max_retries + 1;
        let mut last_failure = String::new();
        for attempt in 1..=budget {
            match self.provider.complete(request) {
                Ok(response) => match validate(&response) {
                    Ok(()) => {
                        self.journal_entry(kind, request, attempt, Ok(&response));
                        return (Ok(response), attempt);
                    }
                    Err(reason) => {
                        self.journal_entry(kind, request, attempt, Ok(&response));
                        last_failure = format!("validation failed: {reason}");
                    }
                },
                Err(e) => {
                    last_failure = e.to_string();
                    self.journal_entry(kind, request, attempt, Err(&last_failure));
                }
            }
        }
        (Err(last_failure), budget)
    }

    fn journal_entry(&self, kind: AgentKind, request: &ChatRequest, attempt: u32, outcome: Result<&str, &str>) {
        if let Some(journal) = self.journal {
            // Journal IO failure should not abort a pipeline run.
            let _ = journal.record(kind.as_str(), request, attempt, outcome);
        }
    }
}

/// A cleaned piece of text must still contain each protected span verbatim.
/// Only line endings are normalized before comparison.
pub fn validate_protected_spans(output: &str, protected: &[&str]) -> Result<(), String> {
    let normalized = normalize_newlines(output);
    for span in protected {
        let needle = normalize_newlines(span);
        if !normalized.contains(&needle) {
            let preview: String = needle.chars().take(60).collect();
            return Err(format!("protected span no longer appears verbatim: {preview:?}"));
        }
    }
    Ok(())
}

fn pass_through(input: &str, failure: String) -> AgentOutcome<String> {
    AgentOutcome { value: input.to_string(), attempts: 0, fell_back: true, failure: Some(failure) }
}

/// Conservative clean. `protected` spans must survive verbatim; on
/// persistent failure the input is passed through unchanged.
pub fn run_safe_clean(
    runner: &AgentRunner,
    settings: &AgentSettings,
    input: &str,
    protected: &[&str],
) -> AgentOutcome<String> {
    let request = match prompts::build_safe_clean_request(settings, input) {
        Ok(r) => r,
        Err(e) => return pass_through(input, e.to_string()),
    };
    let validate = |response: &str| {
        if response.trim().is_empty() {
            return Err("empty response from conservative cleaner".to_string());
        }
        validate_protected_spans(response, protected)
    };
    let (result, attempts) = runner.complete_validated(AgentKind::SafeClean, &request, validate);
    match result {
        Ok(text) => AgentOutcome { value: text, attempts, fell_back: false, failure: None },
        Err(failure) => AgentOutcome {
            value: input.to_string(),
            attempts,
            fell_back: true,
            failure: Some(failure),
        },
    }
}

/// Aggressive clean, output trimmed of boundary whitespace. An empty
/// response is a legitimate "nothing worth keeping" answer; provider
/// failure passes the input through unchanged.
pub fn run_fast_clean(
    runner: &AgentRunner,
    settings: &AgentSettings,
    input: &str,
) -> AgentOutcome<String> {
    let request = match prompts::build_fast_clean_request(settings, input) {
        Ok(r) => r,
        Err(e) => return pass_through(input, e.to_string()),
    };
    let (result, attempts) =
        runner.complete_validated(AgentKind::FastClean, &request, |_| Ok(()));
    match result {
        Ok(text) => AgentOutcome {
            value: text.trim().to_string(),
            attempts,
            fell_back: false,
            failure: None,
        },
        Err(failure) => AgentOutcome {
            value: input.to_string(),
            attempts,
            fell_back: true,
            failure: Some(failure),
        },
    }
}

/// How much of the input's non-whitespace text the splitter must return.
pub const DEFAULT_COVERAGE_FLOOR: f64 = 0.80;

/// Split text into labeled chunks. Validation requires labels A, B, C...
/// in order and enough of the input preserved; empty-bodied chunks are
/// dropped rather than rejected. On persistent failure the whole input
/// becomes one chunk.
pub fn run_splitter(
    runner: &AgentRunner,
    settings: &AgentSettings,
    input: &str,
    coverage_floor: f64,
) -> AgentOutcome<Vec<String>> {
    let request = match prompts::build_splitter_request(settings, input) {
        Ok(r) => r,
        Err(e) => {
            return AgentOutcome {
                value: vec![input.to_string()],
                attempts: 0,
                fell_back: true,
                failure: Some(e.to_string()),
            }
        }
    };
    let input_mass = non_whitespace_chars(input);
    let validate = |response: &str| {
        let chunks = parse_chunk_labels(response);
        if chunks.is_empty() {
            return Err("no \"Chunk A:\" marker found".to_string());
        }
        if !labels_sequential(&chunks) {
            let labels: Vec<&str> = chunks.iter().map(|c| c.label.as_str()).collect();
            return Err(format!("labels not sequential from A: {labels:?}"));
        }
        if chunks.iter().all(|c| c.text.trim().is_empty()) {
            return Err("every chunk body is empty".to_string());
        }
        if input_mass > 0 {
            let kept: usize = chunks.iter().map(|c| non_whitespace_chars(&c.text)).sum();
            let coverage = kept as f64 / input_mass as f64;
            if coverage < coverage_floor {
                return Err(format!(
                    "chunks cover {coverage:.3} of input non-whitespace, below floor {coverage_floor:.3}"
                ));
            }
        }
        Ok(())
    };
    let (result, attempts) = runner.complete_validated(AgentKind::Splitter, &request, validate);
    match result {
        Ok(response) => AgentOutcome {
            value: parse_chunk_labels(&response)
                .into_iter()
                .filter(|c| !c.text.trim().is_empty())
                .map(|c| c.text)
                .collect(),
            attempts,
            fell_back: false,
            failure: None,
        },
        Err(failure) => AgentOutcome {
            value: vec![input.to_string()],
            attempts,
            fell_back: true,
            failure: Some(failure),
        },
    }
}
