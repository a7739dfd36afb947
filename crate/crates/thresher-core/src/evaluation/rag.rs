//! End-to-end RAG scoring: retrieve evidence, generate an answer, judge
//! it on a 0–100 rubric.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::agents::{AgentKind, AgentRunner, AgentSettings};
use crate::agents::{ChatMessage, ChatRequest, Role};

/// Baked-in prompt templates. Versioned by filename so runs can pin the
/// exact rubric they were scored with.
pub const GENERATOR_PROMPT_V1: &str = include_str!("prompts/generator_v1.txt");
pub const JUDGE_PROMPT_V1: &str = include_str!("prompts/judge_v1.txt");
pub const PROMPT_VERSION: &str = "v1";

#[derive(Debug, Error, PartialEq)]
pub enum RagError {
    #[error("{skipped} of {total} queries skipped, over the 10% budget")]
    TooManySkips { skipped: usize, total: usize },
}

/// A query to push through the retrieve→generate→judge loop.
#[derive(Debug, Clone)]
pub struct RagQuery {
    pub query_id: String,
    pub domain: String,
    pub text: String,
}

/// One judged answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagItem {
    pub query_id: String,
    pub domain: String,
    /// The first integer in the judge response, before clamping.
    pub raw_score: i64,
    pub score: u8,
    pub clamped: bool,
}

/// A query that produced no score, and why.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SkippedQuery {
    pub query_id: String,
    pub stage: String,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RagReport {
    pub prompt_version: String,
    pub items: Vec<RagItem>,
    pub skipped: Vec<SkippedQuery>,
    /// Mean judge score per domain, over scored queries only.
    pub per_domain: BTreeMap<String, f64>,
    /// Mean of the per-domain means.
    pub mean: f64,
}

/// First integer in `s`, honoring an immediately preceding minus sign.
pub fn first_integer(s: &str) -> Option<i64> {
    let bytes = s.as_bytes();
    let mut i = 0;
    while i < bytes.len() {
        if bytes[i].is_ascii_digit() {
            let negative = i > 0 && bytes[i - 1] == b'-';
            let start = i;
            while i < bytes.len() && bytes[i].is_ascii_digit() {
                i += 1;
            }
            let digits = &s[start..i];
            let value: i64 = digits.parse().ok()?;
            return Some(if negative { -value } else { value });
        }
        i += 1;
    }
    None
}

fn single_user_request(settings: &AgentSettings, content: String) -> ChatRequest {
    ChatRequest {
        model: settings.model.clone(),
        temperature: settings.temperature,
        max_tokens: settings.max_tokens,
        messages: vec![ChatMessage { role: Role::User, content }],
    }
}

fn numbered_context(evidence: &[String]) -> String {
    evidence
        .iter()
        .enumerate()
        .map(|(i, text)| format!("[{}] {text}", i + 1))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Run the three-stage loop over every query. `retrieve` returns the
/// evidence texts for a query (already cut to top-k) or a failure reason.
/// Any stage failing skips the query with a flag; more than 10% skips
/// fails the whole run.
pub fn rag_evaluate(
    generator: &AgentRunner,
    generator_settings: &AgentSettings,
    judge: &AgentRunner,
    judge_settings: &AgentSettings,
    queries: &[RagQuery],
    mut retrieve: impl FnMut(&RagQuery) -> Result<Vec<String>, String>,
) -> Result<RagReport, RagError> {
    let mut items = Vec::new();
    let mut skipped = Vec::new();
    for query in queries {
        let skip = |stage: &str, reason: String| SkippedQuery {
            query_id: query.query_id.clone(),
            stage: stage.into(),
            reason,
        };

        let evidence = match retrieve(query) {
            Ok(e) => e,
            Err(reason) => {
                skipped.push(skip("retrieve", reason));
                continue;
            }
        };
        let context = numbered_context(&evidence);

        let gen_prompt = GENERATOR_PROMPT_V1
            .replace("{query}", &query.text)
            .replace("{context}", &context);
        let gen_request = single_user_request(generator_settings, gen_prompt);
        let (answer, _) =
            generator.complete_validated(AgentKind::Generator, &gen_request, |resp| {
                if resp.trim().is_empty() {
                    Err("empty answer".into())
                } else {
                    Ok(())
                }
            });
        let answer = match answer {
            Ok(a) => a,
            Err(reason) => {
                skipped.push(skip("generate", reason));
                continue;
            }
        };

        let judge_prompt = JUDGE_PROMPT_V1
            .replace("{query}", &query.text)
            .replace("{context}", &context)
            .replace("{answer}", &answer);
        let judge_request = single_user_request(judge_settings, judge_prompt);
        let (verdict, _) = judge.complete_validated(AgentKind::Judge, &judge_request, |resp| {
            first_integer(resp).map(|_| ()).ok_or_else(|| "no integer in response".to_string())
        });
        let verdict = match verdict {
            Ok(v) => v,
            Err(reason) => {
                skipped.push(skip("judge", reason));
                continue;
            }
        };

        let raw = first_integer(&verdict).expect("validated above");
        let score = raw.clamp(0, 100) as u8;
        items.push(RagItem {
            query_id: query.query_id.clone(),
            domain: query.domain.clone(),
            raw_score: raw,
            score,
            clamped: i64::from(score) != raw,
        });
    }

    let total = queries.len();
    if skipped.len() * 10 > total {
        return Err(RagError::TooManySkips { skipped: skipped.len(), total });
    }

    let mut sums: BTreeMap<String, (f64, u64)> = BTreeMap::new();
    for item in &items {
        let entry = sums.entry(item.domain.clone()).or_insert((0.0, 0));
        entry.0 += item.score as f64;
        entry.1 += 1;
    }
    let per_domain: BTreeMap<String, f64> =
        sums.into_iter().map(|(d, (sum, n))| (d, sum / n as f64)).collect();
    let mean = if per_domain.is_empty() {
        0.0
    } else {
        per_domain.values().sum::<f64>() / per_domain.len() as f64
    };

    Ok(RagReport {
        prompt_version: PROMPT_VERSION.into(),
        items,
        skipped,
        per_domain,
        mean,
    })
}
