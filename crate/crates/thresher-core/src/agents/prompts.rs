//! Prompt templates for the cleaning and splitting agents, and builders
//! that turn them into chat requests.
//!
//! Template wording is part of the tool's contract: a journaled run can
//! only be replayed if requests are byte-identical, so these strings must
//! not be edited casually.

use thiserror::Error;

use super::provider::{ChatMessage, ChatRequest, Role};
use super::AgentSettings;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PromptError {
    #[error("cannot build a {agent} prompt from empty input")]
    EmptyInput { agent: &'static str },
}

/// Conservative cleaner for annotated material. Output must keep protected
/// spans verbatim; callers validate that separately.
pub const SAFE_CLEAN_TEMPLATE: &str = r#"You are given raw HTML from a Wikipedia page. Your task is to extract the main article content, clean it up, and preserve it as close to the original meaning as possible.
Instructions:
1. Do not rewrite, summarize, or reformat the content.
2. Remove only the following irrelevant elements: navigation bars, sidebars, headers, footers, language links, edit/tool buttons, login links, donation banners, search boxes, and copyright.
3. Keep all meaningful article content, including section titles, paragraphs, lists, citations, and embedded text.
4. If you encounter garbled characters (e.g., ?), try to infer the correct meaning from context; if uncertain, leave unchanged.
5. Output must be valid, clean Markdown only—no extra explanation or commentary.
6. Never remove actual article content or paragraph text.
Raw HTML: {html}"#;

/// Aggressive cleaner for unannotated material. May return an empty line,
/// which callers treat as "drop this part".
pub const FAST_CLEAN_TEMPLATE: &str = r#"You are given raw text (possibly containing HTML). Extract and return only the main article content.
Rules:
1. Remove irrelevant elements (e.g. navbars, sidebars, headers, footers, edit/login links, banners, ads, search boxes, etc.).
2. If there is no main content, return an empty line.
3. Keep all actual article text intact—no rewriting, summarizing, or reformatting.
4. Only output the cleaned main article content (plain text).
Raw TEXT: {html}"#;

/// Semantic splitter. Sent as the system message; the text to split is the
/// user message. Responses label chunks "Chunk A:", "Chunk B:", ...
pub const SPLITTER_SYSTEM: &str = r#"Split the input text into as few coherent, readable chunks as possible, ideally just one. Preserve as much semantic integrity as possible.
Chunking rules:
1. Minimize the number of chunks. Only split when there is a clear and significant shift in topic or structure.
2. Each chunk should be as long as possible while still forming a coherent unit of meaning.
3. Label each chunk in order as "Chunk A:", "Chunk B:", "Chunk C:", etc.
4. If the input contains tables or structured data, summarize them in natural language and include as part of a chunk.
5. Do not modify the original text content except for structured data. You may delete content at the beginning or end, but preserve original wording and structure elsewhere.
Example output:
Chunk A:
This entire chunk stays together because it maintains a consistent topic and logical flow.
Even if it spans several sentences or paragraphs, it is not split unless the topic clearly changes."#;

/// Marker preceding the input in cleaner prompts; the mock provider echoes
/// whatever follows it.
pub const SAFE_CLEAN_INPUT_MARKER: &str = "Raw HTML: ";
pub const FAST_CLEAN_INPUT_MARKER: &str = "Raw TEXT: ";

pub fn build_safe_clean_request(
    settings: &AgentSettings,
    input: &str,
) -> Result<ChatRequest, PromptError> {
    if input.is_empty() {
        return Err(PromptError::EmptyInput { agent: "safe_clean" });
    }
    Ok(ChatRequest {
        model: settings.model.clone(),
        temperature: settings.temperature,
        max_tokens: settings.max_tokens,
        messages: vec![ChatMessage {
            role: Role::User,
            content: SAFE_CLEAN_TEMPLATE.replace("{html}", input),
        }],
    })
}

pub fn build_fast_clean_request(
    settings: &AgentSettings,
    input: &str,
) -> Result<ChatRequest, PromptError> {
    if input.is_empty() {
        return Err(PromptError::EmptyInput { agent: "fast_clean" });
    }
    Ok(ChatRequest {
        model: settings.model.clone(),
        temperature: settings.temperature,
        max_tokens: settings.max_tokens,
        messages: vec![ChatMessage {
            role: Role::User,
            content: FAST_CLEAN_TEMPLATE.replace("{html}", input),
        }],
    })
}

pub fn build_splitter_request(
    settings: &AgentSettings,
    input: &str,
) -> Result<ChatRequest, PromptError> {
    if input.is_empty() {
        return Err(PromptError::EmptyInput { agent: "splitter" });
    }
    Ok(ChatRequest {
        model: settings.model.clone(),
        temperature: settings.temperature,
        max_tokens: settings.max_tokens,
        messages: vec![
            ChatMessage { role: Role::System, content: SPLITTER_SYSTEM.to_string() },
            ChatMessage { role: Role::User, content: input.to_string() },
        ],
    })
}
