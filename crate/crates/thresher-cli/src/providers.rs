//! Provider construction from configuration and flags.

use std::path::Path;
use std::time::Duration;

use thresher_core::agents::{
    AgentSettings, ChatProvider, LiveChatProvider, MockChatProvider, MockFallback,
};
use thresher_core::retrieval::MockEmbeddingProvider;

use crate::config::{EmbedderConfig, MockFallbackKind, ProviderConfig, ProviderMode};
use crate::error::CliError;

pub fn settings(p: &ProviderConfig) -> AgentSettings {
    AgentSettings {
        model: p.model.clone(),
        temperature: p.temperature,
        max_tokens: p.max_tokens,
    }
}

fn fallback(kind: MockFallbackKind) -> MockFallback {
    match kind {
        MockFallbackKind::Identity => MockFallback::Identity,
        MockFallbackKind::Error => MockFallback::Error,
    }
}

/// Build the chat provider for a role. Mock responses come from a replay
/// journal or a canned-response directory when given; anything unscripted
/// hits the configured fallback.
pub fn chat_provider(
    role: &str,
    p: &ProviderConfig,
    mock_dir: Option<&Path>,
    replay_journal: Option<&Path>,
) -> Result<Box<dyn ChatProvider>, CliError> {
    match p.mode {
        ProviderMode::Mock => {
            let fb = fallback(p.mock_fallback);
            let provider = if let Some(journal) = replay_journal {
                MockChatProvider::from_journal(journal, fb)
                    .map_err(|e| CliError::Io(format!("{}: {e}", journal.display())))?
            } else if let Some(dir) = mock_dir {
                MockChatProvider::from_dir(dir, fb)
                    .map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?
            } else {
                MockChatProvider::new(fb)
            };
            Ok(Box::new(provider))
        }
        ProviderMode::Live => {
            let base_url = p.base_url.as_deref().ok_or_else(|| {
                CliError::validation(format!("providers.{role}.base_url is required in live mode"))
            })?;
            let api_key_env = p.api_key_env.as_deref().ok_or_else(|| {
                CliError::validation(format!(
                    "providers.{role}.api_key_env is required in live mode"
                ))
            })?;
            let provider =
                LiveChatProvider::new(base_url, api_key_env, Duration::from_secs(p.timeout_secs))
                    .map_err(|e| CliError::Provider(format!("{role}: {e}")))?;
            Ok(Box::new(provider))
        }
    }
}

pub fn embedder(e: &EmbedderConfig, seed: u64) -> Result<MockEmbeddingProvider, CliError> {
    match e.mode {
        ProviderMode::Mock => Ok(MockEmbeddingProvider::new(seed, e.dim)),
        ProviderMode::Live => Err(CliError::Provider(
            "live embedding providers are not supported; set providers.embedder.mode = \"mock\""
                .to_string(),
        )),
    }
}
