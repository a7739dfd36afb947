//! Run configuration: one TOML file drives every command, with flags
//! overriding individual fields. Relative paths resolve against the
//! working directory.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thresher_core::pipeline::PipelineConfig;

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub paths: Paths,
    pub providers: Providers,
    pub pipeline: PipelineConfig,
    pub retrieval: RetrievalConfig,
    pub seeds: Seeds,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Paths {
    pub corpus_dir: PathBuf,
    pub chunk_store: PathBuf,
    pub manifest: PathBuf,
    pub reports_dir: PathBuf,
    pub ranked_dir: PathBuf,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub journal: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mock_dir: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub embedding_cache: Option<PathBuf>,
    /// Named rewritten query sets: name -> JSONL file.
    pub query_sets: BTreeMap<String, PathBuf>,
}

impl Default for Paths {
    fn default() -> Self {
        Paths {
            corpus_dir: "corpus".into(),
            chunk_store: "out/chunks.jsonl".into(),
            manifest: "out/manifest.json".into(),
            reports_dir: "out/reports".into(),
            ranked_dir: "out/ranked".into(),
            journal: None,
            mock_dir: None,
            embedding_cache: None,
            query_sets: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProviderMode {
    #[default]
    Mock,
    Live,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MockFallbackKind {
    /// Unscripted requests echo their input deterministically.
    #[default]
    Identity,
    /// Unscripted requests fail, exposing script gaps.
    Error,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ProviderConfig {
    pub mode: ProviderMode,
    pub model: String,
    pub temperature: f64,
    pub max_tokens: u32,
    pub mock_fallback: MockFallbackKind,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub base_url: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub api_key_env: Option<String>,
    pub timeout_secs: u64,
}

impl Default for ProviderConfig {
    fn default() -> Self {
        ProviderConfig {
            mode: ProviderMode::Mock,
            model: "mock".into(),
            temperature: 0.0,
            max_tokens: 4096,
            mock_fallback: MockFallbackKind::Identity,
            base_url: None,
            api_key_env: None,
            timeout_secs: 60,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedderConfig {
    pub mode: ProviderMode,
    pub dim: usize,
}

impl Default for EmbedderConfig {
    fn default() -> Self {
        EmbedderConfig { mode: ProviderMode::Mock, dim: 64 }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Providers {
    pub cleaner: ProviderConfig,
    pub splitter: ProviderConfig,
    pub embedder: EmbedderConfig,
    pub reranker: ProviderConfig,
    pub generator: ProviderConfig,
    pub judge: ProviderConfig,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RetrieverKind {
    #[default]
    Bm25,
    Dense,
}

impl RetrieverKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RetrieverKind::Bm25 => "bm25",
            RetrieverKind::Dense => "dense",
        }
    }
}

impl std::str::FromStr for RetrieverKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "bm25" => Ok(RetrieverKind::Bm25),
            "dense" => Ok(RetrieverKind::Dense),
            other => Err(format!("unknown retriever {other:?}; expected bm25 or dense")),
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RerankerKind {
    #[default]
    None,
    Cross,
    Llm,
}

impl RerankerKind {
    pub fn as_str(&self) -> &'static str {
        match self {
            RerankerKind::None => "none",
            RerankerKind::Cross => "cross",
            RerankerKind::Llm => "llm",
        }
    }
}

impl std::str::FromStr for RerankerKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(RerankerKind::None),
            "cross" => Ok(RerankerKind::Cross),
            "llm" => Ok(RerankerKind::Llm),
            other => Err(format!("unknown reranker {other:?}; expected none, cross, or llm")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetrievalConfig {
    pub retriever: RetrieverKind,
    pub k: usize,
    pub bm25_k1: f64,
    pub bm25_b: f64,
    pub reranker: RerankerKind,
    /// Extra provider calls for reranking and RAG evaluation.
    pub max_retries: u32,
}

impl Default for RetrievalConfig {
    fn default() -> Self {
        RetrievalConfig {
            retriever: RetrieverKind::Bm25,
            k: 10,
            bm25_k1: 1.2,
            bm25_b: 0.75,
            reranker: RerankerKind::None,
            max_retries: 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Seeds {
    /// Drives the deterministic mock embedder.
    pub embedding: u64,
}

impl Default for Seeds {
    fn default() -> Self {
        Seeds { embedding: 42 }
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<RunConfig, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            CliError::validation(format!("config {}: {e}", path.display()))
        })?;
        let config: RunConfig = toml::from_str(&text)
            .map_err(|e| CliError::validation(format!("config {}: {e}", path.display())))?;
        config.validate()?;
        Ok(config)
    }

    /// Every violated constraint, not just the first.
    pub fn validate(&self) -> Result<(), CliError> {
        let mut violations = Vec::new();
        if let Err(errors) = self.pipeline.validate() {
            violations.extend(errors.into_iter().map(|e| format!("pipeline.{e}")));
        }
        let r = &self.retrieval;
        if r.k == 0 {
            violations.push("retrieval.k must be at least 1".to_string());
        }
        if r.bm25_k1 <= 0.0 {
            violations.push(format!("retrieval.bm25_k1 must be positive, got {}", r.bm25_k1));
        }
        if !(0.0..=1.0).contains(&r.bm25_b) {
            violations.push(format!("retrieval.bm25_b must be in [0, 1], got {}", r.bm25_b));
        }
        if self.providers.embedder.dim == 0 {
            violations.push("providers.embedder.dim must be at least 1".to_string());
        }
        for (role, p) in [
            ("cleaner", &self.providers.cleaner),
            ("splitter", &self.providers.splitter),
            ("reranker", &self.providers.reranker),
            ("generator", &self.providers.generator),
            ("judge", &self.providers.judge),
        ] {
            if p.mode == ProviderMode::Live {
                if p.base_url.is_none() {
                    violations.push(format!("providers.{role}.base_url is required in live mode"));
                }
                if p.api_key_env.is_none() {
                    violations
                        .push(format!("providers.{role}.api_key_env is required in live mode"));
                }
            }
            if !(0.0..=2.0).contains(&p.temperature) {
                violations.push(format!(
                    "providers.{role}.temperature must be in [0, 2], got {}",
                    p.temperature
                ));
            }
        }
        if self.providers.cleaner.mode != self.providers.splitter.mode {
            violations.push(
                "providers.cleaner and providers.splitter must share a mode: the pipeline uses one provider for both roles"
                    .to_string(),
            );
        }
        for (name, path) in &self.paths.query_sets {
            if name.trim().is_empty() {
                violations.push(format!(
                    "paths.query_sets has an empty set name (file {})",
                    path.display()
                ));
            }
        }
        if violations.is_empty() {
            Ok(())
        } else {
            Err(CliError::Validation(violations))
        }
    }
}
