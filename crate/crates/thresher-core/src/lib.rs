//! Corpus refinement and retrieval evaluation.
//!
//! The crate turns a noisy retrieval corpus into a clean, chunked one and
//! measures what that does to retrieval quality:
//!
//! - [`corpus`]: data model and persistence for documents, queries, gold
//!   annotations, and chunk stores.
//! - [`aggregate`]: partition gold documents into annotated (protected)
//!   and unannotated parts.
//! - [`agents`]: LLM-backed cleaning and splitting with validation,
//!   retries, journaling, and a deterministic mock provider.
//! - [`pipeline`]: the clean-and-split pipeline with ablation variants and
//!   gold-label remapping onto the new chunks.
//! - [`retrieval`]: BM25 and mock-embedding dense search with optional
//!   reranking.
//! - [`evaluation`]: nDCG@k, retention and length statistics, score
//!   distributions, and LLM-judged answer quality.
//! - [`synth`]: deterministic synthetic corpora with injected noise, plus
//!   scripted provider responses for offline end-to-end runs.
//! - [`text`]: char-indexed spans, tokenization, and string search shared
//!   by every stage.

pub mod agents;
pub mod aggregate;
pub mod corpus;
pub mod evaluation;
pub mod pipeline;
pub mod retrieval;
pub mod synth;
pub mod text;
