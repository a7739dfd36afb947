//! Corpus synthesis, aggregation, and pipeline runs.

use std::path::PathBuf;

use thresher_core::agents::Journal;
use thresher_core::corpus::{save_chunk_store, save_corpus};
use thresher_core::pipeline::{run_pipeline, save_manifest, Variant};
use thresher_core::synth;

use super::{ensure_parent, write_text, Ctx};
use crate::error::{io_at, CliError};
use crate::providers;

pub struct SynthOptions {
    pub seed: u64,
    pub documents: usize,
    pub gold_documents: usize,
    pub out_corpus: PathBuf,
    pub out_mocks: PathBuf,
}

pub fn cmd_synth(opts: &SynthOptions) -> Result<(), CliError> {
    if opts.gold_documents > opts.documents {
        return Err(CliError::validation(format!(
            "gold documents ({}) cannot exceed documents ({})",
            opts.gold_documents, opts.documents
        )));
    }
    if opts.documents == 0 {
        return Err(CliError::validation("documents must be at least 1"));
    }
    let generated = synth::generate(&synth::SynthConfig {
        seed: opts.seed,
        documents: opts.documents,
        gold_documents: opts.gold_documents,
        ..synth::SynthConfig::default()
    });
    save_corpus(&generated.corpus, &opts.out_corpus)
        .map_err(|e| CliError::Io(e.to_string()))?;
    generated
        .save_script(&opts.out_mocks)
        .map_err(|e| CliError::Io(format!("{}: {e}", opts.out_mocks.display())))?;
    println!(
        "generated {} documents ({} gold), {} queries; {} scripted responses",
        generated.corpus.documents.len(),
        opts.gold_documents,
        generated.corpus.queries.len(),
        generated.script.len()
    );
    println!("corpus: {}", opts.out_corpus.display());
    println!("mocks: {}", opts.out_mocks.display());
    Ok(())
}

pub fn cmd_aggregate(ctx: &Ctx) -> Result<(), CliError> {
    let corpus = ctx.load_corpus()?;
    let partitions = thresher_core::aggregate::partition_corpus(&corpus);
    let mut gold_parts = 0usize;
    let mut irrelevant_parts = 0usize;
    let mut lines = String::new();
    for (doc_id, partition) in &partitions {
        let parts: Vec<serde_json::Value> = partition
            .parts
            .iter()
            .map(|p| {
                let kind = match p.kind {
                    thresher_core::aggregate::PartKind::Gold => {
                        gold_parts += 1;
                        "gold"
                    }
                    thresher_core::aggregate::PartKind::Irrelevant => {
                        irrelevant_parts += 1;
                        "irrelevant"
                    }
                };
                serde_json::json!({
                    "kind": kind,
                    "start": p.span.start,
                    "end": p.span.end,
                    "queries": p.queries,
                })
            })
            .collect();
        lines.push_str(
            &serde_json::json!({ "doc_id": doc_id, "parts": parts }).to_string(),
        );
        lines.push('\n');
    }
    let path = ctx.config.paths.reports_dir.join("partitions.jsonl");
    write_text(&path, &lines)?;
    println!(
        "partitioned {} gold documents into {} protected and {} cleanable parts",
        partitions.len(),
        gold_parts,
        irrelevant_parts
    );
    println!("partitions: {}", path.display());
    Ok(())
}

pub struct PipelineOptions {
    /// Fixed by the subcommand (clean, split); None for run.
    pub forced_variant: Option<Variant>,
    /// --variant override, only for run.
    pub variant: Option<String>,
    pub chunk_store: Option<PathBuf>,
    pub mock_dir: Option<PathBuf>,
    pub replay_journal: Option<PathBuf>,
}

pub fn cmd_pipeline(ctx: &Ctx, opts: &PipelineOptions) -> Result<(), CliError> {
    let mut pipeline_config = ctx.config.pipeline.clone();
    if let Some(v) = opts.forced_variant {
        pipeline_config.variant = v;
    } else if let Some(flag) = &opts.variant {
        pipeline_config.variant = flag.parse().map_err(CliError::validation)?;
    }
    if let Err(violations) = pipeline_config.validate() {
        return Err(CliError::Validation(
            violations.into_iter().map(|v| format!("pipeline.{v}")).collect(),
        ));
    }

    let corpus = ctx.load_corpus()?;
    let mock_dir = opts.mock_dir.clone().or_else(|| ctx.config.paths.mock_dir.clone());
    // Provider first: a replay journal may be the same file the journal
    // writer is about to truncate, and from_journal reads it eagerly.
    let provider = providers::chat_provider(
        "cleaner",
        &ctx.config.providers.cleaner,
        mock_dir.as_deref(),
        opts.replay_journal.as_deref(),
    )?;
    let journal = match &ctx.config.paths.journal {
        Some(path) => {
            ensure_parent(path)?;
            Some(io_at(path, Journal::create(path))?)
        }
        None => None,
    };
    let cleaner = providers::settings(&ctx.config.providers.cleaner);
    let splitter = providers::settings(&ctx.config.providers.splitter);

    let (chunks, manifest) = run_pipeline(
        &corpus,
        &pipeline_config,
        provider.as_ref(),
        &cleaner,
        &splitter,
        journal.as_ref(),
    );

    let store_path =
        opts.chunk_store.clone().unwrap_or_else(|| ctx.config.paths.chunk_store.clone());
    ensure_parent(&store_path)?;
    save_chunk_store(&chunks, &store_path).map_err(|e| CliError::Io(e.to_string()))?;
    let manifest_path = &ctx.config.paths.manifest;
    ensure_parent(manifest_path)?;
    io_at(manifest_path, save_manifest(&manifest, manifest_path))?;

    println!(
        "variant {}: {} documents in, {} chunks out ({} dropped, {} orphaned queries, {} agent fallbacks, {} retries)",
        pipeline_config.variant,
        manifest.stage_counts.documents_in,
        manifest.stage_counts.chunks_emitted,
        manifest.stage_counts.documents_dropped,
        manifest.orphaned_queries.len(),
        manifest.agent_failures.len(),
        manifest.retries,
    );
    println!("store: {}", store_path.display());
    println!("manifest: {}", manifest_path.display());
    Ok(())
}
