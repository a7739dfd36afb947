//! Thresher: refine a retrieval corpus with cleaning and chunking agents,
//! then measure what the refinement bought.

mod commands;
mod config;
mod error;
mod providers;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

use commands::pipeline::{PipelineOptions, SynthOptions};
use commands::reports::{EvalOptions, RagOptions, StatsOptions};
use commands::retrieval::{IndexOptions, RerankOptions, RetrieveOptions};
use commands::Ctx;
use config::RunConfig;
use error::CliError;
use thresher_core::pipeline::Variant;

#[derive(Parser)]
#[command(name = "thresher", version, about = "Corpus refinement and retrieval evaluation")]
struct Cli {
    /// Run configuration file.
    #[arg(long, global = true, default_value = "thresher.toml")]
    config: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic corpus with scripted agent responses.
    Synth {
        /// RNG seed for the generated corpus.
        #[arg(long, default_value_t = 7)]
        seed: u64,
        /// Total documents to generate.
        #[arg(long, default_value_t = 100)]
        documents: usize,
        /// How many documents carry gold passages.
        #[arg(long, default_value_t = 40)]
        gold_documents: usize,
        /// Directory the corpus is written to.
        #[arg(long, default_value = "corpus")]
        out_corpus: PathBuf,
        /// Directory the scripted mock responses are written to.
        #[arg(long, default_value = "mocks")]
        out_mocks: PathBuf,
    },
    /// Partition gold documents into protected and cleanable parts.
    Aggregate,
    /// Run cleaning only (heuristic chunking afterwards).
    Clean {
        /// Where to write the chunk store (defaults to paths.chunk_store).
        #[arg(long)]
        chunk_store: Option<PathBuf>,
        /// Directory of canned chat responses keyed by request digest.
        #[arg(long)]
        mock_dir: Option<PathBuf>,
        /// Replay agent responses from a prior run's journal.
        #[arg(long)]
        replay_journal: Option<PathBuf>,
    },
    /// Run agent chunking only, on uncleaned documents.
    Split {
        #[arg(long)]
        chunk_store: Option<PathBuf>,
        #[arg(long)]
        mock_dir: Option<PathBuf>,
        #[arg(long)]
        replay_journal: Option<PathBuf>,
    },
    /// Run the configured pipeline variant end to end.
    Run {
        /// Pipeline variant: full, clean_only, split_only, or none.
        #[arg(long)]
        variant: Option<String>,
        #[arg(long)]
        chunk_store: Option<PathBuf>,
        #[arg(long)]
        mock_dir: Option<PathBuf>,
        #[arg(long)]
        replay_journal: Option<PathBuf>,
    },
    /// Build a retrieval index over a chunk store and report its shape.
    Index {
        /// Chunk store to index (defaults to paths.chunk_store).
        #[arg(long)]
        store: Option<PathBuf>,
        /// Retriever: bm25 or dense.
        #[arg(long)]
        retriever: Option<String>,
    },
    /// Rank every query against a chunk store.
    Retrieve {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        retriever: Option<String>,
        /// Ranking depth (defaults to retrieval.k).
        #[arg(long)]
        k: Option<usize>,
        /// Named query-set variant from paths.query_sets.
        #[arg(long, visible_alias = "query-set")]
        variant: Option<String>,
        /// Output path for the ranked lists.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Rerank saved ranked lists.
    Rerank {
        /// Ranked lists produced by retrieve.
        rankings: PathBuf,
        #[arg(long)]
        store: Option<PathBuf>,
        /// Reranker: cross or llm.
        #[arg(long)]
        reranker: Option<String>,
        #[arg(long)]
        mock_dir: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Evaluate two chunk stores side by side with nDCG@k.
    Eval {
        /// Baseline store (defaults to paths.chunk_store).
        #[arg(long)]
        store_a: Option<PathBuf>,
        /// Comparison store (defaults to paths.chunk_store).
        #[arg(long)]
        store_b: Option<PathBuf>,
        #[arg(long)]
        retriever: Option<String>,
        /// Reranker applied to both stores: none, cross, or llm.
        #[arg(long)]
        reranker: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        query_set: Option<String>,
        #[arg(long)]
        mock_dir: Option<PathBuf>,
    },
    /// Corpus statistics: retention, chunk lengths, score distribution.
    Stats {
        /// Original store (defaults to paths.chunk_store).
        #[arg(long)]
        store_a: Option<PathBuf>,
        /// Refined store (defaults to paths.chunk_store).
        #[arg(long)]
        store_b: Option<PathBuf>,
        /// Also bin query-chunk scores over store B at this width.
        #[arg(long)]
        score_bin_width: Option<f64>,
        #[arg(long)]
        retriever: Option<String>,
    },
    /// Retrieve, generate, and judge answers for every query.
    RagEval {
        #[arg(long)]
        store: Option<PathBuf>,
        #[arg(long)]
        retriever: Option<String>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        query_set: Option<String>,
        #[arg(long)]
        mock_dir: Option<PathBuf>,
    },
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    if let Command::Synth { seed, documents, gold_documents, out_corpus, out_mocks } = &cli.command
    {
        return commands::pipeline::cmd_synth(&SynthOptions {
            seed: *seed,
            documents: *documents,
            gold_documents: *gold_documents,
            out_corpus: out_corpus.clone(),
            out_mocks: out_mocks.clone(),
        });
    }

    let ctx = Ctx { config: RunConfig::load(&cli.config)? };
    match cli.command {
        Command::Synth { .. } => unreachable!("handled above"),
        Command::Aggregate => commands::pipeline::cmd_aggregate(&ctx),
        Command::Clean { chunk_store, mock_dir, replay_journal } => {
            commands::pipeline::cmd_pipeline(
                &ctx,
                &PipelineOptions {
                    forced_variant: Some(Variant::CleanOnly),
                    variant: None,
                    chunk_store,
                    mock_dir,
                    replay_journal,
                },
            )
        }
        Command::Split { chunk_store, mock_dir, replay_journal } => {
            commands::pipeline::cmd_pipeline(
                &ctx,
                &PipelineOptions {
                    forced_variant: Some(Variant::SplitOnly),
                    variant: None,
                    chunk_store,
                    mock_dir,
                    replay_journal,
                },
            )
        }
        Command::Run { variant, chunk_store, mock_dir, replay_journal } => {
            commands::pipeline::cmd_pipeline(
                &ctx,
                &PipelineOptions {
                    forced_variant: None,
                    variant,
                    chunk_store,
                    mock_dir,
                    replay_journal,
                },
            )
        }
        Command::Index { store, retriever } => {
            commands::retrieval::cmd_index(&ctx, &IndexOptions { store, retriever })
        }
        Command::Retrieve { store, retriever, k, variant, out } => commands::retrieval::cmd_retrieve(
            &ctx,
            &RetrieveOptions { store, retriever, k, query_set: variant, out },
        ),
        Command::Rerank { rankings, store, reranker, mock_dir, out } => {
            commands::retrieval::cmd_rerank(
                &ctx,
                &RerankOptions { rankings, store, reranker, mock_dir, out },
            )
        }
        Command::Eval { store_a, store_b, retriever, reranker, k, query_set, mock_dir } => {
            commands::reports::cmd_eval(
                &ctx,
                &EvalOptions { store_a, store_b, retriever, reranker, k, query_set, mock_dir },
            )
        }
        Command::Stats { store_a, store_b, score_bin_width, retriever } => {
            commands::reports::cmd_stats(
                &ctx,
                &StatsOptions { store_a, store_b, score_bin_width, retriever },
            )
        }
        Command::RagEval { store, retriever, k, query_set, mock_dir } => {
            commands::reports::cmd_rag_eval(
                &ctx,
                &RagOptions { store, retriever, k, query_set, mock_dir },
            )
        }
    }
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = dispatch(cli) {
        eprintln!("{}", err.render());
        std::process::exit(err.exit_code());
    }
}
