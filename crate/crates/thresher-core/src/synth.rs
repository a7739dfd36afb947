//! Deterministic synthetic corpora for desk-scale experiments.
//!
//! Generated documents carry two kinds of noise by construction:
//! boilerplate lines (navigation, ads, footers) interleaved with body
//! sentences, and fragment noise — the original chunking cuts mid-sentence,
//! including through gold sentences. Alongside the corpus, the generator
//! emits the scripted provider responses an ideal cleaning run would give,
//! so a full pipeline run on the corpus is reproducible offline.

use std::collections::BTreeMap;
use std::path::Path;

use rand::prelude::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::agents::prompts::{
    build_fast_clean_request, build_safe_clean_request, build_splitter_request,
};
use crate::agents::{emit_chunks, AgentSettings, MockChatProvider, MockFallback};
use crate::aggregate::{partition_document, PartKind};
use crate::corpus::{Corpus, Document, DocumentKind, GoldAnnotation, Query, QueryVariant};
use crate::text::{char_len, char_slice, CharSpan, TokenizerKind};

/// Fixed boilerplate inventory; the scripted cleaner strips exactly these.
const BOILERPLATE: &[&str] = &[
    "* [ Home ](/nav/home) * [ About ](/nav/about) * [ Contact ](/nav/contact)",
    "Subscribe to our newsletter for weekly updates and exclusive offers.",
    "Copyright 2024 Example Publishing Group. All rights reserved worldwide.",
    "Advertisement. Click here to learn more about our premium sponsors.",
    "[ ![logo](/static/logo.png) ](/) Menu Toggle navigation Search Login",
    "Share this article: Twitter Facebook LinkedIn Email Print Save",
];

/// Word stock for body sentences.
const VOCAB: &[&str] = &[
    "the", "a", "measured", "values", "rose", "across", "regions", "during",
    "several", "seasons", "while", "observers", "recorded", "steady", "trends",
    "in", "local", "systems", "and", "broader", "networks", "over", "time",
    "with", "gradual", "shifts", "between", "coastal", "inland", "sites",
    "researchers", "compared", "samples", "from", "archives", "against",
    "recent", "surveys", "finding", "consistent", "patterns", "throughout",
];

/// How the original chunking cuts a gold sentence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum GoldCut {
    /// One cut near 40%: the major fragment keeps the label.
    Major,
    /// Two cuts near the thirds: no fragment reaches half, the label is
    /// orphaned until cleaning restores the sentence.
    Shredded,
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub seed: u64,
    pub documents: usize,
    /// Gold documents (one query each); must be ≤ documents.
    pub gold_documents: usize,
    pub domains: Vec<String>,
    /// Settings the scripted responses are keyed against.
    pub settings: AgentSettings,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            seed: 7,
            documents: 100,
            gold_documents: 40,
            domains: [
                "biology", "climate", "economics", "geography", "history", "politics",
                "technology",
            ]
            .iter()
            .map(|s| s.to_string())
            .collect(),
            settings: AgentSettings::default(),
        }
    }
}

/// A generated corpus plus the canned responses that clean it.
pub struct SynthCorpus {
    pub corpus: Corpus,
    /// (request digest, response) pairs covering every agent call a
    /// full-variant pipeline run makes.
    pub script: Vec<(String, String)>,
}

impl SynthCorpus {
    /// Provider preloaded with the script; unscripted requests error.
    pub fn provider(&self) -> MockChatProvider {
        let mut provider = MockChatProvider::new(MockFallback::Error);
        for (digest, response) in &self.script {
            provider.insert(digest.clone(), response.clone());
        }
        provider
    }

    /// Write the script as `{digest}.txt` files readable by
    /// `MockChatProvider::from_dir`.
    pub fn save_script(&self, dir: &Path) -> std::io::Result<()> {
        std::fs::create_dir_all(dir)?;
        for (digest, response) in &self.script {
            std::fs::write(dir.join(format!("{digest}.txt")), response)?;
        }
        Ok(())
    }
}

fn sentence(rng: &mut ChaCha8Rng) -> String {
    let n = rng.random_range(12..=16);
    let mut words: Vec<&str> = (0..n).map(|_| *VOCAB.choose(rng).unwrap()).collect();
    words.push("again.");
    words.join(" ")
}

/// The gold sentence: distinctive keywords the query will repeat.
fn gold_sentence(rng: &mut ChaCha8Rng, keywords: &[String]) -> String {
    let mut words: Vec<String> = Vec::new();
    for kw in keywords {
        words.push(kw.clone());
        words.push(VOCAB.choose(rng).unwrap().to_string());
    }
    words.join(" ")
}

/// Char positions where a cut may fall: the start of every token after the
/// first, within `line` offset by `base`.
fn cut_points(line: &str, base: usize) -> Vec<usize> {
    let mut points = Vec::new();
    let mut in_token = false;
    for (pos, ch) in line.chars().enumerate() {
        if ch.is_whitespace() {
            in_token = false;
        } else if !in_token {
            in_token = true;
            if pos > 0 {
                points.push(base + pos);
            }
        }
    }
    points
}

fn nearest(points: &[usize], want: usize) -> usize {
    *points
        .iter()
        .min_by_key(|p| p.abs_diff(want))
        .expect("gold sentence has multiple tokens")
}

/// Boundaries that fragment the document: a cut roughly every
/// `30..=60` tokens, ignoring line structure, plus controlled cuts
/// through each gold sentence.
fn noisy_boundaries(
    text: &str,
    gold: Option<(CharSpan, GoldCut)>,
    rng: &mut ChaCha8Rng,
) -> Vec<usize> {
    let token_starts = cut_points(text, 0);
    let mut cuts: Vec<usize> = Vec::new();
    let mut since_last = 0usize;
    let mut target = rng.random_range(30..=60);
    for start in &token_starts {
        since_last += 1;
        if since_last >= target {
            cuts.push(*start);
            since_last = 0;
            target = rng.random_range(30..=60);
        }
    }

    if let Some((span, cut)) = gold {
        cuts.retain(|c| *c <= span.start || *c >= span.end);
        let inside: Vec<usize> = token_starts
            .iter()
            .copied()
            .filter(|p| *p > span.start && *p < span.end)
            .collect();
        let len = span.len();
        match cut {
            GoldCut::Major => cuts.push(nearest(&inside, span.start + len * 2 / 5)),
            GoldCut::Shredded => {
                cuts.push(nearest(&inside, span.start + len / 3));
                cuts.push(nearest(&inside, span.start + len * 2 / 3));
            }
        }
        cuts.sort_unstable();
        cuts.dedup();
        // The construction must deliver what it promises: exactly one
        // fragment at or above half for Major, none for Shredded.
        let mut edges = vec![span.start];
        edges.extend(cuts.iter().copied().filter(|c| *c > span.start && *c < span.end));
        edges.push(span.end);
        let halves = edges
            .windows(2)
            .filter(|w| (w[1] - w[0]) * 2 >= len)
            .count();
        match cut {
            GoldCut::Major => assert_eq!(halves, 1, "major cut must leave one dominant fragment"),
            GoldCut::Shredded => assert_eq!(halves, 0, "shredded sentence must have no dominant fragment"),
        }
    }

    cuts.sort_unstable();
    cuts.dedup();
    let mut boundaries = vec![0];
    boundaries.extend(cuts.into_iter().filter(|c| *c > 0 && *c < char_len(text)));
    boundaries.push(char_len(text));
    boundaries
}

/// Strip boilerplate lines from a part and rejoin what remains.
fn strip_boilerplate(part: &str) -> String {
    part.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !BOILERPLATE.contains(l))
        .collect::<Vec<_>>()
        .join("\n")
}

/// Pack lines into chunks of at least `floor` tokens, folding a short
/// remainder into the previous chunk so no small chunk is emitted.
fn pack_lines(text: &str, floor: usize) -> Vec<String> {
    let tokenizer = TokenizerKind::Whitespace;
    let mut chunks: Vec<Vec<&str>> = Vec::new();
    let mut current: Vec<&str> = Vec::new();
    let mut tokens = 0usize;
    for line in text.lines() {
        current.push(line);
        tokens += tokenizer.count(line);
        if tokens >= floor {
            chunks.push(std::mem::take(&mut current));
            tokens = 0;
        }
    }
    if !current.is_empty() {
        if let Some(last) = chunks.last_mut() {
            last.append(&mut current);
        } else {
            chunks.push(current);
        }
    }
    chunks.into_iter().map(|lines| lines.join("\n")).collect()
}

/// Generate the corpus and its cleaning script.
pub fn generate(config: &SynthConfig) -> SynthCorpus {
    assert!(config.gold_documents <= config.documents);
    assert!(!config.domains.is_empty());
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let tokenizer = TokenizerKind::Whitespace;

    let mut documents = Vec::new();
    let mut queries = Vec::new();
    let mut annotations = Vec::new();
    let mut original_chunking = BTreeMap::new();
    let mut script: Vec<(String, String)> = Vec::new();

    for i in 0..config.documents {
        let doc_id = format!("doc{i:03}");
        let domain = config.domains[i % config.domains.len()].clone();
        let gold = i < config.gold_documents;

        // Body sentences with boilerplate interleaved every third line.
        let n_sentences = rng.random_range(14..=20);
        let gold_line_index = if gold { n_sentences / 2 } else { usize::MAX };
        let keywords: Vec<String> = (0..6).map(|j| format!("kw{i}x{j}")).collect();
        let mut lines: Vec<String> = vec![BOILERPLATE[i % BOILERPLATE.len()].to_string()];
        let mut gold_line: Option<String> = None;
        for s in 0..n_sentences {
            let line = if s == gold_line_index {
                let g = gold_sentence(&mut rng, &keywords);
                gold_line = Some(g.clone());
                g
            } else {
                sentence(&mut rng)
            };
            lines.push(line);
            if s % 3 == 2 {
                lines.push(BOILERPLATE.choose(&mut rng).unwrap().to_string());
            }
        }
        lines.push(BOILERPLATE[(i + 3) % BOILERPLATE.len()].to_string());
        let text = lines.join("\n");

        let gold_info = gold_line.as_ref().map(|g| {
            let start = text.find(g.as_str()).expect("gold line present");
            // Synthetic text is ASCII, so byte offsets equal char offsets.
            let span = CharSpan::new(start, start + char_len(g));
            let cut = if i % 2 == 0 { GoldCut::Major } else { GoldCut::Shredded };
            (span, cut)
        });

        let boundaries = noisy_boundaries(&text, gold_info, &mut rng);
        original_chunking.insert(doc_id.clone(), boundaries);

        let document = Document {
            doc_id: doc_id.clone(),
            text: text.clone(),
            domain: domain.clone(),
            kind: DocumentKind::Irrelevant,
        };

        // Script the cleaning calls and replay the reconstruction the
        // pipeline will perform, so the splitter script keys match.
        let mut cleaned_parts: Vec<String> = Vec::new();
        if let Some((span, _)) = gold_info {
            let query_id = format!("q{i:03}");
            let annotation = GoldAnnotation {
                query_id: query_id.clone(),
                doc_id: doc_id.clone(),
                spans: vec![span],
            };
            let partition = partition_document(&document, &[&annotation]);
            for part in &partition.parts {
                let part_text = char_slice(&text, part.span);
                match part.kind {
                    PartKind::Gold => {
                        let request =
                            build_safe_clean_request(&config.settings, part_text).unwrap();
                        script.push((request.digest(), part_text.to_string()));
                        cleaned_parts.push(part_text.to_string());
                    }
                    PartKind::Irrelevant => {
                        let cleaned = strip_boilerplate(part_text);
                        let request =
                            build_fast_clean_request(&config.settings, part_text).unwrap();
                        script.push((request.digest(), cleaned.clone()));
                        if !cleaned.is_empty() {
                            cleaned_parts.push(cleaned);
                        }
                    }
                }
            }
            queries.push(Query {
                query_id: query_id.clone(),
                text: keywords.join(" "),
                domain: domain.clone(),
                variant: QueryVariant::Original,
            });
            annotations.push(annotation);
        } else {
            let cleaned = strip_boilerplate(&text);
            let request = build_fast_clean_request(&config.settings, &text).unwrap();
            script.push((request.digest(), cleaned.clone()));
            if !cleaned.is_empty() {
                cleaned_parts.push(cleaned);
            }
        }

        let reconstruction = cleaned_parts.join("\n");
        if !reconstruction.trim().is_empty() {
            let chunks = pack_lines(&reconstruction, 110);
            debug_assert!(chunks.iter().all(|c| tokenizer.count(c) >= 100));
            let request = build_splitter_request(&config.settings, &reconstruction).unwrap();
            script.push((request.digest(), emit_chunks(chunks.iter().map(String::as_str))));
        }

        documents.push(document);
    }

    let corpus = Corpus::build(documents, queries, annotations, original_chunking)
        .expect("generated corpus is valid");
    SynthCorpus { corpus, script }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::{gold_map, length_histogram, summarize_ndcg};
    use crate::pipeline::{run_pipeline, PipelineConfig, Variant};
    use crate::retrieval::{build_dense_index, EmbeddingCache, MockEmbeddingProvider};

    fn small() -> SynthConfig {
        SynthConfig { documents: 30, gold_documents: 12, ..SynthConfig::default() }
    }

    #[test]
    fn generation_is_deterministic() {
        let a = generate(&small());
        let b = generate(&small());
        assert_eq!(a.corpus, b.corpus);
        assert_eq!(a.script, b.script);
    }

    #[test]
    fn noisy_chunking_fragments_and_cleaning_restores() {
        let synth = generate(&small());
        let provider = synth.provider();
        let settings = AgentSettings::default();

        let (noisy, _) = run_pipeline(
            &synth.corpus,
            &PipelineConfig { variant: Variant::None, ..PipelineConfig::default() },
            &provider,
            &settings,
            &settings,
            None,
        );
        let (clean, manifest) = run_pipeline(
            &synth.corpus,
            &PipelineConfig { variant: Variant::Full, ..PipelineConfig::default() },
            &provider,
            &settings,
            &settings,
            None,
        );

        // Nothing fell back: the script covered every call.
        assert!(manifest.agent_failures.is_empty(), "{:?}", manifest.agent_failures);
        assert_eq!(manifest.gold_spans.intact, 12, "every gold sentence survives cleaning");
        assert!(manifest.orphaned_queries.is_empty());

        // Fragment noise: every noisy chunk is small, cleaned ones are not.
        let noisy_hist =
            length_histogram(&noisy.iter().map(|c| c.token_count).collect::<Vec<_>>(), None);
        let clean_hist =
            length_histogram(&clean.iter().map(|c| c.token_count).collect::<Vec<_>>(), None);
        assert!(noisy_hist.sub_100_fraction >= 0.20);
        assert!(clean_hist.sub_100_fraction < 0.05);

        // Boilerplate is gone from the cleaned store.
        assert!(noisy.iter().any(|c| c.text.contains("Subscribe to our newsletter")));
        assert!(!clean.iter().any(|c| c.text.contains("Subscribe to our newsletter")));

        // Shredded gold sentences orphan their queries in the noisy store.
        let noisy_gold = gold_map(&noisy);
        let orphaned = synth
            .corpus
            .queries
            .iter()
            .filter(|q| !noisy_gold.contains_key(&q.query_id))
            .count();
        assert_eq!(orphaned, 6, "half the gold sentences are shredded");
    }

    #[test]
    fn dense_ndcg_improves_on_cleaned_store() {
        let synth = generate(&small());
        let provider = synth.provider();
        let settings = AgentSettings::default();
        let embedder = MockEmbeddingProvider::new(11, 64);

        let mut report = |variant: Variant| {
            let (chunks, _) = run_pipeline(
                &synth.corpus,
                &PipelineConfig { variant, ..PipelineConfig::default() },
                &provider,
                &settings,
                &settings,
                None,
            );
            let mut cache = EmbeddingCache::default();
            let index = build_dense_index(&embedder, &mut cache, &chunks, 2).unwrap();
            let rankings: BTreeMap<String, crate::retrieval::RankedList> = synth
                .corpus
                .queries
                .iter()
                .map(|q| {
                    let list = index
                        .search(&embedder, &mut cache, &q.query_id, &q.text, 10, 2)
                        .unwrap();
                    (q.query_id.clone(), list)
                })
                .collect();
            let queries: Vec<(&str, &str)> = synth
                .corpus
                .queries
                .iter()
                .map(|q| (q.query_id.as_str(), q.domain.as_str()))
                .collect();
            summarize_ndcg(&queries, &gold_map(&chunks), &rankings, 10)
        };

        let noisy = report(Variant::None);
        let clean = report(Variant::Full);
        assert!(
            clean.average > noisy.average,
            "cleaned {} must beat noisy {}",
            clean.average,
            noisy.average
        );
        assert_eq!(clean.no_gold_queries, 0);
        assert!(noisy.no_gold_queries >= 6);
    }

    #[test]
    fn script_round_trips_through_directory() {
        let synth = generate(&SynthConfig { documents: 6, gold_documents: 2, ..small() });
        let dir = tempfile::tempdir().unwrap();
        synth.save_script(dir.path()).unwrap();
        let provider = MockChatProvider::from_dir(dir.path(), MockFallback::Error).unwrap();
        assert_eq!(provider.canned_len(), synth.script.len());
    }
}
