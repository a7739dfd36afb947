//! Second-stage rerankers over a first-stage candidate list.
//!
//! Both rerankers are permutations: they reorder the candidates and never
//! add, drop, or duplicate a chunk. On provider failure they fall back to
//! the input order and flag the fallback, so a broken reranker degrades to
//! the first-stage ranking instead of poisoning it.

use std::collections::BTreeMap;

use crate::agents::{AgentKind, AgentRunner, AgentSettings};
use crate::agents::{ChatMessage, ChatRequest, Role};
use crate::text::Analyzer;

use super::RankedList;

/// What a rerank produced. `fell_back` means the input order was kept.
#[derive(Debug, Clone, PartialEq)]
pub struct RerankOutcome {
    pub list: RankedList,
    pub fell_back: bool,
    pub failure: Option<String>,
}

/// Scores one (query, passage) pair; higher is more relevant.
pub trait CrossScorer: Send + Sync {
    fn score(&self, query: &str, passage: &str) -> Result<f64, String>;
}

/// Mock cross-encoder: the fraction of distinct query terms present in the
/// passage. Deterministic and order-free, which makes tie cases easy to
/// construct in tests.
#[derive(Debug, Clone, Default)]
pub struct WordOverlapScorer {
    analyzer: Analyzer,
}

impl CrossScorer for WordOverlapScorer {
    fn score(&self, query: &str, passage: &str) -> Result<f64, String> {
        let query_terms: std::collections::BTreeSet<String> =
            self.analyzer.analyze(query).into_iter().collect();
        if query_terms.is_empty() {
            return Ok(0.0);
        }
        let passage_terms: std::collections::BTreeSet<String> =
            self.analyzer.analyze(passage).into_iter().collect();
        let hits = query_terms.iter().filter(|t| passage_terms.contains(*t)).count();
        Ok(hits as f64 / query_terms.len() as f64)
    }
}

fn keep_input_order(candidates: &RankedList, failure: String) -> RerankOutcome {
    RerankOutcome { list: candidates.clone(), fell_back: true, failure: Some(failure) }
}

/// Rescore every candidate pairwise and reorder by the new scores,
/// descending. Equal scores keep their first-stage relative order, so the
/// prior ranking breaks ties.
pub fn rerank_cross_encoder(
    scorer: &dyn CrossScorer,
    query: &str,
    candidates: &RankedList,
    texts: &BTreeMap<String, String>,
) -> RerankOutcome {
    let mut scored: Vec<(String, f64)> = Vec::with_capacity(candidates.entries.len());
    for (chunk_id, _) in &candidates.entries {
        let Some(text) = texts.get(chunk_id) else {
            return keep_input_order(candidates, format!("no text for chunk {chunk_id}"));
        };
        match scorer.score(query, text) {
            Ok(s) => scored.push((chunk_id.clone(), s)),
            Err(e) => return keep_input_order(candidates, format!("scorer failed: {e}")),
        }
    }
    // Stable sort on score alone: ties retain first-stage order.
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap_or(std::cmp::Ordering::Equal));
    RerankOutcome {
        list: RankedList { query_id: candidates.query_id.clone(), entries: scored },
        fell_back: false,
        failure: None,
    }
}

fn build_rerank_request(
    settings: &AgentSettings,
    query: &str,
    passages: &[&str],
) -> ChatRequest {
    let mut body = String::new();
    body.push_str(
        "Produce a ranking of the numbered passages by relevance to the query, \
         most relevant first. Respond with the passage numbers as a \
         comma-separated list (for example: 2, 1, 3) and nothing else.\n\n",
    );
    body.push_str(&format!("Query: {query}\n"));
    for (i, passage) in passages.iter().enumerate() {
        body.push_str(&format!("\n[{}] {passage}", i + 1));
    }
    ChatRequest {
        model: settings.model.clone(),
        temperature: settings.temperature,
        max_tokens: settings.max_tokens,
        messages: vec![ChatMessage { role: Role::User, content: body }],
    }
}

/// Extract a candidate ordering from a model response: integers in
/// appearance order, restricted to 1..=n, duplicates dropped (first
/// mention wins), missing numbers appended in prior order. `None` when no
/// valid index appears at all.
pub fn parse_rank_response(response: &str, n: usize) -> Option<Vec<usize>> {
    let mut order = Vec::new();
    let mut seen = vec![false; n + 1];
    let mut digits = String::new();
    for ch in response.chars().chain(std::iter::once(' ')) {
        if ch.is_ascii_digit() {
            digits.push(ch);
            continue;
        }
        if !digits.is_empty() {
            if let Ok(v) = digits.parse::<usize>() {
                if (1..=n).contains(&v) && !seen[v] {
                    seen[v] = true;
                    order.push(v);
                }
            }
            digits.clear();
        }
    }
    if order.is_empty() {
        return None;
    }
    order.extend((1..=n).filter(|&v| !seen[v]));
    Some(order)
}

/// Ask a chat model for a relevance ordering of the candidates. The
/// returned scores are positional (n, n-1, …, 1) since the model emits an
/// order, not calibrated scores. Unparseable responses are retried, then
/// the input order is kept and flagged.
pub fn rerank_llm(
    runner: &AgentRunner,
    settings: &AgentSettings,
    query: &str,
    candidates: &RankedList,
    texts: &BTreeMap<String, String>,
) -> RerankOutcome {
    let n = candidates.entries.len();
    if n == 0 {
        return RerankOutcome { list: candidates.clone(), fell_back: false, failure: None };
    }
    let mut passages = Vec::with_capacity(n);
    for (chunk_id, _) in &candidates.entries {
        let Some(text) = texts.get(chunk_id) else {
            return keep_input_order(candidates, format!("no text for chunk {chunk_id}"));
        };
        passages.push(text.as_str());
    }
    let request = build_rerank_request(settings, query, &passages);
    let (result, _attempts) = runner.complete_validated(AgentKind::Reranker, &request, |resp| {
        parse_rank_response(resp, n)
            .map(|_| ())
            .ok_or_else(|| "no passage number found in response".to_string())
    });
    match result {
        Ok(response) => {
            let order = parse_rank_response(&response, n).expect("validated above");
            let entries = order
                .iter()
                .enumerate()
                .map(|(i, &idx)| (candidates.entries[idx - 1].0.clone(), (n - i) as f64))
                .collect();
            RerankOutcome {
                list: RankedList { query_id: candidates.query_id.clone(), entries },
                fell_back: false,
                failure: None,
            }
        }
        Err(failure) => keep_input_order(candidates, failure),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::agents::{MockChatProvider, MockFallback};
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn list(ids: &[&str]) -> RankedList {
        RankedList {
            query_id: "q".into(),
            entries: ids
                .iter()
                .enumerate()
                .map(|(i, id)| (id.to_string(), (ids.len() - i) as f64))
                .collect(),
        }
    }

    fn texts(pairs: &[(&str, &str)]) -> BTreeMap<String, String> {
        pairs.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
    }

    #[test]
    fn cross_encoder_reorders_by_overlap() {
        let candidates = list(&["c0", "c1", "c2"]);
        let texts = texts(&[
            ("c0", "nothing relevant here"),
            ("c1", "rust ownership and borrowing"),
            ("c2", "ownership only"),
        ]);
        let out =
            rerank_cross_encoder(&WordOverlapScorer::default(), "rust ownership", &candidates, &texts);
        assert!(!out.fell_back);
        let ids: Vec<&str> = out.list.entries.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["c1", "c2", "c0"]);
        assert_eq!(out.list.entries[0].1, 1.0);
        assert_eq!(out.list.entries[2].1, 0.0);
    }

    #[test]
    fn cross_encoder_ties_keep_first_stage_order() {
        // No candidate mentions the query: all scores 0, order preserved.
        let candidates = list(&["cz", "ca", "cm"]);
        let texts = texts(&[("cz", "one"), ("ca", "two"), ("cm", "three")]);
        let out =
            rerank_cross_encoder(&WordOverlapScorer::default(), "unrelated", &candidates, &texts);
        let ids: Vec<&str> = out.list.entries.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["cz", "ca", "cm"], "ties break by prior rank, not chunk id");
    }

    struct FailingScorer;
    impl CrossScorer for FailingScorer {
        fn score(&self, _: &str, _: &str) -> Result<f64, String> {
            Err("model unavailable".into())
        }
    }

    #[test]
    fn cross_encoder_failure_keeps_input_order_and_flags() {
        let candidates = list(&["c0", "c1"]);
        let texts = texts(&[("c0", "a"), ("c1", "b")]);
        let out = rerank_cross_encoder(&FailingScorer, "q", &candidates, &texts);
        assert!(out.fell_back);
        assert_eq!(out.list, candidates);
        assert!(out.failure.as_deref().unwrap().contains("model unavailable"));
    }

    #[test]
    fn parse_rank_response_cases() {
        assert_eq!(parse_rank_response("2, 1, 3", 3), Some(vec![2, 1, 3]));
        assert_eq!(parse_rank_response("2", 3), Some(vec![2, 1, 3]), "missing appended in prior order");
        assert_eq!(parse_rank_response("2, 2, 1", 3), Some(vec![2, 1, 3]), "duplicate dropped");
        assert_eq!(parse_rank_response("Ranking: [3] then [1]", 3), Some(vec![3, 1, 2]));
        assert_eq!(parse_rank_response("garbage", 3), None);
        assert_eq!(parse_rank_response("0 and 42", 3), None, "out-of-range only");
    }

    fn runner_with<'a>(provider: &'a MockChatProvider) -> AgentRunner<'a> {
        AgentRunner::new(provider, None, 1)
    }

    #[test]
    fn llm_rerank_applies_order_with_positional_scores() {
        let settings = AgentSettings::default();
        let candidates = list(&["c0", "c1", "c2"]);
        let texts = texts(&[("c0", "a"), ("c1", "b"), ("c2", "c")]);
        let request = build_rerank_request(&settings, "q", &["a", "b", "c"]);
        let provider = MockChatProvider::new(MockFallback::Error).respond_to(&request, "3, 1, 2");
        let out = rerank_llm(&runner_with(&provider), &settings, "q", &candidates, &texts);
        assert!(!out.fell_back);
        let expect: Vec<(String, f64)> =
            vec![("c2".into(), 3.0), ("c0".into(), 2.0), ("c1".into(), 1.0)];
        assert_eq!(out.list.entries, expect);
    }

    #[test]
    fn llm_rerank_unparseable_falls_back_to_input_order() {
        let settings = AgentSettings::default();
        let candidates = list(&["c0", "c1"]);
        let texts = texts(&[("c0", "a"), ("c1", "b")]);
        let request = build_rerank_request(&settings, "q", &["a", "b"]);
        let provider = MockChatProvider::new(MockFallback::Error).respond_to(&request, "garbage");
        let out = rerank_llm(&runner_with(&provider), &settings, "q", &candidates, &texts);
        assert!(out.fell_back);
        assert_eq!(out.list, candidates);
        assert!(out.failure.is_some());
    }

    #[test]
    fn llm_rerank_identity_mock_keeps_leader() {
        // The identity mock answers "1" to ranking prompts: top stays top,
        // rest keeps prior order.
        let settings = AgentSettings::default();
        let candidates = list(&["c0", "c1", "c2"]);
        let texts = texts(&[("c0", "a"), ("c1", "b"), ("c2", "c")]);
        let provider = MockChatProvider::new(MockFallback::Identity);
        let out = rerank_llm(&runner_with(&provider), &settings, "q", &candidates, &texts);
        assert!(!out.fell_back);
        let ids: Vec<&str> = out.list.entries.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(ids, ["c0", "c1", "c2"]);
    }

    #[test]
    fn empty_candidate_list_is_a_no_op() {
        let settings = AgentSettings::default();
        let candidates = RankedList { query_id: "q".into(), entries: Vec::new() };
        let provider = MockChatProvider::new(MockFallback::Error);
        let out =
            rerank_llm(&runner_with(&provider), &settings, "q", &candidates, &BTreeMap::new());
        assert!(!out.fell_back);
        assert!(out.list.entries.is_empty());
    }

    proptest! {
        /// Both rerankers permute: same chunk-id multiset in and out.
        #[test]
        fn rerankers_preserve_candidate_multiset(
            ids in proptest::collection::btree_set("[a-z]{1,6}", 1..12),
            words in proptest::collection::vec("[a-z]{1,5}", 1..12),
            response in "[ -~]{0,40}",
        ) {
            let ids: Vec<String> = ids.into_iter().collect();
            let candidates = RankedList {
                query_id: "q".into(),
                entries: ids.iter().enumerate()
                    .map(|(i, id)| (id.clone(), (ids.len() - i) as f64))
                    .collect(),
            };
            let texts: BTreeMap<String, String> = ids.iter().enumerate()
                .map(|(i, id)| (id.clone(), words[i % words.len()].clone()))
                .collect();

            let cross = rerank_cross_encoder(
                &WordOverlapScorer::default(), &words[0], &candidates, &texts);
            let mut got: Vec<&String> = cross.list.entries.iter().map(|(id, _)| id).collect();
            got.sort();
            let mut want: Vec<&String> = ids.iter().collect();
            want.sort();
            prop_assert_eq!(&got, &want);

            let settings = AgentSettings::default();
            let passages: Vec<&str> = candidates.entries.iter()
                .map(|(id, _)| texts[id].as_str()).collect();
            let request = build_rerank_request(&settings, "q", &passages);
            let provider = MockChatProvider::new(MockFallback::Error)
                .respond_to(&request, &response);
            let llm = rerank_llm(
                &runner_with(&provider), &settings, "q", &candidates, &texts);
            let mut got: Vec<&String> = llm.list.entries.iter().map(|(id, _)| id).collect();
            got.sort();
            prop_assert_eq!(&got, &want);

            // Scores never increase down the list in either output.
            for w in cross.list.entries.windows(2) {
                prop_assert!(w[0].1 >= w[1].1);
            }
            for w in llm.list.entries.windows(2) {
                prop_assert!(w[0].1 >= w[1].1);
            }
        }
    }

    #[test]
    fn multiset_check_catches_real_sets() {
        // Guard that list() helper produces what proptest assumes.
        let l = list(&["a", "b"]);
        let set: BTreeSet<&str> = l.entries.iter().map(|(id, _)| id.as_str()).collect();
        assert_eq!(set.len(), 2);
    }
}
