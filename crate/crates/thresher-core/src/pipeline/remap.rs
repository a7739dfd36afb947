//! Transfer gold labels from document spans onto pipeline-produced
//! chunks.
//!
//! A chunk becomes gold for a query when it holds at least a threshold
//! fraction of one of the query's verbatim-surviving gold spans. When both
//! the chunk and the span carry positions in the cleaned document the
//! fraction is exact range overlap; otherwise it falls back to the longest
//! common substring against the span text.

use crate::corpus::Chunk;
use crate::text::{char_len, longest_common_substring, CharSpan};

use super::manifest::{GoldSpanAccounting, SpanFlag};

/// A gold span that survived cleaning verbatim, with its position in the
/// cleaned document when one could be established.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LocatedGoldSpan {
    pub query_id: String,
    pub doc_id: String,
    /// Position in the original document.
    pub original: CharSpan,
    /// The span's text (identical in original and cleaned document).
    pub text: String,
    /// Position in the cleaned document; None when the span could not be
    /// located (it then counts as lost).
    pub cleaned: Option<CharSpan>,
}

impl LocatedGoldSpan {
    fn flag(&self) -> SpanFlag {
        SpanFlag {
            query_id: self.query_id.clone(),
            doc_id: self.doc_id.clone(),
            start: self.original.start,
            end: self.original.end,
        }
    }
}

/// Fill `gold_for` on every chunk and account for every span. Chunks are
/// only matched against spans of their own parent document.
pub fn remap_gold_labels(
    chunks: &mut [Chunk],
    spans: &[LocatedGoldSpan],
    threshold: f64,
) -> GoldSpanAccounting {
    assert!(threshold > 0.0 && threshold <= 1.0, "threshold must be in (0, 1]");
    let mut accounting = GoldSpanAccounting { total: spans.len() as u64, ..Default::default() };

    for span in spans {
        let span_len = span.original.len();
        debug_assert_eq!(span_len, char_len(&span.text));
        let mut contained = false;
        // Characters of the span attributable to some chunk.
        let mut attributed = 0usize;
        let mut lcs_best = 0usize;

        for chunk in chunks.iter_mut().filter(|c| c.parent_doc_id == span.doc_id) {
            let positional = match (span.cleaned, chunk.source_span) {
                (Some(s), Some(c)) => Some(s.overlap(&c)),
                _ => None,
            };
            if let Some(overlap) = positional {
                attributed += overlap;
            }
            let verbatim = chunk.text.contains(&span.text);
            if verbatim {
                contained = true;
            }
            let covered = if verbatim {
                span_len
            } else if let Some(overlap) = positional {
                overlap
            } else {
                let lcs = longest_common_substring(&chunk.text, &span.text);
                lcs_best = lcs_best.max(lcs);
                lcs
            };
            if covered as f64 / span_len as f64 >= threshold {
                chunk.gold_for.insert(span.query_id.clone());
            }
        }

        if contained {
            accounting.intact += 1;
        } else if span.cleaned.is_some() && attributed.min(span_len) == span_len {
            accounting.split.push(span.flag());
        } else {
            // Positionally short, or only fuzzy evidence: count the
            // unaccounted characters as lost.
            let best = if span.cleaned.is_some() { attributed.min(span_len) } else { lcs_best };
            accounting.lost_chars += (span_len - best.min(span_len)) as u64;
            accounting.lost.push(span.flag());
        }
    }
    accounting
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::collections::BTreeSet;

    fn chunk(id: &str, doc: &str, text: &str, source: Option<(usize, usize)>) -> Chunk {
        Chunk {
            chunk_id: id.into(),
            parent_doc_id: doc.into(),
            ordinal: 0,
            label: "A".into(),
            text: text.into(),
            token_count: 0,
            gold_for: BTreeSet::new(),
            source_span: source.map(|(s, e)| CharSpan::new(s, e)),
        }
    }

    fn span(query: &str, doc: &str, start: usize, end: usize, text: &str) -> LocatedGoldSpan {
        LocatedGoldSpan {
            query_id: query.into(),
            doc_id: doc.into(),
            original: CharSpan::new(start, end),
            text: text.into(),
            cleaned: Some(CharSpan::new(start, end)),
        }
    }

    #[test]
    fn full_containment_marks_chunk_gold_and_intact() {
        let doc = "aaaa GOLD SPAN bbbb";
        let mut chunks = vec![chunk("c0", "d0", doc, Some((0, 19)))];
        let spans = vec![span("q1", "d0", 5, 14, "GOLD SPAN")];
        let acc = remap_gold_labels(&mut chunks, &spans, 0.5);
        assert!(chunks[0].gold_for.contains("q1"));
        assert_eq!(acc.intact, 1);
        assert_eq!(acc.accounted(), 1);
        assert_eq!(acc.lost_chars, 0);
    }

    #[test]
    fn half_half_split_at_threshold_half_marks_both() {
        // Span [0,10) cut exactly in half across two chunks.
        let mut chunks = vec![
            chunk("c0", "d0", "01234", Some((0, 5))),
            chunk("c1", "d0", "56789x", Some((5, 11))),
        ];
        let spans = vec![span("q1", "d0", 0, 10, "0123456789")];
        let acc = remap_gold_labels(&mut chunks, &spans, 0.5);
        assert!(chunks[0].gold_for.contains("q1"));
        assert!(chunks[1].gold_for.contains("q1"));
        assert_eq!(acc.intact, 0);
        assert_eq!(acc.split.len(), 1, "fully covered but in two pieces");
        assert_eq!(acc.lost_chars, 0);
    }

    #[test]
    fn uneven_split_above_threshold_marks_only_major_side() {
        let mut chunks = vec![
            chunk("c0", "d0", "0123456", Some((0, 7))),
            chunk("c1", "d0", "789", Some((7, 10))),
        ];
        let spans = vec![span("q1", "d0", 0, 10, "0123456789")];
        remap_gold_labels(&mut chunks, &spans, 0.5);
        assert!(chunks[0].gold_for.contains("q1"), "70% side is gold");
        assert!(!chunks[1].gold_for.contains("q1"), "30% side is not");
    }

    #[test]
    fn dropped_span_chars_are_counted_lost() {
        // Chunks cover only [0,4) of a 10-char span.
        let mut chunks = vec![chunk("c0", "d0", "0123", Some((0, 4)))];
        let spans = vec![span("q1", "d0", 0, 10, "0123456789")];
        let acc = remap_gold_labels(&mut chunks, &spans, 0.5);
        assert!(!chunks[0].gold_for.contains("q1"));
        assert_eq!(acc.lost.len(), 1);
        assert_eq!(acc.lost_chars, 6);
    }

    #[test]
    fn lcs_fallback_matches_paraphrase_free_chunks() {
        // Chunk without provenance: a rewritten document where only the
        // span text survives verbatim inside it.
        let mut chunks =
            vec![chunk("c0", "d0", "summary: THE GOLD TEXT, shortened", None)];
        let spans = vec![LocatedGoldSpan {
            query_id: "q1".into(),
            doc_id: "d0".into(),
            original: CharSpan::new(40, 53),
            text: "THE GOLD TEXT".into(),
            cleaned: None,
        }];
        let acc = remap_gold_labels(&mut chunks, &spans, 0.5);
        assert!(chunks[0].gold_for.contains("q1"));
        assert_eq!(acc.intact, 1, "verbatim containment still detected");
    }

    #[test]
    fn lcs_fallback_partial_overlap_passes_threshold() {
        // 8 of 13 span chars survive contiguously in a paraphrased chunk.
        let mut chunks = vec![chunk("c0", "d0", "xxTHE GOLDzz", None)];
        let spans = vec![LocatedGoldSpan {
            query_id: "q1".into(),
            doc_id: "d0".into(),
            original: CharSpan::new(40, 53),
            text: "THE GOLD TEXT".into(),
            cleaned: None,
        }];
        let acc = remap_gold_labels(&mut chunks, &spans, 0.5);
        assert!(chunks[0].gold_for.contains("q1"), "8/13 ≥ 0.5");
        assert_eq!(acc.intact, 0);
        assert_eq!(acc.lost.len(), 1, "fuzzy evidence counts as lost");
        assert_eq!(acc.lost_chars, 5);
    }

    #[test]
    fn foreign_document_chunks_are_never_matched() {
        let mut chunks = vec![chunk("c0", "other", "0123456789", Some((0, 10)))];
        let spans = vec![span("q1", "d0", 0, 10, "0123456789")];
        let acc = remap_gold_labels(&mut chunks, &spans, 0.5);
        assert!(chunks[0].gold_for.is_empty());
        assert_eq!(acc.lost.len(), 1);
        assert_eq!(acc.lost_chars, 10);
    }

    proptest! {
        /// Character-attribution oracle: attribute every span character to
        /// the chunk whose range holds it, then apply the threshold.
        #[test]
        fn remap_agrees_with_char_attribution_oracle(
            doc_len in 20usize..120,
            cuts in proptest::collection::btree_set(1usize..119, 0..6),
            span_bounds in (0usize..100, 1usize..40),
            threshold in prop_oneof![Just(0.25), Just(0.5), Just(0.75), Just(1.0)],
        ) {
            // One globally unique char per position, so verbatim
            // containment coincides exactly with positional coverage.
            let text: String = (0..doc_len)
                .map(|i| char::from_u32(0x4E00 + i as u32).unwrap())
                .collect();

            // Chunk tiling from the cut set.
            let mut edges: Vec<usize> = cuts.into_iter().filter(|c| *c < doc_len).collect();
            edges.insert(0, 0);
            edges.push(doc_len);
            edges.dedup();
            let mut chunks: Vec<Chunk> = edges.windows(2).enumerate()
                .map(|(i, w)| chunk(
                    &format!("c{i}"), "d0",
                    &text.chars().skip(w[0]).take(w[1] - w[0]).collect::<String>(),
                    Some((w[0], w[1])),
                ))
                .collect();

            let (s_off, s_len) = span_bounds;
            let start = s_off % doc_len;
            let end = (start + s_len.max(1)).min(doc_len);
            prop_assume!(end > start);
            let span_text: String = text.chars().skip(start).take(end - start).collect();
            let spans = vec![span("q1", "d0", start, end, &span_text)];

            let acc = remap_gold_labels(&mut chunks, &spans, threshold);

            // Oracle: count span chars inside each chunk range.
            let span_len = end - start;
            let mut covered_total = 0usize;
            let mut fully_inside_one = false;
            for (i, w) in edges.windows(2).enumerate() {
                let covered = (end.min(w[1])).saturating_sub(start.max(w[0]));
                covered_total += covered;
                let is_gold = covered as f64 / span_len as f64 >= threshold;
                prop_assert_eq!(
                    chunks[i].gold_for.contains("q1"), is_gold,
                    "chunk {} covered {}/{}", i, covered, span_len
                );
                if covered == span_len {
                    fully_inside_one = true;
                }
            }
            prop_assert_eq!(covered_total, span_len, "tiling covers the doc");
            if fully_inside_one {
                prop_assert_eq!(acc.intact, 1);
            } else {
                prop_assert_eq!(acc.split.len(), 1);
            }
            prop_assert_eq!(acc.lost_chars, 0);
        }
    }
}
