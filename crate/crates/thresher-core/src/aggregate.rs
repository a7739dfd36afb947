//! Partition gold documents into annotated parts (which downstream stages
//! must preserve verbatim) and unannotated parts (free to clean).
//!
//! Annotated spans from all queries over a document are merged first:
//! overlapping or touching spans collapse into one part, so a part is the
//! maximal contiguous annotated region. Parts of both kinds tile the
//! document exactly, in order.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, Document, GoldAnnotation};
use crate::text::{char_len, char_slice, CharSpan};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PartKind {
    /// Carries annotated evidence; protected from rewriting.
    Gold,
    /// No annotation touches it; cleaning may drop or rewrite it.
    Irrelevant,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Part {
    pub kind: PartKind,
    pub span: CharSpan,
    /// Queries whose annotations contributed to this part. Empty for
    /// irrelevant parts.
    #[serde(default, skip_serializing_if = "BTreeSet::is_empty")]
    pub queries: BTreeSet<String>,
}

/// An ordered tiling of one document into gold and irrelevant parts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub doc_id: String,
    pub parts: Vec<Part>,
}

impl Partition {
    pub fn gold_parts(&self) -> impl Iterator<Item = &Part> {
        self.parts.iter().filter(|p| p.kind == PartKind::Gold)
    }

    pub fn irrelevant_parts(&self) -> impl Iterator<Item = &Part> {
        self.parts.iter().filter(|p| p.kind == PartKind::Irrelevant)
    }

    /// Slice the part's text out of the document it was computed from.
    pub fn part_text<'a>(&self, doc_text: &'a str, part: &Part) -> &'a str {
        char_slice(doc_text, part.span)
    }

    /// Total characters under gold parts.
    pub fn gold_chars(&self) -> usize {
        self.gold_parts().map(|p| p.span.len()).sum()
    }
}

/// Partition one document against the annotations that reference it.
/// Annotations for other documents are ignored rather than rejected, so
/// callers may pass an unfiltered slice.
pub fn partition_document(doc: &Document, annotations: &[&GoldAnnotation]) -> Partition {
    let len = char_len(&doc.text);

    // Gather (span, query) pairs, sort by position, then sweep-merge.
    let mut tagged: Vec<(CharSpan, &str)> = Vec::new();
    for ann in annotations {
        if ann.doc_id != doc.doc_id {
            continue;
        }
        for s in &ann.spans {
            if !s.is_empty() {
                tagged.push((*s, ann.query_id.as_str()));
            }
        }
    }
    tagged.sort_by_key(|(s, _)| (s.start, s.end));

    let mut merged: Vec<(CharSpan, BTreeSet<String>)> = Vec::new();
    for (span, query) in tagged {
        match merged.last_mut() {
            // Touching counts as one region: [2,4) + [4,6) -> [2,6).
            Some((last, queries)) if span.start <= last.end => {
                last.end = last.end.max(span.end);
                queries.insert(query.to_string());
            }
            _ => merged.push((span, BTreeSet::from([query.to_string()]))),
        }
    }

    let mut parts = Vec::with_capacity(merged.len() * 2 + 1);
    let mut cursor = 0;
    for (span, queries) in merged {
        if cursor < span.start {
            parts.push(Part {
                kind: PartKind::Irrelevant,
                span: CharSpan::new(cursor, span.start),
                queries: BTreeSet::new(),
            });
        }
        cursor = span.end;
        parts.push(Part { kind: PartKind::Gold, span, queries });
    }
    if cursor < len {
        parts.push(Part {
            kind: PartKind::Irrelevant,
            span: CharSpan::new(cursor, len),
            queries: BTreeSet::new(),
        });
    }

    Partition { doc_id: doc.doc_id.clone(), parts }
}

/// Partition every gold document in the corpus. Irrelevant documents are
/// left out; cleaning treats their whole text as a single free region.
pub fn partition_corpus(corpus: &Corpus) -> BTreeMap<String, Partition> {
    let mut out = BTreeMap::new();
    for doc in corpus.gold_documents() {
        let anns: Vec<&GoldAnnotation> = corpus.annotations_for_doc(&doc.doc_id).collect();
        out.insert(doc.doc_id.clone(), partition_document(doc, &anns));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocumentKind;

    fn doc(id: &str, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            text: text.into(),
            domain: "biology".into(),
            kind: DocumentKind::Gold,
        }
    }

    fn ann(q: &str, d: &str, spans: &[(usize, usize)]) -> GoldAnnotation {
        GoldAnnotation {
            query_id: q.into(),
            doc_id: d.into(),
            spans: spans.iter().map(|&(s, e)| CharSpan::new(s, e)).collect(),
        }
    }

    fn kinds(p: &Partition) -> Vec<(PartKind, usize, usize)> {
        p.parts.iter().map(|x| (x.kind, x.span.start, x.span.end)).collect()
    }

    #[test]
    fn touching_spans_from_different_queries_merge() {
        let d = doc("d1", "0123456789");
        let a1 = ann("q1", "d1", &[(2, 4)]);
        let a2 = ann("q2", "d1", &[(4, 6)]);
        let p = partition_document(&d, &[&a1, &a2]);
        assert_eq!(
            kinds(&p),
            vec![
                (PartKind::Irrelevant, 0, 2),
                (PartKind::Gold, 2, 6),
                (PartKind::Irrelevant, 6, 10),
            ]
        );
        let gold = p.gold_parts().next().unwrap();
        assert_eq!(gold.queries, BTreeSet::from(["q1".to_string(), "q2".to_string()]));
    }

    #[test]
    fn overlapping_spans_merge() {
        let d = doc("d1", "0123456789");
        let a1 = ann("q1", "d1", &[(2, 5)]);
        let a2 = ann("q2", "d1", &[(4, 8)]);
        let p = partition_document(&d, &[&a1, &a2]);
        assert_eq!(
            kinds(&p),
            vec![
                (PartKind::Irrelevant, 0, 2),
                (PartKind::Gold, 2, 8),
                (PartKind::Irrelevant, 8, 10),
            ]
        );
    }

    #[test]
    fn disjoint_spans_stay_separate() {
        let d = doc("d1", "0123456789");
        let a = ann("q1", "d1", &[(0, 2), (5, 7)]);
        let p = partition_document(&d, &[&a]);
        assert_eq!(
            kinds(&p),
            vec![
                (PartKind::Gold, 0, 2),
                (PartKind::Irrelevant, 2, 5),
                (PartKind::Gold, 5, 7),
                (PartKind::Irrelevant, 7, 10),
            ]
        );
    }

    #[test]
    fn whole_document_annotation_yields_single_gold_part() {
        let d = doc("d1", "abcdef");
        let a = ann("q1", "d1", &[(0, 6)]);
        let p = partition_document(&d, &[&a]);
        assert_eq!(kinds(&p), vec![(PartKind::Gold, 0, 6)]);
    }

    #[test]
    fn no_annotations_yields_single_irrelevant_part() {
        let d = doc("d1", "abcdef");
        let p = partition_document(&d, &[]);
        assert_eq!(kinds(&p), vec![(PartKind::Irrelevant, 0, 6)]);
    }

    #[test]
    fn annotations_for_other_documents_are_ignored() {
        let d = doc("d1", "abcdef");
        let other = ann("q1", "d2", &[(0, 3)]);
        let p = partition_document(&d, &[&other]);
        assert_eq!(kinds(&p), vec![(PartKind::Irrelevant, 0, 6)]);
    }

    #[test]
    fn part_text_slices_by_chars() {
        let d = doc("d1", "héllo wörld");
        let a = ann("q1", "d1", &[(6, 11)]);
        let p = partition_document(&d, &[&a]);
        let gold = p.gold_parts().next().unwrap().clone();
        assert_eq!(p.part_text(&d.text, &gold), "wörld");
    }
}
