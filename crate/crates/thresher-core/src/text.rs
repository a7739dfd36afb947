//! Character-indexed text utilities shared across the pipeline.
//!
//! All span arithmetic in this crate is over Unicode scalar values, not
//! bytes, so annotations survive re-encoding of multi-script text.

use serde::{Deserialize, Serialize};
use unicode_segmentation::UnicodeSegmentation;

/// A half-open character range `[start, end)` into a document's text.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct CharSpan {
    pub start: usize,
    pub end: usize,
}

impl CharSpan {
    pub fn new(start: usize, end: usize) -> Self {
        CharSpan { start, end }
    }

    pub fn len(&self) -> usize {
        self.end.saturating_sub(self.start)
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, other: &CharSpan) -> bool {
        self.start <= other.start && other.end <= self.end
    }

    /// Characters shared with `other`.
    pub fn overlap(&self, other: &CharSpan) -> usize {
        let lo = self.start.max(other.start);
        let hi = self.end.min(other.end);
        hi.saturating_sub(lo)
    }
}

/// Number of Unicode scalar values in `text`.
pub fn char_len(text: &str) -> usize {
    text.chars().count()
}

/// Byte offset of the `idx`-th character. `idx` may equal the char length,
/// in which case the byte length is returned.
pub fn byte_offset(text: &str, idx: usize) -> usize {
    if idx == 0 {
        return 0;
    }
    match text.char_indices().nth(idx) {
        Some((b, _)) => b,
        None => text.len(),
    }
}

/// Slice `text` by character positions.
pub fn char_slice(text: &str, span: CharSpan) -> &str {
    let start = byte_offset(text, span.start);
    let end = byte_offset(text, span.end);
    &text[start..end]
}

/// Character position of the first occurrence of `needle` in `haystack`,
/// searching from character position `from`.
pub fn char_find(haystack: &str, needle: &str, from: usize) -> Option<usize> {
    let from_byte = byte_offset(haystack, from);
    let hit = haystack[from_byte..].find(needle)?;
    Some(from + haystack[from_byte..from_byte + hit].chars().count())
}

/// Collapse `\r\n` and bare `\r` to `\n`. Line endings are the only
/// normalization applied when comparing agent output against source text.
pub fn normalize_newlines(text: &str) -> String {
    if !text.contains('\r') {
        return text.to_string();
    }
    text.replace("\r\n", "\n").replace('\r', "\n")
}

/// Count of non-whitespace characters, used for splitter coverage checks.
pub fn non_whitespace_chars(text: &str) -> usize {
    text.chars().filter(|c| !c.is_whitespace()).count()
}

/// Length in characters of the longest common substring of `a` and `b`.
///
/// Rolling-array DP; quadratic but only invoked for chunks whose text could
/// not be located verbatim in the cleaned document.
pub fn longest_common_substring(a: &str, b: &str) -> usize {
    if a.is_empty() || b.is_empty() {
        return 0;
    }
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    // Iterate over the longer string, keep the DP row for the shorter one.
    let (outer, inner) = if a.len() >= b.len() { (&a, &b) } else { (&b, &a) };
    let mut prev = vec![0usize; inner.len() + 1];
    let mut cur = vec![0usize; inner.len() + 1];
    let mut best = 0;
    for &oc in outer.iter() {
        for (j, &ic) in inner.iter().enumerate() {
            cur[j + 1] = if oc == ic { prev[j] + 1 } else { 0 };
            best = best.max(cur[j + 1]);
        }
        std::mem::swap(&mut prev, &mut cur);
    }
    best
}

/// Tokenizer used for chunk token counts.
///
/// Defaults to whitespace-delimited tokens; Unicode word segmentation is
/// available as a config override.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    #[default]
    Whitespace,
    UnicodeWords,
}

impl TokenizerKind {
    pub fn tokens<'a>(&self, text: &'a str) -> Vec<&'a str> {
        match self {
            TokenizerKind::Whitespace => text.split_whitespace().collect(),
            TokenizerKind::UnicodeWords => text.unicode_words().collect(),
        }
    }

    pub fn count(&self, text: &str) -> usize {
        match self {
            TokenizerKind::Whitespace => text.split_whitespace().count(),
            TokenizerKind::UnicodeWords => text.unicode_words().count(),
        }
    }
}

/// Index-time analyzer: Unicode word segmentation, lowercasing, and
/// optional stopword removal (off by default).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Analyzer {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stopwords: Vec<String>,
}

impl Analyzer {
    pub fn analyze(&self, text: &str) -> Vec<String> {
        text.unicode_words()
            .map(|w| w.to_lowercase())
            .filter(|w| !self.stopwords.iter().any(|s| s == w))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn char_slice_is_scalar_indexed() {
        let text = "héllo wörld";
        assert_eq!(char_len(text), 11);
        assert_eq!(char_slice(text, CharSpan::new(1, 5)), "éllo");
        assert_eq!(char_slice(text, CharSpan::new(6, 11)), "wörld");
    }

    #[test]
    fn char_find_reports_char_positions() {
        let text = "αβγ needle αβ needle";
        assert_eq!(char_find(text, "needle", 0), Some(4));
        assert_eq!(char_find(text, "needle", 5), Some(14));
        assert_eq!(char_find(text, "absent", 0), None);
    }

    #[test]
    fn newline_normalization_only_touches_line_endings() {
        assert_eq!(normalize_newlines("a\r\nb\rc\nd"), "a\nb\nc\nd");
        assert_eq!(normalize_newlines("a  b\tc"), "a  b\tc");
    }

    #[test]
    fn lcs_matches_known_cases() {
        assert_eq!(longest_common_substring("abcdef", "zabcy"), 3);
        assert_eq!(longest_common_substring("", "abc"), 0);
        assert_eq!(longest_common_substring("same", "same"), 4);
        assert_eq!(longest_common_substring("abc", "xyz"), 0);
    }

    #[test]
    fn whitespace_tokenizer_counts() {
        let t = TokenizerKind::Whitespace;
        assert_eq!(t.count("one two  three\nfour"), 4);
        assert_eq!(t.count("   "), 0);
    }

    #[test]
    fn analyzer_lowercases_and_segments() {
        let a = Analyzer::default();
        assert_eq!(a.analyze("Hello, World!"), vec!["hello", "world"]);
        let stops = Analyzer { stopwords: vec!["the".into()] };
        assert_eq!(stops.analyze("The quick fox"), vec!["quick", "fox"]);
    }

    #[test]
    fn overlap_arithmetic() {
        let a = CharSpan::new(2, 6);
        let b = CharSpan::new(4, 10);
        assert_eq!(a.overlap(&b), 2);
        assert_eq!(b.overlap(&a), 2);
        assert_eq!(a.overlap(&CharSpan::new(6, 8)), 0);
    }
}
