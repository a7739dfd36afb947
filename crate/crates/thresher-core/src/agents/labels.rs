//! Chunk label arithmetic and response parsing for the splitter agent.
//!
//! Labels run A..Z, then AA..AZ, BA.., like spreadsheet columns (bijective
//! base-26). A splitter response interleaves `Chunk <LABEL>:` marker lines
//! with chunk bodies.

/// Label for the 0-based chunk index: 0 -> "A", 25 -> "Z", 26 -> "AA".
pub fn label_for_index(index: usize) -> String {
    let mut n = index + 1; // bijective numeration works on 1-based values
    let mut out = Vec::new();
    while n > 0 {
        n -= 1;
        out.push(b'A' + (n % 26) as u8);
        n /= 26;
    }
    out.reverse();
    String::from_utf8(out).unwrap()
}

/// Inverse of [`label_for_index`]. Returns `None` unless `label` is
/// non-empty uppercase ASCII letters.
pub fn index_for_label(label: &str) -> Option<usize> {
    if label.is_empty() || !label.bytes().all(|b| b.is_ascii_uppercase()) {
        return None;
    }
    let mut n: usize = 0;
    for b in label.bytes() {
        n = n.checked_mul(26)?.checked_add((b - b'A') as usize + 1)?;
    }
    Some(n - 1)
}

/// One parsed chunk: its label and body text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledChunk {
    pub label: String,
    pub text: String,
}

/// Parse a splitter response into labeled chunks.
///
/// A chunk starts at a line whose trimmed form is `Chunk <LABEL>:` with an
/// optional inline remainder, and runs until the next marker. Text before
/// the first marker (model preamble) is discarded. Bodies are trimmed of
/// leading/trailing blank space; chunks whose bodies end up empty are kept
/// so that validation can reject them explicitly.
pub fn parse_chunk_labels(response: &str) -> Vec<LabeledChunk> {
    let mut chunks: Vec<LabeledChunk> = Vec::new();
    let mut current: Option<(String, Vec<&str>)> = None;

    for line in response.lines() {
        if let Some((label, rest)) = match_marker(line) {
            if let Some((label, body)) = current.take() {
                chunks.push(LabeledChunk { label, text: join_body(&body) });
            }
            let mut body = Vec::new();
            if !rest.trim().is_empty() {
                body.push(rest);
            }
            current = Some((label, body));
        } else if let Some((_, body)) = current.as_mut() {
            body.push(line);
        }
    }
    if let Some((label, body)) = current.take() {
        chunks.push(LabeledChunk { label, text: join_body(&body) });
    }
    chunks
}

/// `Chunk <LABEL>:` at the start of a line (leading whitespace allowed);
/// returns the label and whatever followed the colon on the same line.
fn match_marker(line: &str) -> Option<(String, &str)> {
    let trimmed = line.trim_start();
    let rest = trimmed.strip_prefix("Chunk ")?;
    let label_len = rest.bytes().take_while(|b| b.is_ascii_uppercase()).count();
    if label_len == 0 {
        return None;
    }
    let after = &rest[label_len..];
    let after = after.strip_prefix(':')?;
    Some((rest[..label_len].to_string(), after.strip_prefix(' ').unwrap_or(after)))
}

fn join_body(lines: &[&str]) -> String {
    lines.join("\n").trim().to_string()
}

/// Labels are valid iff they are exactly A, B, C, ... in order.
pub fn labels_sequential(chunks: &[LabeledChunk]) -> bool {
    chunks.iter().enumerate().all(|(i, c)| c.label == label_for_index(i))
}

/// Render chunks back into the `Chunk <LABEL>:` wire format.
pub fn emit_chunks<'a>(texts: impl IntoIterator<Item = &'a str>) -> String {
    let mut out = String::new();
    for (i, text) in texts.into_iter().enumerate() {
        if i > 0 {
            out.push('\n');
        }
        out.push_str("Chunk ");
        out.push_str(&label_for_index(i));
        out.push_str(":\n");
        out.push_str(text);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn labels_follow_spreadsheet_columns() {
        let head: Vec<String> = (0..4).map(label_for_index).collect();
        assert_eq!(head, ["A", "B", "C", "D"]);
        assert_eq!(label_for_index(25), "Z");
        // The 27th label (index 26) rolls over to two letters.
        assert_eq!(label_for_index(26), "AA");
        assert_eq!(label_for_index(27), "AB");
        assert_eq!(label_for_index(51), "AZ");
        assert_eq!(label_for_index(52), "BA");
        assert_eq!(label_for_index(99), "CV");
        assert_eq!(label_for_index(701), "ZZ");
        assert_eq!(label_for_index(702), "AAA");
    }

    #[test]
    fn index_inverts_label() {
        for i in (0..2000).chain([10_000, 100_000]) {
            assert_eq!(index_for_label(&label_for_index(i)), Some(i), "index {i}");
        }
        assert_eq!(index_for_label(""), None);
        assert_eq!(index_for_label("a"), None);
        assert_eq!(index_for_label("A1"), None);
    }

    #[test]
    fn parses_multiline_chunks_and_ignores_preamble() {
        let response = "Sure, here are the chunks:\nChunk A:\nFirst paragraph.\nStill first.\n\nChunk B: Inline start.\nSecond body line.";
        let chunks = parse_chunk_labels(response);
        assert_eq!(chunks.len(), 2);
        assert_eq!(chunks[0].label, "A");
        assert_eq!(chunks[0].text, "First paragraph.\nStill first.");
        assert_eq!(chunks[1].label, "B");
        assert_eq!(chunks[1].text, "Inline start.\nSecond body line.");
    }

    #[test]
    fn marker_requires_colon_and_uppercase_label() {
        assert!(parse_chunk_labels("Chunk A\nno colon").is_empty());
        assert!(parse_chunk_labels("Chunk a: lowercase").is_empty());
        let chunks = parse_chunk_labels("  Chunk AA: indented marker");
        assert_eq!(chunks[0].label, "AA");
        assert_eq!(chunks[0].text, "indented marker");
    }

    #[test]
    fn sequential_check_rejects_gaps_and_disorder() {
        let ok = parse_chunk_labels("Chunk A:\nx\nChunk B:\ny");
        assert!(labels_sequential(&ok));
        let gap = parse_chunk_labels("Chunk A:\nx\nChunk C:\ny");
        assert!(!labels_sequential(&gap));
        let disorder = parse_chunk_labels("Chunk B:\nx\nChunk A:\ny");
        assert!(!labels_sequential(&disorder));
        let from_b = parse_chunk_labels("Chunk B:\nx");
        assert!(!labels_sequential(&from_b));
    }

    #[test]
    fn emit_then_parse_round_trips() {
        let texts = ["first body", "second body\nwith two lines", "third"];
        let wire = emit_chunks(texts.iter().copied());
        let parsed = parse_chunk_labels(&wire);
        assert_eq!(parsed.len(), 3);
        assert!(labels_sequential(&parsed));
        for (chunk, text) in parsed.iter().zip(texts) {
            assert_eq!(chunk.text, text);
        }
    }

    #[test]
    fn chunk_word_inside_body_is_not_a_marker() {
        let response = "Chunk A:\nThe word Chunk appears here but not as a marker.\nChunk of cheese: still body.";
        let chunks = parse_chunk_labels(response);
        assert_eq!(chunks.len(), 1);
        assert!(chunks[0].text.contains("cheese"));
    }
}
