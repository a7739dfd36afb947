//! Baseline chunking: newline splitting with greedy fixed-token packing.

use crate::text::TokenizerKind;

/// Split on newlines, then greedily pack consecutive lines into chunks of
/// at most `max_tokens` whitespace tokens. A single line longer than the
/// budget is sliced into max_tokens-sized token runs.
pub fn heuristic_chunk(text: &str, max_tokens: usize) -> Vec<String> {
    assert!(max_tokens >= 1, "token budget must be at least 1");
    let tokenizer = TokenizerKind::Whitespace;
    let mut chunks = Vec::new();
    let mut pack: Vec<&str> = Vec::new();
    let mut pack_tokens = 0usize;

    // A pack of only blank lines is dropped, never emitted as a chunk.
    let flush = |pack: &mut Vec<&str>, pack_tokens: &mut usize, chunks: &mut Vec<String>| {
        if *pack_tokens > 0 {
            chunks.push(pack.join("\n"));
        }
        pack.clear();
        *pack_tokens = 0;
    };

    for line in text.split('\n') {
        let line_tokens = tokenizer.count(line);
        if line_tokens > max_tokens {
            // Over-long line: emit what's packed, then token-slice the line.
            flush(&mut pack, &mut pack_tokens, &mut chunks);
            let tokens = tokenizer.tokens(line);
            for piece in tokens.chunks(max_tokens) {
                chunks.push(piece.join(" "));
            }
            continue;
        }
        if pack_tokens + line_tokens > max_tokens {
            flush(&mut pack, &mut pack_tokens, &mut chunks);
        }
        pack.push(line);
        pack_tokens += line_tokens;
    }
    flush(&mut pack, &mut pack_tokens, &mut chunks);
    chunks
}
