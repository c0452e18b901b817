//! Whitespace and punctuation tokenizer.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

/// Characters split off the edges of a whitespace chunk.
pub const EDGE_PUNCTUATION: [char; 10] = ['.', ',', '!', '?', ';', ':', '\'', '"', '(', ')'];

pub fn is_edge_punctuation(c: char) -> bool {
    EDGE_PUNCTUATION.contains(&c)
}

/// One token of an utterance. `start..end` is a byte range into the source text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub normalized: String,
    pub start: usize,
    pub end: usize,
}

impl Token {
    fn new(source: &str, start: usize, end: usize) -> Self {
        let surface = source[start..end].to_string();
        let normalized = surface.to_lowercase();
        Self {
            surface,
            normalized,
            start,
            end,
        }
    }

    /// True when the token is a single split-off punctuation character.
    pub fn is_punctuation(&self) -> bool {
        !self.surface.is_empty() && self.surface.chars().all(is_edge_punctuation)
    }

    pub fn has_alphanumeric(&self) -> bool {
        self.normalized.chars().any(char::is_alphanumeric)
    }
}

/// Split `raw` on whitespace runs, then peel leading and trailing
/// punctuation off each chunk into single-character tokens. Interior
/// apostrophes and hyphens stay inside their token.
pub fn tokenize(raw: &str) -> Vec<Token> {
    let mut tokens = Vec::new();
    let mut chunk_start = None;
    for (i, c) in raw.char_indices() {
        match (c.is_whitespace(), chunk_start) {
            (true, Some(start)) => {
                split_chunk(raw, start, i, &mut tokens);
                chunk_start = None;
            }
            (false, None) => chunk_start = Some(i),
            _ => {}
        }
    }
    if let Some(start) = chunk_start {
        split_chunk(raw, start, raw.len(), &mut tokens);
    }
    tokens
}

fn split_chunk(raw: &str, start: usize, end: usize, out: &mut Vec<Token>) {
    let chunk = &raw[start..end];
    let mut core_start = start;
    for (i, c) in chunk.char_indices() {
        if !is_edge_punctuation(c) {
            break;
        }
        out.push(Token::new(raw, start + i, start + i + c.len_utf8()));
        core_start = start + i + c.len_utf8();
    }
    if core_start == end {
        return;
    }
    let mut core_end = end;
    let mut trailing = Vec::new();
    for (i, c) in raw[core_start..end].char_indices().rev() {
        if !is_edge_punctuation(c) {
            break;
        }
        trailing.push(Token::new(raw, core_start + i, core_start + i + c.len_utf8()));
        core_end = core_start + i;
    }
    out.push(Token::new(raw, core_start, core_end));
    out.extend(trailing.into_iter().rev());
}

/// Join surfaces with a single space before every non-punctuation token.
pub fn detokenize<S: AsRef<str>>(surfaces: &[S]) -> String {
    let mut out = String::new();
    for (i, surface) in surfaces.iter().enumerate() {
        let surface = surface.as_ref();
        let punct = !surface.is_empty() && surface.chars().all(is_edge_punctuation);
        if i > 0 && !punct {
            out.push(' ');
        }
        out.push_str(surface);
    }
    out
}

/// Case-folded function words ignored by similarity and retrieval scoring.
#[derive(Debug, Clone, Default)]
pub struct Stopwords(HashSet<String>);

impl Stopwords {
    pub fn new<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        Self(words.into_iter().map(|w| w.as_ref().to_lowercase()).collect())
    }

    pub fn contains(&self, word: &str) -> bool {
        self.0.contains(word)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Content tokens: not a stopword and containing a letter or digit.
    pub fn is_content(&self, token: &Token) -> bool {
        token.has_alphanumeric() && !self.contains(&token.normalized)
    }

    /// Normalized content words in utterance order, duplicates kept.
    pub fn content_words<'a>(&'a self, tokens: &'a [Token]) -> impl Iterator<Item = &'a str> + 'a {
        tokens
            .iter()
            .filter(move |t| self.is_content(t))
            .map(|t| t.normalized.as_str())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn surfaces(raw: &str) -> Vec<String> {
        tokenize(raw).into_iter().map(|t| t.surface).collect()
    }

    #[test]
    fn empty_input_has_no_tokens() {
        assert!(tokenize("").is_empty());
        assert!(tokenize("   \t\n").is_empty());
    }

    #[test]
    fn punctuation_is_split_off() {
        assert_eq!(surfaces("Hello, world!"), ["Hello", ",", "world", "!"]);
        assert_eq!(surfaces("(\"hi\")"), ["(", "\"", "hi", "\"", ")"]);
        assert_eq!(surfaces("?!"), ["?", "!"]);
    }

    #[test]
    fn interior_apostrophes_and_hyphens_survive() {
        assert_eq!(surfaces("don't re-book it's"), ["don't", "re-book", "it's"]);
        assert_eq!(surfaces("'tis"), ["'", "tis"]);
    }

    #[test]
    fn restaurant_sentence() {
        let tokens = tokenize("I need a table in a pizzeria");
        let normalized: Vec<_> = tokens.iter().map(|t| t.normalized.as_str()).collect();
        assert_eq!(normalized, ["i", "need", "a", "table", "in", "a", "pizzeria"]);
    }

    #[test]
    fn spans_are_byte_offsets() {
        let raw = "Ça va? très bien";
        for t in tokenize(raw) {
            assert_eq!(&raw[t.start..t.end], t.surface);
        }
    }

    #[test]
    fn detokenize_attaches_punctuation() {
        assert_eq!(detokenize(&["Hello", ",", "world", "!"]), "Hello, world!");
        assert_eq!(detokenize::<&str>(&[]), "");
    }

    #[test]
    fn content_words_skip_stopwords_and_punctuation() {
        let stop = Stopwords::new(["a", "the"]);
        let tokens = tokenize("a pizza, the pasta?");
        let words: Vec<_> = stop.content_words(&tokens).collect();
        assert_eq!(words, ["pizza", "pasta"]);
    }

    proptest! {
        #[test]
        fn spans_partition_source_in_order(raw in "[a-zA-Z '\\-.,!?;:\"()\t\n]{0,40}") {
            let tokens = tokenize(&raw);
            let mut cursor = 0;
            for t in &tokens {
                prop_assert!(t.start >= cursor);
                prop_assert!(t.end > t.start);
                prop_assert!(raw[cursor..t.start].chars().all(char::is_whitespace));
                prop_assert_eq!(&raw[t.start..t.end], t.surface.as_str());
                prop_assert_eq!(t.surface.to_lowercase(), t.normalized.clone());
                cursor = t.end;
            }
            prop_assert!(raw[cursor..].chars().all(char::is_whitespace));
        }
    }
}
