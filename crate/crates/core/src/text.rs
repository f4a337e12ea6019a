//! Tokenization and name normalization shared by every stage.
//!
//! Tokens are maximal runs of alphanumeric characters. An apostrophe (`'` or
//! `’`) joins two alphanumeric runs into one token, so `O'Brien` stays whole,
//! except for a final possessive `'s`, which is dropped: `Ryan's` yields `Ryan`.
//! Every other character (whitespace, punctuation, symbols) separates tokens.
//!
//! All offsets in this crate are *character* offsets, not byte offsets.

use std::fmt;

use serde::{Deserialize, Serialize};

/// One token with its character span in the source text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Token<'a> {
    pub text: &'a str,
    /// Character offset of the first character.
    pub start: usize,
    /// Character offset one past the last character.
    pub end: usize,
}

impl Token<'_> {
    pub fn lower(&self) -> String {
        self.text.to_lowercase()
    }

    /// First character is an uppercase letter.
    pub fn is_capitalized(&self) -> bool {
        self.text.chars().next().is_some_and(char::is_uppercase)
    }
}

fn is_apostrophe(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Splits `text` into tokens.
pub fn tokenize(text: &str) -> Vec<Token<'_>> {
    let chars: Vec<(usize, char)> = text.char_indices().collect();
    let mut tokens = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        if !chars[i].1.is_alphanumeric() {
            i += 1;
            continue;
        }
        let start = i;
        let mut possessive = false;
        while i < chars.len() {
            let c = chars[i].1;
            if c.is_alphanumeric() {
                i += 1;
            } else if is_apostrophe(c) && i + 1 < chars.len() && chars[i + 1].1.is_alphanumeric() {
                if matches!(chars[i + 1].1, 's' | 'S')
                    && chars.get(i + 2).is_none_or(|&(_, n)| !n.is_alphanumeric())
                {
                    possessive = true;
                    break;
                }
                i += 2;
            } else {
                break;
            }
        }
        let byte_start = chars[start].0;
        let byte_end = chars.get(i).map_or(text.len(), |&(b, _)| b);
        tokens.push(Token {
            text: &text[byte_start..byte_end],
            start,
            end: i,
        });
        if possessive {
            i += 2;
        }
    }
    tokens
}

/// Lowercased tokens of `text`, the form used for matching and indexing.
pub fn lower_tokens(text: &str) -> Vec<String> {
    tokenize(text).iter().map(Token::lower).collect()
}

/// Collapses runs of whitespace into single spaces and trims the ends.
pub fn normalize_whitespace(s: &str) -> String {
    s.split_whitespace().collect::<Vec<_>>().join(" ")
}

/// Case- and whitespace-insensitive identity of a name.
///
/// Two surface forms with the same key are counted as the same name; the
/// key never merges aliases ("Donald J Trump" and "The Donald" differ).
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NameKey(String);

impl NameKey {
    pub fn new(name: &str) -> Self {
        NameKey(normalize_whitespace(name).to_lowercase())
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NameKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

/// Converts a character range of `text` into the equivalent byte range.
pub fn char_range_to_bytes(text: &str, start: usize, end: usize) -> (usize, usize) {
    let mut byte_start = text.len();
    let mut byte_end = text.len();
    for (ci, (bi, _)) in text.char_indices().enumerate() {
        if ci == start {
            byte_start = bi;
        }
        if ci == end {
            byte_end = bi;
            break;
        }
    }
    (byte_start, byte_end)
}

/// Substring of `text` between two character offsets.
pub fn char_slice(text: &str, start: usize, end: usize) -> &str {
    let (b0, b1) = char_range_to_bytes(text, start, end);
    &text[b0..b1]
}

/// Finds whole-token, case-insensitive occurrences of a phrase.
///
/// Returns the index of the first token of each match; the phrase's tokens
/// must appear consecutively in `tokens`. Overlapping matches are all reported.
pub fn find_phrase(tokens: &[String], phrase: &[String]) -> Vec<usize> {
    if phrase.is_empty() || phrase.len() > tokens.len() {
        return Vec::new();
    }
    (0..=tokens.len() - phrase.len())
        .filter(|&i| tokens[i..i + phrase.len()] == *phrase)
        .collect()
}
