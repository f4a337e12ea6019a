//! Inverted index over a corpus with fixed-width snippet windows.
//!
//! Queries are case-insensitive whole-token phrase matches: `Trump` matches
//! `trump` and `TRUMP` but never `Trumpet`. Each occurrence yields one
//! snippet, a window of at most `window` characters centered on the match and
//! clipped at the document edges. Windows shorter than `min_len` are dropped.

use std::collections::HashMap;
use std::fs::File;
use std::io::{self, BufReader};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{Corpus, DocKind, Document};
use crate::text::{self, lower_tokens, tokenize};
use crate::util;

pub const DEFAULT_WINDOW: usize = 200;
pub const DEFAULT_MIN_LEN: usize = 50;

const INDEX_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Snippet {
    pub doc_id: String,
    pub kind: DocKind,
    /// Character span of the window in the source document.
    pub char_start: usize,
    pub char_end: usize,
    pub window_text: String,
    /// Character span of the matched name inside `window_text`.
    pub match_start: usize,
    pub match_end: usize,
}

impl Snippet {
    pub fn len(&self) -> usize {
        self.char_end - self.char_start
    }

    pub fn is_empty(&self) -> bool {
        self.char_end == self.char_start
    }

    /// Match position in document coordinates.
    pub fn doc_match_start(&self) -> usize {
        self.char_start + self.match_start
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SnippetParams {
    pub window: usize,
    pub min_len: usize,
}

impl Default for SnippetParams {
    fn default() -> Self {
        SnippetParams {
            window: DEFAULT_WINDOW,
            min_len: DEFAULT_MIN_LEN,
        }
    }
}

/// Window of at most `window` characters centered on `[match_start, match_end)`
/// and clipped to `[0, text_len)`. `None` when the clipped window is shorter
/// than `min_len`.
pub fn centered_window(
    text_len: usize,
    match_start: usize,
    match_end: usize,
    params: SnippetParams,
) -> Option<(usize, usize)> {
    let match_len = match_end - match_start;
    let (start, end) = if match_len >= params.window {
        (match_start, match_start + params.window)
    } else {
        let spare = params.window - match_len;
        let left = spare / 2;
        let right = spare - left;
        (
            match_start.saturating_sub(left),
            (match_end + right).min(text_len),
        )
    };
    (end - start >= params.min_len).then_some((start, end))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
struct Posting {
    doc: u32,
    pos: u32,
}

/// Tokens of one document: lowercased text and character spans.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct DocTokens {
    lower: Vec<String>,
    spans: Vec<(u32, u32)>,
    char_len: u32,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Index {
    version: u32,
    fingerprint: u64,
    /// Lowercased token → occurrences, sorted by document position then token offset.
    postings: HashMap<String, Vec<Posting>>,
    docs: Vec<DocTokens>,
}

fn fingerprint(corpus: &Corpus) -> u64 {
    let mut acc = util::fnv1a(&(corpus.len() as u64).to_le_bytes());
    for d in corpus.documents() {
        acc = util::derive_seed(acc, &d.doc_id) ^ util::fnv1a(d.text.as_bytes());
    }
    acc
}

/// Indexes every token of every document.
pub fn build_index(corpus: &Corpus) -> Index {
    let docs: Vec<DocTokens> = corpus
        .documents()
        .par_iter()
        .map(|d| {
            let toks = tokenize(&d.text);
            DocTokens {
                lower: toks.iter().map(text::Token::lower).collect(),
                spans: toks
                    .iter()
                    .map(|t| (t.start as u32, t.end as u32))
                    .collect(),
                char_len: d.text.chars().count() as u32,
            }
        })
        .collect();

    let mut postings: HashMap<String, Vec<Posting>> = HashMap::new();
    for (di, doc) in docs.iter().enumerate() {
        for (pos, tok) in doc.lower.iter().enumerate() {
            postings.entry(tok.clone()).or_default().push(Posting {
                doc: di as u32,
                pos: pos as u32,
            });
        }
    }

    Index {
        version: INDEX_FORMAT_VERSION,
        fingerprint: fingerprint(corpus),
        postings,
        docs,
    }
}

impl Index {
    pub fn doc_count(&self) -> usize {
        self.docs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    /// Occurrences of a single lowercased token as `(document position, token offset)`.
    pub fn postings(&self, token: &str) -> Vec<(usize, usize)> {
        self.postings
            .get(token)
            .map(|ps| {
                ps.iter()
                    .map(|p| (p.doc as usize, p.pos as usize))
                    .collect()
            })
            .unwrap_or_default()
    }

    /// Every whole-token occurrence of `phrase` as `(document position, char start, char end)`.
    pub fn phrase_hits(&self, phrase: &str) -> Vec<(usize, usize, usize)> {
        let query = lower_tokens(phrase);
        let Some(first) = query.first() else {
            return Vec::new();
        };
        let Some(list) = self.postings.get(first) else {
            return Vec::new();
        };
        list.iter()
            .filter_map(|p| {
                let doc = &self.docs[p.doc as usize];
                let pos = p.pos as usize;
                let end = pos + query.len();
                (end <= doc.lower.len() && doc.lower[pos..end] == query[..]).then(|| {
                    (
                        p.doc as usize,
                        doc.spans[pos].0 as usize,
                        doc.spans[end - 1].1 as usize,
                    )
                })
            })
            .collect()
    }

    /// True when this index was built from exactly this corpus.
    pub fn matches(&self, corpus: &Corpus) -> bool {
        self.version == INDEX_FORMAT_VERSION && self.fingerprint == fingerprint(corpus)
    }
}

/// One snippet per occurrence of `name` in the documents accepted by `scope`.
pub fn find_snippets(
    index: &Index,
    corpus: &Corpus,
    name: &str,
    params: SnippetParams,
    scope: impl Fn(&Document) -> bool,
) -> Vec<Snippet> {
    debug_assert_eq!(
        index.doc_count(),
        corpus.len(),
        "index built from another corpus"
    );
    let documents = corpus.documents();
    let mut accepted: HashMap<usize, bool> = HashMap::new();
    index
        .phrase_hits(name)
        .into_iter()
        .filter(|&(di, _, _)| *accepted.entry(di).or_insert_with(|| scope(&documents[di])))
        .filter_map(|(di, ms, me)| {
            let doc = &documents[di];
            let len = index.docs[di].char_len as usize;
            let (start, end) = centered_window(len, ms, me, params)?;
            Some(Snippet {
                doc_id: doc.doc_id.clone(),
                kind: doc.kind,
                char_start: start,
                char_end: end,
                window_text: text::char_slice(&doc.text, start, end).to_string(),
                match_start: ms - start,
                match_end: me.min(end) - start,
            })
        })
        .collect()
}

pub fn save_index(index: &Index, path: impl AsRef<Path>) -> io::Result<()> {
    util::write_atomic(path.as_ref(), |w| {
        serde_json::to_writer(w, index).map_err(io::Error::other)
    })
}

/// Loads a cached index, returning `None` when the cache is from another
/// corpus or format version.
pub fn load_index(path: impl AsRef<Path>, corpus: &Corpus) -> io::Result<Option<Index>> {
    let index: Index =
        serde_json::from_reader(BufReader::new(File::open(path)?)).map_err(io::Error::other)?;
    Ok(index.matches(corpus).then_some(index))
}
