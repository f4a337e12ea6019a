//! Simulated censorship: pick posts that mention a target name and replace
//! every occurrence of the name in their snippets with a random mask token.
//!
//! Mask tokens look like surnames (`Xhyclertd`): a capital ASCII letter
//! followed by lowercase letters. Each snippet gets its own token, every
//! occurrence inside that snippet shares it, and no token ever occurs in the
//! corpus or repeats within an experiment.
//!
//! The ground truth (which name was censored in which post) lives in
//! [`Answers`], separate from the censored snippets.

use std::collections::{BTreeMap, HashSet};
use std::io::{self, BufRead, Write};
use std::sync::Arc;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::snippet_index::{find_snippets, Index, Snippet, SnippetParams};
use crate::text::{self, find_phrase, lower_tokens, tokenize};

pub const DEFAULT_MAX_POSTS: usize = 20;
pub const DEFAULT_TOKEN_LEN: (usize, usize) = (6, 10);

#[derive(Debug, Error)]
pub enum CensorError {
    #[error("no post mentions {0:?}")]
    NameNotFound(String),
    #[error("could not draw a fresh mask token for a snippet of {0}")]
    TokenExhausted(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// How posts are chosen when more than `max_posts` mention the name.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PostSelection {
    #[default]
    Uniform,
    Chronological,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensorPlan {
    pub target_name: String,
    pub max_posts: usize,
    /// Selected posts in corpus order.
    pub selected_post_ids: Vec<String>,
    pub rng_seed: u64,
    pub selection: PostSelection,
}

/// Chooses up to `max_posts` posts that yield at least one snippet of `target_name`.
pub fn plan_censorship(
    index: &Index,
    corpus: &Corpus,
    target_name: &str,
    max_posts: usize,
    seed: u64,
    selection: PostSelection,
    params: SnippetParams,
) -> Result<CensorPlan, CensorError> {
    let mut posts: Vec<String> = Vec::new();
    for s in find_snippets(index, corpus, target_name, params, |d| d.is_post()) {
        if posts.last() != Some(&s.doc_id) {
            posts.push(s.doc_id);
        }
    }
    if posts.is_empty() {
        return Err(CensorError::NameNotFound(target_name.to_string()));
    }

    let selected = if posts.len() <= max_posts {
        posts
    } else {
        match selection {
            PostSelection::Uniform => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                let mut picks = index::sample(&mut rng, posts.len(), max_posts).into_vec();
                picks.sort_unstable();
                picks.into_iter().map(|i| posts[i].clone()).collect()
            }
            PostSelection::Chronological => {
                let mut by_time: Vec<(usize, String)> = posts.into_iter().enumerate().collect();
                by_time.sort_by_key(|(i, id)| (corpus.get(id).map(|d| d.created_at), *i));
                let mut chosen: Vec<(usize, String)> =
                    by_time.into_iter().take(max_posts).collect();
                chosen.sort();
                chosen.into_iter().map(|(_, id)| id).collect()
            }
        }
    };

    Ok(CensorPlan {
        target_name: target_name.to_string(),
        max_posts,
        selected_post_ids: selected,
        rng_seed: seed,
        selection,
    })
}

/// The snippets of the target name inside the planned posts.
pub fn planned_snippets(
    index: &Index,
    corpus: &Corpus,
    plan: &CensorPlan,
    params: SnippetParams,
) -> Vec<Snippet> {
    let selected: HashSet<&str> = plan.selected_post_ids.iter().map(String::as_str).collect();
    find_snippets(index, corpus, &plan.target_name, params, |d| {
        selected.contains(d.doc_id.as_str())
    })
}

/// Draws mask tokens that avoid the corpus vocabulary and each other.
#[derive(Debug, Clone)]
pub struct MaskTokens {
    vocabulary: Arc<HashSet<String>>,
    used: HashSet<String>,
    len_range: (usize, usize),
}

impl MaskTokens {
    pub fn new(vocabulary: impl Into<Arc<HashSet<String>>>) -> Self {
        Self::with_len_range(vocabulary, DEFAULT_TOKEN_LEN)
    }

    pub fn for_corpus(corpus: &Corpus) -> Self {
        Self::new(corpus.vocabulary())
    }

    pub fn with_len_range(
        vocabulary: impl Into<Arc<HashSet<String>>>,
        len_range: (usize, usize),
    ) -> Self {
        assert!(
            len_range.0 >= 2 && len_range.0 <= len_range.1,
            "bad token length range"
        );
        MaskTokens {
            vocabulary: vocabulary.into(),
            used: HashSet::new(),
            len_range,
        }
    }

    pub fn used(&self) -> &HashSet<String> {
        &self.used
    }

    /// A generator over the same vocabulary with no tokens used yet.
    pub fn fresh(&self) -> Self {
        MaskTokens {
            vocabulary: Arc::clone(&self.vocabulary),
            used: HashSet::new(),
            len_range: self.len_range,
        }
    }

    /// Marks tokens drawn elsewhere as taken.
    pub fn reserve<'a>(&mut self, tokens: impl IntoIterator<Item = &'a str>) {
        self.used.extend(tokens.into_iter().map(str::to_lowercase));
    }

    /// A fresh token containing none of `avoid` (lowercase fragments).
    pub fn draw(&mut self, rng: &mut impl Rng, avoid: &[String]) -> Option<String> {
        for _ in 0..1000 {
            let len = rng.random_range(self.len_range.0..=self.len_range.1);
            let mut token = String::with_capacity(len);
            token.push(char::from(b'A' + rng.random_range(0..26u8)));
            for _ in 1..len {
                token.push(char::from(b'a' + rng.random_range(0..26u8)));
            }
            let lower = token.to_lowercase();
            if self.vocabulary.contains(&lower)
                || self.used.contains(&lower)
                || avoid.iter().any(|a| lower.contains(a.as_str()))
            {
                continue;
            }
            self.used.insert(lower);
            return Some(token);
        }
        None
    }
}

/// A snippet with the target name masked. This is all the resolver sees.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensoredSnippet {
    pub post_id: String,
    pub mask_token: String,
    pub censored_text: String,
    pub char_start: usize,
    pub char_end: usize,
}

impl CensoredSnippet {
    /// Character spans of the mask token in `censored_text`.
    pub fn mask_spans(&self) -> Vec<(usize, usize)> {
        tokenize(&self.censored_text)
            .into_iter()
            .filter(|t| t.text == self.mask_token)
            .map(|t| (t.start, t.end))
            .collect()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensoredPost {
    pub post_id: String,
    pub snippets: Vec<CensoredSnippet>,
    /// Uncensored snippets, kept for auditing only; never serialized.
    #[serde(skip)]
    pub original_snippets: Vec<Snippet>,
}

/// Ground truth: the censored name of every post.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Answers {
    by_post: BTreeMap<String, String>,
}

#[derive(Serialize, Deserialize)]
struct AnswerLine {
    post_id: String,
    target_name: String,
}

impl Answers {
    pub fn insert(&mut self, post_id: impl Into<String>, target_name: impl Into<String>) {
        self.by_post.insert(post_id.into(), target_name.into());
    }

    pub fn get(&self, post_id: &str) -> Option<&str> {
        self.by_post.get(post_id).map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.by_post.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_post.is_empty()
    }

    pub fn extend(&mut self, other: Answers) {
        self.by_post.extend(other.by_post);
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.by_post.iter().map(|(p, n)| (p.as_str(), n.as_str()))
    }

    pub fn write<W: Write>(&self, mut w: W) -> io::Result<()> {
        for (post_id, target_name) in &self.by_post {
            let line = AnswerLine {
                post_id: post_id.clone(),
                target_name: target_name.clone(),
            };
            serde_json::to_writer(&mut w, &line)?;
            w.write_all(b"\n")?;
        }
        w.flush()
    }

    pub fn read<R: BufRead>(r: R) -> Result<Self, CensorError> {
        let mut answers = Answers::default();
        for (i, line) in r.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let a: AnswerLine = serde_json::from_str(&line).map_err(|e| CensorError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?;
            answers.insert(a.post_id, a.target_name);
        }
        Ok(answers)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CensoredSet {
    pub posts: Vec<CensoredPost>,
    pub answers: Answers,
}

/// Result of masking a name inside a piece of text.
#[derive(Debug, Clone, PartialEq, Eq)]
pub(crate) struct Replacement {
    pub text: String,
    /// Replaced surface forms, in order.
    pub surfaces: Vec<String>,
    /// Character spans of the occurrences in the original text.
    pub original_spans: Vec<(usize, usize)>,
    /// Character spans of the inserted token in the new text.
    pub token_spans: Vec<(usize, usize)>,
}

/// Replaces every whole-token occurrence of `name` in `text` with `token`.
pub(crate) fn replace_name(text: &str, name: &[String], token: &str) -> Replacement {
    let toks = tokenize(text);
    let lower: Vec<String> = toks.iter().map(text::Token::lower).collect();
    let token_len = token.chars().count();
    let mut out = Replacement {
        text: String::with_capacity(text.len()),
        surfaces: Vec::new(),
        original_spans: Vec::new(),
        token_spans: Vec::new(),
    };
    let mut out_len = 0usize;
    let mut cursor = 0usize;
    let mut next_free = 0usize;
    for start in find_phrase(&lower, name) {
        if start < next_free {
            continue;
        }
        let end = start + name.len();
        let (c0, c1) = (toks[start].start, toks[end - 1].end);
        let before = text::char_slice(text, cursor, c0);
        out.text.push_str(before);
        out_len += before.chars().count();
        out.text.push_str(token);
        out.token_spans.push((out_len, out_len + token_len));
        out_len += token_len;
        out.surfaces
            .push(text::char_slice(text, c0, c1).to_string());
        out.original_spans.push((c0, c1));
        cursor = c1;
        next_free = end;
    }
    out.text
        .push_str(text::char_slice(text, cursor, usize::MAX));
    out
}

/// True when `text` contains `name` as a whole-token, case-insensitive phrase.
pub fn mentions(text: &str, name: &str) -> bool {
    !find_phrase(&lower_tokens(text), &lower_tokens(name)).is_empty()
}

/// Masks the target name in every snippet of the planned posts.
///
/// `rng` drives token generation only; the same plan and snippets with a
/// different `rng` yield identical text apart from the tokens.
pub fn censor(
    plan: &CensorPlan,
    snippets: &[Snippet],
    tokens: &mut MaskTokens,
    rng: &mut impl Rng,
) -> Result<CensoredSet, CensorError> {
    let name = lower_tokens(&plan.target_name);
    let avoid: Vec<String> = name
        .iter()
        .filter(|t| t.chars().count() >= 3)
        .cloned()
        .collect();
    let mut posts: Vec<CensoredPost> = plan
        .selected_post_ids
        .iter()
        .map(|id| CensoredPost {
            post_id: id.clone(),
            snippets: Vec::new(),
            original_snippets: Vec::new(),
        })
        .collect();

    for snippet in snippets {
        let Some(post) = posts.iter_mut().find(|p| p.post_id == snippet.doc_id) else {
            continue;
        };
        let mut censored = None;
        for _ in 0..16 {
            let token = tokens
                .draw(rng, &avoid)
                .ok_or_else(|| CensorError::TokenExhausted(snippet.doc_id.clone()))?;
            let text = replace_name(&snippet.window_text, &name, &token).text;
            if !mentions(&text, &plan.target_name) {
                censored = Some((token, text));
                break;
            }
        }
        let (mask_token, censored_text) =
            censored.ok_or_else(|| CensorError::TokenExhausted(snippet.doc_id.clone()))?;
        post.snippets.push(CensoredSnippet {
            post_id: snippet.doc_id.clone(),
            mask_token,
            censored_text,
            char_start: snippet.char_start,
            char_end: snippet.char_end,
        });
        post.original_snippets.push(snippet.clone());
    }

    posts.retain(|p| !p.snippets.is_empty());
    let mut answers = Answers::default();
    for p in &posts {
        answers.insert(p.post_id.clone(), plan.target_name.clone());
    }
    Ok(CensoredSet { posts, answers })
}

/// Puts the original surface forms back in place of the mask token.
pub fn decensor(
    censored: &CensoredSnippet,
    original: &Snippet,
    target_name: &str,
) -> Option<String> {
    let surfaces = replace_name(&original.window_text, &lower_tokens(target_name), "").surfaces;
    let spans = censored.mask_spans();
    if spans.len() != surfaces.len() {
        return None;
    }
    let mut out = String::new();
    let mut cursor = 0;
    for ((s, e), surface) in spans.into_iter().zip(surfaces) {
        out.push_str(text::char_slice(&censored.censored_text, cursor, s));
        out.push_str(&surface);
        cursor = e;
    }
    out.push_str(text::char_slice(
        &censored.censored_text,
        cursor,
        usize::MAX,
    ));
    Some(out)
}

/// Writes one JSON line per censored snippet.
pub fn write_censored<W: Write>(posts: &[CensoredPost], mut w: W) -> io::Result<()> {
    for s in posts.iter().flat_map(|p| &p.snippets) {
        serde_json::to_writer(&mut w, s)?;
        w.write_all(b"\n")?;
    }
    w.flush()
}

/// Reads censored snippet lines, grouping consecutive lines by post.
pub fn read_censored<R: BufRead>(r: R) -> Result<Vec<CensoredPost>, CensorError> {
    let mut posts: Vec<CensoredPost> = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let s: CensoredSnippet = serde_json::from_str(&line).map_err(|e| CensorError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        match posts.last_mut() {
            Some(p) if p.post_id == s.post_id => p.snippets.push(s),
            _ => posts.push(CensoredPost {
                post_id: s.post_id.clone(),
                snippets: vec![s],
                original_snippets: Vec::new(),
            }),
        }
    }
    Ok(posts)
}
