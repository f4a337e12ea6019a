//! Shared fixtures and brute-force oracles for the integration tests.
#![allow(dead_code)]

use rand::seq::IndexedRandom;
use rand::Rng;
use unveil::corpus::{generate_synthetic, Corpus, DocKind, Document, Scenario};
use unveil::entity_recognition::{Recognizer, RecognizerConfig};
use unveil::pipeline::RunConfig;

pub fn doc(id: &str, parent: Option<&str>, text: &str) -> Document {
    Document {
        doc_id: id.into(),
        kind: if parent.is_some() {
            DocKind::Comment
        } else {
            DocKind::Post
        },
        parent_id: parent.map(Into::into),
        page: "page".into(),
        created_at: chrono::DateTime::from_timestamp(1_475_000_000, 0).unwrap(),
        text: text.into(),
    }
}

/// Gazetteer-only recognizer over the scenario's names.
pub fn scenario_recognizer(sc: &Scenario) -> Recognizer {
    Recognizer::new(&RecognizerConfig {
        use_heuristic: false,
        ..RecognizerConfig::with_gazetteer(sc.all_names())
    })
    .unwrap()
}

pub fn scenario_corpus(sc: &Scenario) -> Corpus {
    generate_synthetic(&sc.to_spec()).unwrap()
}

pub fn seeded_config(seed: u64, k: usize, nocc_min: usize) -> RunConfig {
    RunConfig {
        k,
        nocc_min,
        selection_seed: seed,
        mask_seed: seed.wrapping_add(1000),
        train_seed: seed.wrapping_add(2000),
        use_heuristic: false,
        ..RunConfig::default()
    }
}

// ---- brute-force retrieval oracle -------------------------------------------

fn apos(c: char) -> bool {
    c == '\'' || c == '\u{2019}'
}

/// Char spans of tokens, computed in two passes: raw words are maximal runs of
/// alphanumerics joined by single apostrophes; each raw word is then split at
/// its apostrophes, and a one-letter `s` segment that does not open a token is
/// a dropped possessive that closes the current one.
fn oracle_tokens(c: &[char]) -> Vec<(usize, usize)> {
    let mut raw = Vec::new();
    let mut p = 0;
    while p < c.len() {
        if !c[p].is_alphanumeric() {
            p += 1;
            continue;
        }
        let s = p;
        while p < c.len()
            && (c[p].is_alphanumeric()
                || (apos(c[p]) && c.get(p + 1).is_some_and(|n| n.is_alphanumeric())))
        {
            p += 1;
        }
        raw.push((s, p));
    }
    let mut out = Vec::new();
    for (s, e) in raw {
        let mut segments = Vec::new();
        let mut from = s;
        for q in s..e {
            if apos(c[q]) {
                segments.push((from, q));
                from = q + 1;
            }
        }
        segments.push((from, e));
        let mut open: Option<(usize, usize)> = None;
        for (a, b) in segments {
            let lone_s = b == a + 1 && (c[a] == 's' || c[a] == 'S');
            match open {
                Some(tok) if lone_s => {
                    out.push(tok);
                    open = None;
                }
                Some((ts, _)) => open = Some((ts, b)),
                None => open = Some((a, b)),
            }
        }
        out.extend(open);
    }
    out
}

fn eq_ci(a: char, b: char) -> bool {
    a.to_lowercase().eq(b.to_lowercase())
}

/// Character spans of every case-insensitive, whole-token occurrence of the
/// space-separated `phrase` in `text`.
pub fn brute_force_matches(text: &str, phrase: &str) -> Vec<(usize, usize)> {
    let c: Vec<char> = text.chars().collect();
    let words: Vec<Vec<char>> = phrase
        .split_whitespace()
        .map(|w| w.chars().collect())
        .collect();
    if words.is_empty() {
        return Vec::new();
    }
    let toks = oracle_tokens(&c);
    let same = |(s, e): (usize, usize), w: &[char]| {
        e - s == w.len() && c[s..e].iter().zip(w).all(|(&a, &b)| eq_ci(a, b))
    };
    toks.windows(words.len())
        .filter(|win| win.iter().zip(&words).all(|(&t, w)| same(t, w)))
        .map(|win| (win[0].0, win[words.len() - 1].1))
        .collect()
}

/// `(doc_id, char_start, char_end, match_start, match_end)` for every
/// occurrence, with a centered window of `window` chars, clipped, and dropped
/// below `min_len`.
pub fn brute_force_snippets(
    corpus: &Corpus,
    phrase: &str,
    window: usize,
    min_len: usize,
) -> Vec<(String, usize, usize, usize, usize)> {
    let mut out = Vec::new();
    for d in corpus.documents() {
        let len = d.text.chars().count();
        for (ms, me) in brute_force_matches(&d.text, phrase) {
            let m = me - ms;
            let (s, e) = if m >= window {
                (ms, ms + window)
            } else {
                let left = (window - m) / 2;
                let right = window - m - left;
                (ms.saturating_sub(left), (me + right).min(len))
            };
            if e - s >= min_len {
                out.push((d.doc_id.clone(), s, e, ms - s, me.min(e) - s));
            }
        }
    }
    out
}

const WORDS: &[&str] = &[
    "ab", "abe", "Abe", "xyz", "Xyz", "trump", "Trump", "TRUMP", "trumpet", "ryan", "Ryan",
    "Ryan's", "ryan’s", "O'Brien", "o'brien", "don't", "paul", "Paul", "über", "Über", "é", "ab1",
    "42", "it's", "the", "of", "s", "a's's", "x's'of", "S",
];
const SEPARATORS: &[&str] = &[
    " ", " ", " ", "  ", ", ", ". ", "-", "\n", "'", " '", "! ", "/", "’ ",
];

/// Random text of at most `max_chars` characters.
pub fn random_text(rng: &mut impl Rng, max_chars: usize) -> String {
    let target = rng.random_range(0..=max_chars);
    let mut s = String::new();
    while s.chars().count() < target {
        s.push_str(WORDS.choose(rng).unwrap());
        s.push_str(SEPARATORS.choose(rng).unwrap());
    }
    s.chars().take(target).collect()
}

pub fn random_corpus(rng: &mut impl Rng, max_docs: usize, max_chars: usize) -> Corpus {
    let n = rng.random_range(1..=max_docs);
    let mut docs = Vec::with_capacity(n);
    let mut posts: Vec<String> = Vec::new();
    for i in 0..n {
        let id = format!("d{i:03}");
        let text = random_text(rng, max_chars);
        if posts.is_empty() || rng.random_bool(0.3) {
            docs.push(doc(&id, None, &text));
            posts.push(id);
        } else {
            let parent = posts.choose(rng).unwrap().clone();
            docs.push(doc(&id, Some(&parent), &text));
        }
    }
    Corpus::from_documents(docs).unwrap()
}

/// A query phrase: usually one or two consecutive words of some document,
/// case-shuffled; sometimes a word that may not occur at all.
pub fn random_query(rng: &mut impl Rng, corpus: &Corpus) -> String {
    let d = corpus.documents().choose(rng).unwrap();
    let words: Vec<&str> = d
        .text
        .split(|c: char| !c.is_alphanumeric() && c != '\'')
        .filter(|w| !w.is_empty() && w.chars().all(char::is_alphanumeric))
        .collect();
    let phrase = if words.is_empty() || rng.random_bool(0.15) {
        ["zzz", "Ab", "trump", "paul ryan", "o'brien", "ryan"]
            .choose(rng)
            .unwrap()
            .to_string()
    } else {
        let i = rng.random_range(0..words.len());
        let n = if i + 1 < words.len() && rng.random_bool(0.4) {
            2
        } else {
            1
        };
        words[i..i + n].join(" ")
    };
    phrase
        .chars()
        .map(|ch| {
            if rng.random_bool(0.3) {
                ch.to_uppercase().next().unwrap()
            } else {
                ch
            }
        })
        .collect()
}
