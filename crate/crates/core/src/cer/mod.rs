//! Censored entity resolution.
//!
//! For every candidate name the training snippets are masked exactly the way
//! the censored posts were, so the classifier can only learn from the words
//! around a mask. The true name is labeled `ANON`, the rest `DUMBO1..`. A
//! censored post is assigned the class with the largest summed score over
//! all of its masked occurrences.

pub mod features;
pub mod model;

use std::collections::HashSet;
use std::io::{self, Write};

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::CandidateSet;
use crate::censorship::{replace_name, CensoredPost, MaskTokens};
use crate::corpus::Corpus;
use crate::snippet_index::{find_snippets, Index, Snippet, SnippetParams};
use crate::text::{self, lower_tokens, tokenize, NameKey};

pub use features::{context_features, FeatureSpec, MASK_PLACEHOLDER};
pub use model::{argmax, train, CerModel, ClassInfo, ClassLabel, Hyperparameters, TrainingSummary};

pub const DEFAULT_MIN_EXAMPLES: usize = 3;

#[derive(Debug, Error)]
pub enum CerError {
    #[error("training needs examples from at least two classes")]
    EmptyTrainingSet,
    #[error("no fresh mask token left for {0}")]
    TokenExhausted(String),
    #[error("model format: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Class order is candidate order, so ties go to the more frequent name.
pub fn classes_for(candidates: &CandidateSet) -> Vec<ClassInfo> {
    let truth = NameKey::new(&candidates.true_name);
    let mut next = 0;
    candidates
        .top_k
        .iter()
        .map(|name| {
            let label = if NameKey::new(name) == truth {
                ClassLabel::Anon
            } else {
                next += 1;
                ClassLabel::Dumbo(next)
            };
            ClassInfo {
                label,
                name: name.clone(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSnippets {
    pub name: String,
    pub snippets: Vec<Snippet>,
    /// Fewer than the minimum number of training snippets were found.
    pub insufficient: bool,
}

/// Snippets of every candidate outside the censored posts. Only snippets
/// strictly longer than `params.min_len` are kept.
pub fn fetch_training_snippets(
    index: &Index,
    corpus: &Corpus,
    candidates: &CandidateSet,
    excluded_posts: &HashSet<String>,
    params: SnippetParams,
    min_examples: usize,
) -> Vec<CandidateSnippets> {
    candidates
        .top_k
        .iter()
        .map(|name| {
            let snippets: Vec<Snippet> = find_snippets(index, corpus, name, params, |d| {
                !excluded_posts.contains(&d.doc_id)
            })
            .into_iter()
            .filter(|s| s.len() > params.min_len)
            .collect();
            CandidateSnippets {
                name: name.clone(),
                insufficient: snippets.len() < min_examples,
                snippets,
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainingExample {
    pub label: ClassLabel,
    pub doc_id: String,
    /// Lowercased tokens before the mask, in text order.
    pub left_context: Vec<String>,
    pub right_context: Vec<String>,
    /// The snippet after masking, for audit dumps.
    pub masked_text: String,
    /// Character span of this example's mask in `masked_text`.
    pub mask_span: (usize, usize),
}

/// Left and right contexts of each span in `spans`. Tokens starting at any
/// span are replaced by the placeholder.
pub fn occurrence_contexts(
    text: &str,
    spans: &[(usize, usize)],
) -> Vec<(Vec<String>, Vec<String>)> {
    let toks = tokenize(text);
    let starts: HashSet<usize> = spans.iter().map(|s| s.0).collect();
    let words: Vec<String> = toks
        .iter()
        .map(|t| {
            if starts.contains(&t.start) {
                MASK_PLACEHOLDER.to_string()
            } else {
                t.lower()
            }
        })
        .collect();
    spans
        .iter()
        .filter_map(|&(start, _)| {
            let at = toks.iter().position(|t| t.start == start)?;
            Some((words[..at].to_vec(), words[at + 1..].to_vec()))
        })
        .collect()
}

/// Masks each training snippet with a fresh token and labels it.
/// One example per snippet, centered on the snippet's own match.
pub fn build_examples(
    training: &[CandidateSnippets],
    classes: &[ClassInfo],
    tokens: &mut MaskTokens,
    rng: &mut impl Rng,
) -> Result<Vec<TrainingExample>, CerError> {
    let mut out = Vec::new();
    for cs in training {
        let key = NameKey::new(&cs.name);
        let Some(class) = classes.iter().find(|c| NameKey::new(&c.name) == key) else {
            continue;
        };
        let name = lower_tokens(&cs.name);
        for snippet in &cs.snippets {
            let token = tokens
                .draw(rng, &name)
                .ok_or_else(|| CerError::TokenExhausted(cs.name.clone()))?;
            let rep = replace_name(&snippet.window_text, &name, &token);
            let Some(focal) = rep
                .original_spans
                .iter()
                .position(|s| s.0 == snippet.match_start)
            else {
                continue;
            };
            let span = rep.token_spans[focal];
            let Some((left_context, right_context)) =
                occurrence_contexts(&rep.text, &rep.token_spans)
                    .into_iter()
                    .nth(focal)
            else {
                continue;
            };
            out.push(TrainingExample {
                label: class.label,
                doc_id: snippet.doc_id.clone(),
                left_context,
                right_context,
                masked_text: rep.text,
                mask_span: span,
            });
        }
    }
    Ok(out)
}

/// Writes one tab-separated line per example: label, document, and the
/// masked snippet with the example's mask wrapped in its label tag.
pub fn write_training_dump<W: Write>(examples: &[TrainingExample], mut w: W) -> io::Result<()> {
    for ex in examples {
        let (s, e) = ex.mask_span;
        let text = format!(
            "{}<{l}>{}</{l}>{}",
            text::char_slice(&ex.masked_text, 0, s),
            text::char_slice(&ex.masked_text, s, e),
            text::char_slice(&ex.masked_text, e, usize::MAX),
            l = ex.label
        );
        writeln!(
            w,
            "{}\t{}\t{}",
            ex.label,
            ex.doc_id,
            text.replace(['\t', '\n'], " ")
        )?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    /// Sum class scores over every masked occurrence.
    #[default]
    Sum,
    /// One vote per snippet; ties fall back to summed scores.
    MajorityVote,
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct ResolveOptions {
    pub aggregation: Aggregation,
    /// Abstain when the best score beats the runner-up by less than this.
    pub abstain_margin: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Resolution {
    pub post_id: String,
    /// Class scores per censored snippet, in class order.
    pub snippet_scores: Vec<Vec<f64>>,
    pub scores: Vec<f64>,
    pub predicted_class: Option<ClassLabel>,
    pub predicted_name: Option<String>,
}

/// Picks a class from per-snippet scores. `None` only on abstention or when
/// there are no classes.
pub fn decide(
    snippet_scores: &[Vec<f64>],
    classes: usize,
    options: ResolveOptions,
) -> (Vec<f64>, Option<usize>) {
    let mut total = vec![0.0; classes];
    for s in snippet_scores {
        for (t, v) in total.iter_mut().zip(s) {
            *t += v;
        }
    }
    let choice = match options.aggregation {
        Aggregation::Sum => argmax(&total),
        Aggregation::MajorityVote => {
            let mut votes = vec![0usize; classes];
            for s in snippet_scores {
                if let Some(c) = argmax(s) {
                    votes[c] += 1;
                }
            }
            let top = votes.iter().copied().max().unwrap_or(0);
            (0..classes).filter(|&c| votes[c] == top).fold(
                None,
                |best: Option<usize>, c| match best {
                    Some(b) if total[b] >= total[c] => Some(b),
                    _ => Some(c),
                },
            )
        }
    };
    let choice = match (choice, options.abstain_margin) {
        (Some(c), Some(margin)) if classes > 1 => {
            let runner_up = (0..classes)
                .filter(|&o| o != c)
                .map(|o| total[o])
                .fold(f64::NEG_INFINITY, f64::max);
            (total[c] - runner_up >= margin).then_some(c)
        }
        (c, _) => c,
    };
    (total, choice)
}

pub fn resolve(model: &CerModel, post: &CensoredPost, options: ResolveOptions) -> Resolution {
    let snippet_scores: Vec<Vec<f64>> = post
        .snippets
        .iter()
        .map(|s| {
            let mut acc = vec![0.0; model.classes().len()];
            for (left, right) in occurrence_contexts(&s.censored_text, &s.mask_spans()) {
                for (a, v) in acc.iter_mut().zip(model.score(&left, &right)) {
                    *a += v;
                }
            }
            acc
        })
        .collect();
    let (scores, choice) = decide(&snippet_scores, model.classes().len(), options);
    let class = choice.map(|c| &model.classes()[c]);
    Resolution {
        post_id: post.post_id.clone(),
        snippet_scores,
        scores,
        predicted_class: class.map(|c| c.label),
        predicted_name: class.map(|c| c.name.clone()),
    }
}
