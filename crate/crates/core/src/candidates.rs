//! Candidate names for a censored identity, harvested from the comments
//! under the censored posts.
//!
//! The `k` most frequent comment names become the candidates. When the true
//! name is not among them it replaces the k-th candidate, so the classifier
//! always has a chance to pick it; the natural rank is kept for the metrics.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::Corpus;
use crate::entity_recognition::{NameCounter, NameSource};
use crate::text::NameKey;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum CandidateError {
    #[error("{0:?} never occurs in the comments of the censored posts")]
    FairnessViolation(String),
    #[error("k must be at least 1")]
    InvalidK,
}

/// Whether candidates are counted over all censored posts of a name at once
/// or separately for each post.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScopeMode {
    #[default]
    Pooled,
    PerPost,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidateSet {
    pub post_scope: Vec<String>,
    pub counts: BTreeMap<String, usize>,
    /// Candidates ordered by descending count, ties by name.
    pub top_k: Vec<String>,
    /// 1-based natural rank of the true name among all comment names.
    pub true_name_rank: Option<usize>,
    /// The true name was inserted in place of the k-th natural candidate.
    pub forced: bool,
    pub k: usize,
    pub true_name: String,
}

impl CandidateSet {
    /// The true name is among the k most frequent names without forcing.
    pub fn in_top_k(&self) -> bool {
        self.true_name_rank.is_some_and(|r| r <= self.k)
    }

    /// Rank-1 natural candidate.
    pub fn most_frequent(&self) -> Option<String> {
        ranked(&self.counts).into_iter().next().map(|(n, _)| n)
    }

    pub fn position_of(&self, name: &str) -> Option<usize> {
        let key = NameKey::new(name);
        self.top_k.iter().position(|c| NameKey::new(c) == key)
    }
}

fn ranked(counts: &BTreeMap<String, usize>) -> Vec<(String, usize)> {
    let mut v: Vec<(String, usize)> = counts.iter().map(|(n, c)| (n.clone(), *c)).collect();
    v.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    v
}

/// Counts every name occurrence in the comments tied to `post_ids`.
pub fn extract_candidates(
    corpus: &Corpus,
    source: &dyn NameSource,
    post_ids: &[String],
) -> NameCounter {
    let mut counter = NameCounter::default();
    for post_id in post_ids {
        for comment_id in corpus.comments_of(post_id) {
            let Some(comment) = corpus.get(comment_id) else {
                continue;
            };
            for mention in source.names_in(comment) {
                if !source.is_denied(&NameKey::new(&mention.name)) {
                    counter.add(&mention.name);
                }
            }
        }
    }
    counter
}

/// Keeps the `k` most frequent names, forcing `true_name` in when needed.
pub fn select_top_k(
    counts: &NameCounter,
    k: usize,
    true_name: &str,
    post_scope: Vec<String>,
) -> Result<CandidateSet, CandidateError> {
    if k == 0 {
        return Err(CandidateError::InvalidK);
    }
    let ranked = counts.ranked();
    let key = NameKey::new(true_name);
    let rank = ranked
        .iter()
        .position(|(n, _)| NameKey::new(n) == key)
        .map(|p| p + 1)
        .ok_or_else(|| CandidateError::FairnessViolation(true_name.to_string()))?;

    let mut top_k: Vec<String> = ranked.iter().take(k).map(|(n, _)| n.clone()).collect();
    let forced = rank > k;
    if forced {
        top_k[k - 1] = ranked[rank - 1].0.clone();
    }

    Ok(CandidateSet {
        post_scope,
        counts: ranked.into_iter().collect(),
        top_k,
        true_name_rank: Some(rank),
        forced,
        k,
        true_name: true_name.to_string(),
    })
}
