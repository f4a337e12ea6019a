//! Seeded synthetic corpora with planted names and known context vocabularies.
//!
//! Every post about a planted name embeds the name in words drawn from that
//! name's context vocabulary (mixed with background words). Each of the
//! post's comments mentions the post's name with probability `mention_rate`
//! and otherwise a uniformly chosen other planted name, again surrounded by
//! the mentioned name's vocabulary. Optional chatter names are popular
//! people that show up in comments independently of the post.

use std::collections::HashSet;

use chrono::{DateTime, Duration, Utc};
use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Corpus, CorpusError, DocKind, Document};

const POST_WORDS: (usize, usize) = (28, 40);
const COMMENT_WORDS: (usize, usize) = (12, 22);
const SENTENCE_WORDS: usize = 11;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlantedName {
    pub name: String,
    pub context_vocabulary: Vec<String>,
    pub post_count: usize,
    /// Comments generated under each of this name's posts.
    pub comment_count: usize,
    pub mention_rate: f64,
}

/// A name mentioned in comments regardless of what the post is about.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatterName {
    pub name: String,
    #[serde(default)]
    pub context_vocabulary: Vec<String>,
    /// Probability that any single comment also mentions this name.
    pub rate: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub names: Vec<PlantedName>,
    #[serde(default)]
    pub chatter: Vec<ChatterName>,
    pub background_vocabulary: Vec<String>,
    /// Probability that a word slot draws from the mentioned name's vocabulary
    /// instead of the background.
    #[serde(default = "default_context_rate")]
    pub context_rate: f64,
    pub seed: u64,
}

fn default_context_rate() -> f64 {
    0.35
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), CorpusError> {
        let mut problems = Vec::new();
        let mut seen = HashSet::new();
        let in_unit = |x: f64| (0.0..=1.0).contains(&x);
        for (i, n) in self.names.iter().enumerate() {
            if n.name.trim().is_empty() {
                problems.push(format!("names[{i}].name is empty"));
            }
            if !seen.insert(crate::text::NameKey::new(&n.name)) {
                problems.push(format!("names[{i}].name {:?} is duplicated", n.name));
            }
            if !in_unit(n.mention_rate) {
                problems.push(format!(
                    "names[{i}].mention_rate {} is outside [0, 1]",
                    n.mention_rate
                ));
            }
            if n.context_vocabulary.is_empty() && self.background_vocabulary.is_empty() {
                problems.push(format!("names[{i}] has no words to draw from"));
            }
        }
        for (i, c) in self.chatter.iter().enumerate() {
            if c.name.trim().is_empty() {
                problems.push(format!("chatter[{i}].name is empty"));
            }
            if !seen.insert(crate::text::NameKey::new(&c.name)) {
                problems.push(format!("chatter[{i}].name {:?} is duplicated", c.name));
            }
            if !in_unit(c.rate) {
                problems.push(format!("chatter[{i}].rate {} is outside [0, 1]", c.rate));
            }
        }
        if !in_unit(self.context_rate) {
            problems.push(format!(
                "context_rate {} is outside [0, 1]",
                self.context_rate
            ));
        }
        if self.background_vocabulary.is_empty() && self.context_rate < 1.0 {
            problems.push("background_vocabulary is empty but context_rate < 1".into());
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(CorpusError::InvalidSpec(problems))
        }
    }
}

struct Writer<'a> {
    rng: ChaCha8Rng,
    spec: &'a SyntheticSpec,
}

impl Writer<'_> {
    fn word(&mut self, vocabulary: &[String]) -> String {
        let use_context = self.rng.random_bool(self.spec.context_rate);
        let pool = if (use_context && !vocabulary.is_empty())
            || self.spec.background_vocabulary.is_empty()
        {
            vocabulary
        } else {
            &self.spec.background_vocabulary
        };
        pool[self.rng.random_range(0..pool.len())].clone()
    }

    /// Builds a text of `n` words plus the given mentions, each placed at a
    /// random non-initial position and surrounded by its own vocabulary.
    fn compose(
        &mut self,
        range: (usize, usize),
        mentions: &[(&str, &[String])],
        default_vocab: &[String],
    ) -> String {
        let n = self.rng.random_range(range.0..=range.1);
        let mut slots: Vec<Slot> = Vec::with_capacity(n + mentions.len());
        let mut owner = vec![0usize; n];
        let mut positions = Vec::with_capacity(mentions.len());
        for m in 0..mentions.len() {
            let at = self.rng.random_range(1..n);
            positions.push((at, m));
            // Words within four slots of a mention take that mention's vocabulary.
            for (o, slot) in owner.iter_mut().enumerate() {
                if o.abs_diff(at) <= 4 {
                    *slot = m + 1;
                }
            }
        }
        for o in &owner {
            let vocab = match o {
                0 if mentions.is_empty() => default_vocab,
                0 => mentions[0].1,
                m => mentions[m - 1].1,
            };
            slots.push(Slot::Word(self.word(vocab)));
        }
        positions.sort();
        for &(at, m) in positions.iter().rev() {
            slots.insert(at, Slot::Name(mentions[m].0.to_string()));
        }
        render(&slots)
    }
}

enum Slot {
    Word(String),
    Name(String),
}

fn render(slots: &[Slot]) -> String {
    let mut out = String::new();
    let mut since_break = 0;
    for (i, slot) in slots.iter().enumerate() {
        let sentence_start = i == 0 || since_break == 0;
        if i > 0 {
            out.push(' ');
        }
        match slot {
            Slot::Name(name) => out.push_str(name),
            Slot::Word(w) if sentence_start => {
                let mut chars = w.chars();
                if let Some(first) = chars.next() {
                    out.extend(first.to_uppercase());
                    out.push_str(chars.as_str());
                }
            }
            Slot::Word(w) => out.push_str(w),
        }
        since_break += 1;
        let next_is_name = matches!(slots.get(i + 1), Some(Slot::Name(_)));
        if since_break >= SENTENCE_WORDS && i + 1 < slots.len() && !next_is_name {
            out.push('.');
            since_break = 0;
        }
    }
    out.push('.');
    out
}

/// Generates a corpus that is a pure function of `spec`.
pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<Corpus, CorpusError> {
    spec.validate()?;
    let mut writer = Writer {
        rng: ChaCha8Rng::seed_from_u64(spec.seed),
        spec,
    };
    let epoch: DateTime<Utc> = DateTime::from_timestamp(1_475_323_200, 0).expect("valid epoch");
    let mut clock = 0i64;
    let mut tick = || {
        clock += 1;
        epoch + Duration::minutes(clock)
    };

    let mut documents = Vec::new();
    for (ni, planted) in spec.names.iter().enumerate() {
        let others: Vec<usize> = (0..spec.names.len()).filter(|&j| j != ni).collect();
        for p in 0..planted.post_count {
            let post_id = format!("post-{ni:03}-{p:03}");
            let page = format!("page-{}", (ni + p) % 5);
            let text = writer.compose(
                POST_WORDS,
                &[(planted.name.as_str(), planted.context_vocabulary.as_slice())],
                &planted.context_vocabulary,
            );
            documents.push(Document {
                doc_id: post_id.clone(),
                kind: DocKind::Post,
                parent_id: None,
                page: page.clone(),
                created_at: tick(),
                text,
            });

            for c in 0..planted.comment_count {
                let own = writer.rng.random_bool(planted.mention_rate);
                let mentioned = if own {
                    Some(ni)
                } else {
                    others.choose(&mut writer.rng).copied()
                };
                let mut mentions: Vec<(&str, &[String])> = Vec::new();
                if let Some(m) = mentioned {
                    let n = &spec.names[m];
                    mentions.push((&n.name, &n.context_vocabulary));
                }
                for chatter in &spec.chatter {
                    if writer.rng.random_bool(chatter.rate) {
                        mentions.push((&chatter.name, &chatter.context_vocabulary));
                    }
                }
                let text = writer.compose(COMMENT_WORDS, &mentions, &spec.background_vocabulary);
                documents.push(Document {
                    doc_id: format!("comment-{ni:03}-{p:03}-{c:03}"),
                    kind: DocKind::Comment,
                    parent_id: Some(post_id.clone()),
                    page: page.clone(),
                    created_at: tick(),
                    text,
                });
            }
        }
    }
    Corpus::from_documents(documents)
}

const FIRST_NAMES: &[&str] = &[
    "Ada", "Bruno", "Clara", "Dario", "Elena", "Felix", "Greta", "Hugo", "Irene", "Jonas", "Karla",
    "Lorenzo", "Marta", "Nico", "Olga", "Pietro", "Quinn", "Rosa", "Stefan", "Tilde", "Ugo",
    "Vera", "Walter", "Xenia",
];
const LAST_NAMES: &[&str] = &[
    "Wong",
    "Albani",
    "Brandt",
    "Castell",
    "Duarte",
    "Engel",
    "Falk",
    "Gallo",
    "Hartig",
    "Ivers",
    "Jansen",
    "Kowal",
    "Lindqvist",
    "Moretti",
    "Nygard",
    "Orsini",
    "Pohl",
    "Quaranta",
    "Rinaldi",
    "Sorensen",
    "Trevisan",
    "Ulrich",
    "Valli",
    "Weber",
];
const CHATTER_NAMES: &[&str] = &["Max Power", "Lola Bright", "Otto Brenner", "Nina Sterling"];

const BACKGROUND: &[&str] = &[
    "the", "a", "and", "of", "to", "in", "that", "it", "is", "was", "for", "on", "with", "as",
    "this", "but", "they", "at", "be", "from", "have", "or", "by", "one", "had", "not", "what",
    "all", "were", "we", "when", "your", "can", "said", "there", "use", "an", "each", "which",
    "she", "do", "how", "their", "if", "will", "up", "about", "out", "many", "then", "them", "so",
    "some", "would", "other", "into", "more", "time", "could", "people",
];

const ONSETS: &[&str] = &[
    "b", "br", "c", "d", "dr", "f", "g", "gl", "k", "l", "m", "n", "p", "pl", "r", "s", "st", "t",
    "tr", "v", "z",
];
const NUCLEI: &[&str] = &["a", "e", "i", "o", "u", "ai", "ou"];
const CODAS: &[&str] = &["", "", "n", "r", "l", "s", "m", "x"];

/// Parameters for a standard planted-name experiment corpus.
///
/// Names, vocabularies and background words are generated deterministically;
/// the vocabulary seed is independent of `seed`, so two scenarios differing
/// only in `shared_fraction` draw identical mention structure.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub names: usize,
    pub vocabulary_size: usize,
    /// Fraction of each name's context vocabulary drawn from a pool shared by
    /// all names.
    pub shared_fraction: f64,
    pub post_count: usize,
    pub comment_count: usize,
    pub mention_rate: f64,
    /// `(rate)` per chatter name; names come from a fixed list.
    pub chatter_rates: Vec<f64>,
    /// Per-name overrides of `(post_count, comment_count)`, applied to the
    /// last names of the list.
    pub minor_names: Vec<(usize, usize)>,
    pub context_rate: f64,
    pub seed: u64,
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario {
            names: 10,
            vocabulary_size: 30,
            shared_fraction: 0.0,
            post_count: 20,
            comment_count: 50,
            mention_rate: 0.6,
            chatter_rates: Vec::new(),
            minor_names: Vec::new(),
            context_rate: default_context_rate(),
            seed: 0,
        }
    }
}

impl Scenario {
    pub fn name(i: usize) -> String {
        let first = FIRST_NAMES[i % FIRST_NAMES.len()];
        let last = LAST_NAMES[(i * 7 + i / LAST_NAMES.len()) % LAST_NAMES.len()];
        format!("{first} {last}")
    }

    pub fn chatter_name(i: usize) -> &'static str {
        CHATTER_NAMES[i % CHATTER_NAMES.len()]
    }

    pub fn to_spec(&self) -> SyntheticSpec {
        let mut vocab_rng = ChaCha8Rng::seed_from_u64(0x5eed_u64 ^ self.vocabulary_size as u64);
        let mut used: HashSet<String> = BACKGROUND.iter().map(|s| s.to_string()).collect();
        let mut fresh = |rng: &mut ChaCha8Rng| loop {
            let syllables = rng.random_range(2..=3);
            let mut w = String::new();
            for _ in 0..syllables {
                w.push_str(ONSETS.choose(rng).unwrap());
                w.push_str(NUCLEI.choose(rng).unwrap());
            }
            w.push_str(CODAS.choose(rng).unwrap());
            if used.insert(w.clone()) {
                return w;
            }
        };

        let shared_count = ((self.vocabulary_size as f64) * self.shared_fraction).round() as usize;
        let shared: Vec<String> = (0..shared_count).map(|_| fresh(&mut vocab_rng)).collect();
        let own: Vec<Vec<String>> = (0..self.names)
            .map(|_| {
                (0..self.vocabulary_size)
                    .map(|_| fresh(&mut vocab_rng))
                    .collect()
            })
            .collect();

        let minor_from = self.names.saturating_sub(self.minor_names.len());
        let names = (0..self.names)
            .map(|i| {
                let mut vocab = shared.clone();
                vocab.extend(
                    own[i]
                        .iter()
                        .take(self.vocabulary_size - shared_count)
                        .cloned(),
                );
                let (post_count, comment_count) = if i >= minor_from {
                    self.minor_names[i - minor_from]
                } else {
                    (self.post_count, self.comment_count)
                };
                PlantedName {
                    name: Self::name(i),
                    context_vocabulary: vocab,
                    post_count,
                    comment_count,
                    mention_rate: self.mention_rate,
                }
            })
            .collect();
        let chatter = self
            .chatter_rates
            .iter()
            .enumerate()
            .map(|(i, &rate)| {
                let mut vocab = shared.clone();
                vocab.extend((shared_count..self.vocabulary_size).map(|_| fresh(&mut vocab_rng)));
                ChatterName {
                    name: Self::chatter_name(i).to_string(),
                    context_vocabulary: vocab,
                    rate,
                }
            })
            .collect();

        SyntheticSpec {
            names,
            chatter,
            background_vocabulary: BACKGROUND.iter().map(|s| s.to_string()).collect(),
            context_rate: self.context_rate,
            seed: self.seed,
        }
    }

    /// Every planted and chatter name; a ready-made gazetteer.
    pub fn all_names(&self) -> Vec<String> {
        (0..self.names)
            .map(Self::name)
            .chain((0..self.chatter_rates.len()).map(|i| Self::chatter_name(i).to_string()))
            .collect()
    }
}
