//! Person-name recognition, corpus-wide name census, and external annotations.
//!
//! [`Recognizer`] combines a gazetteer (longest match wins) with an optional
//! capitalization heuristic: maximal runs of two or three capitalized tokens
//! separated only by whitespace. A sentence-initial run loses its first token
//! when that token is a common sentence opener, and single tokens only count
//! when introduced by a title marker ("Mr.", "Dr.", ...).
//!
//! Anything implementing [`NameSource`] can feed the census and candidate
//! extraction, including annotations imported from an external tagger.

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{Corpus, Document};
use crate::text::{self, normalize_whitespace, tokenize, NameKey, Token};

pub const DEFAULT_DENYLIST: &[&str] = &["Facebook", "Wikileaks", "Twitter", "Google"];
pub const DEFAULT_TITLE_MARKERS: &[&str] = &[
    "Mr",
    "Mrs",
    "Ms",
    "Dr",
    "Prof",
    "Sen",
    "Senator",
    "Rep",
    "Gov",
    "Governor",
    "President",
    "Secretary",
    "Judge",
    "Gen",
    "Rev",
    "Sir",
];

/// Capitalized words that open sentences without being part of a name.
const SENTENCE_OPENERS: &[&str] = &[
    "a",
    "according",
    "after",
    "all",
    "also",
    "an",
    "and",
    "as",
    "at",
    "before",
    "but",
    "dear",
    "even",
    "every",
    "for",
    "former",
    "he",
    "her",
    "here",
    "hey",
    "hi",
    "his",
    "how",
    "however",
    "i",
    "if",
    "in",
    "it",
    "its",
    "just",
    "last",
    "many",
    "meanwhile",
    "most",
    "my",
    "new",
    "next",
    "no",
    "not",
    "now",
    "oh",
    "on",
    "only",
    "our",
    "please",
    "she",
    "so",
    "some",
    "thank",
    "thanks",
    "that",
    "the",
    "their",
    "then",
    "there",
    "these",
    "they",
    "this",
    "those",
    "today",
    "tomorrow",
    "tonight",
    "we",
    "well",
    "what",
    "when",
    "where",
    "while",
    "who",
    "why",
    "with",
    "yes",
    "yesterday",
    "you",
    "your",
];

#[derive(Debug, Error)]
pub enum NerError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("annotation references unknown document {0}")]
    UnknownDocument(String),
    #[error("annotation {name:?} at offset {offset} does not match the text of {doc_id}")]
    OffsetMismatch {
        doc_id: String,
        name: String,
        offset: usize,
    },
    #[error("{0:?} is both in the gazetteer and the denylist")]
    Conflict(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RecognizerConfig {
    pub gazetteer: BTreeSet<String>,
    pub title_markers: BTreeSet<String>,
    pub denylist: BTreeSet<String>,
    pub use_heuristic: bool,
}

impl Default for RecognizerConfig {
    fn default() -> Self {
        RecognizerConfig {
            gazetteer: BTreeSet::new(),
            title_markers: DEFAULT_TITLE_MARKERS
                .iter()
                .map(|s| s.to_string())
                .collect(),
            denylist: DEFAULT_DENYLIST.iter().map(|s| s.to_string()).collect(),
            use_heuristic: true,
        }
    }
}

impl RecognizerConfig {
    pub fn with_gazetteer<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        RecognizerConfig {
            gazetteer: names.into_iter().map(Into::into).collect(),
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), NerError> {
        let denied: HashSet<NameKey> = self.denylist.iter().map(|d| NameKey::new(d)).collect();
        match self
            .gazetteer
            .iter()
            .find(|g| denied.contains(&NameKey::new(g)))
        {
            Some(g) => Err(NerError::Conflict(g.clone())),
            None => Ok(()),
        }
    }
}

/// A recognized name: its exact surface text and character offset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct NameMention {
    pub name: String,
    pub offset: usize,
}

/// Anything that can list the person names occurring in a document.
pub trait NameSource: Sync {
    fn names_in(&self, doc: &Document) -> Vec<NameMention>;

    /// Names that must never be counted.
    fn is_denied(&self, _key: &NameKey) -> bool {
        false
    }
}

fn key_tokens(s: &str) -> Vec<String> {
    text::lower_tokens(s)
}

fn contains_seq(haystack: &[String], needle: &[String]) -> bool {
    !needle.is_empty() && haystack.windows(needle.len()).any(|w| w == needle)
}

/// Compiled form of a [`RecognizerConfig`].
#[derive(Debug, Clone)]
pub struct Recognizer {
    /// First lowercased token → gazetteer entries as token lists, longest first.
    gazetteer: HashMap<String, Vec<Vec<String>>>,
    titles: HashSet<String>,
    denylist: Vec<Vec<String>>,
    use_heuristic: bool,
}

impl Recognizer {
    pub fn new(config: &RecognizerConfig) -> Result<Self, NerError> {
        config.validate()?;
        let mut gazetteer: HashMap<String, Vec<Vec<String>>> = HashMap::new();
        for entry in &config.gazetteer {
            let toks = key_tokens(entry);
            if let Some(first) = toks.first() {
                gazetteer.entry(first.clone()).or_default().push(toks);
            }
        }
        for entries in gazetteer.values_mut() {
            entries.sort_by(|a, b| b.len().cmp(&a.len()).then_with(|| a.cmp(b)));
            entries.dedup();
        }
        Ok(Recognizer {
            gazetteer,
            titles: config
                .title_markers
                .iter()
                .map(|t| t.trim_end_matches('.').to_lowercase())
                .collect(),
            denylist: config
                .denylist
                .iter()
                .map(|d| key_tokens(d))
                .filter(|t| !t.is_empty())
                .collect(),
            use_heuristic: config.use_heuristic,
        })
    }

    fn denied_tokens(&self, toks: &[String]) -> bool {
        self.denylist.iter().any(|d| contains_seq(toks, d))
    }

    /// All names in `text`, ordered by offset.
    pub fn recognize(&self, text: &str) -> Vec<NameMention> {
        let tokens = tokenize(text);
        let lower: Vec<String> = tokens.iter().map(Token::lower).collect();
        let chars: Vec<char> = text.chars().collect();
        let gap = |a: usize, b: usize| -> String {
            chars[tokens[a].end..tokens[b].start].iter().collect()
        };

        let mut spans: Vec<(usize, usize)> = Vec::new();
        let mut covered = vec![false; tokens.len()];

        let mut i = 0;
        while i < tokens.len() {
            let hit = self.gazetteer.get(&lower[i]).and_then(|entries| {
                entries
                    .iter()
                    .find(|e| i + e.len() <= lower.len() && lower[i..i + e.len()] == e[..])
            });
            match hit {
                Some(entry) => {
                    let end = i + entry.len();
                    covered[i..end].iter_mut().for_each(|c| *c = true);
                    spans.push((i, end));
                    i = end;
                }
                None => i += 1,
            }
        }

        if self.use_heuristic {
            let mut i = 0;
            while i < tokens.len() {
                if covered[i] || !tokens[i].is_capitalized() {
                    i += 1;
                    continue;
                }
                let mut j = i + 1;
                while j < tokens.len()
                    && !covered[j]
                    && tokens[j].is_capitalized()
                    && gap(j - 1, j).chars().all(char::is_whitespace)
                {
                    j += 1;
                }
                if let Some(span) = self.heuristic_span(&tokens, &lower, i, j, &gap) {
                    spans.push(span);
                }
                i = j;
            }
        }

        spans.sort();
        spans
            .into_iter()
            .map(|(a, b)| NameMention {
                name: chars[tokens[a].start..tokens[b - 1].end].iter().collect(),
                offset: tokens[a].start,
            })
            .collect()
    }

    /// Trims a capitalized run `[a, b)` down to a plausible name, if any.
    fn heuristic_span(
        &self,
        tokens: &[Token<'_>],
        lower: &[String],
        mut a: usize,
        mut b: usize,
        gap: &dyn Fn(usize, usize) -> String,
    ) -> Option<(usize, usize)> {
        while b > a + 1 && self.titles.contains(&lower[b - 1]) {
            b -= 1;
        }
        let after_title = a > 0 && self.titles.contains(&lower[a - 1]) && {
            let g = gap(a - 1, a);
            g.trim_start_matches('.').chars().all(char::is_whitespace)
        };
        let sentence_initial = !after_title
            && (a == 0 || gap(a - 1, a).contains(['.', '!', '?', '\n']))
            && !tokens[a].text.chars().all(char::is_uppercase);

        let mut titled = after_title;
        if self.titles.contains(&lower[a]) && b - a > 1 {
            titled = true;
            a += 1;
        } else if sentence_initial && SENTENCE_OPENERS.contains(&lower[a].as_str()) {
            a += 1;
        }

        let len = b.saturating_sub(a);
        let plausible = (2..=3).contains(&len) || (titled && len == 1);
        (plausible && !self.denied_tokens(&lower[a..b])).then_some((a, b))
    }
}

impl NameSource for Recognizer {
    fn names_in(&self, doc: &Document) -> Vec<NameMention> {
        self.recognize(&doc.text)
    }

    fn is_denied(&self, key: &NameKey) -> bool {
        self.denied_tokens(&key_tokens(key.as_str()))
    }
}

/// One-shot recognition; compile a [`Recognizer`] when processing many texts.
pub fn recognize_names(
    text: &str,
    config: &RecognizerConfig,
) -> Result<Vec<NameMention>, NerError> {
    Ok(Recognizer::new(config)?.recognize(text))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CensusEntry {
    pub name: String,
    pub count: usize,
}

/// Name occurrence counts, sorted by descending count then name.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NameCensus {
    pub entries: Vec<CensusEntry>,
    pub min_occurrences: usize,
}

impl NameCensus {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn count(&self, name: &str) -> Option<usize> {
        let key = NameKey::new(name);
        self.entries
            .iter()
            .find(|e| NameKey::new(&e.name) == key)
            .map(|e| e.count)
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.entries.iter().map(|e| e.name.as_str())
    }

    /// The same census under a stricter threshold. Lower thresholds than the
    /// one already applied have no effect.
    pub fn with_threshold(&self, min_occurrences: usize) -> NameCensus {
        let min = min_occurrences.max(self.min_occurrences);
        NameCensus {
            entries: self
                .entries
                .iter()
                .filter(|e| e.count >= min)
                .cloned()
                .collect(),
            min_occurrences: min,
        }
    }
}

/// Per-name counts keyed by [`NameKey`], remembering the first-seen surface form.
#[derive(Debug, Clone, Default)]
pub struct NameCounter {
    counts: HashMap<NameKey, (String, usize)>,
}

impl NameCounter {
    pub fn add(&mut self, surface: &str) {
        let key = NameKey::new(surface);
        self.counts
            .entry(key)
            .or_insert_with(|| (normalize_whitespace(surface), 0))
            .1 += 1;
    }

    pub fn get(&self, name: &str) -> usize {
        self.counts.get(&NameKey::new(name)).map_or(0, |e| e.1)
    }

    /// `(canonical name, count)` sorted by descending count, ties by name.
    pub fn ranked(&self) -> Vec<(String, usize)> {
        let mut out: Vec<(String, usize)> = self.counts.values().cloned().collect();
        out.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
        out
    }

    pub fn retain(&mut self, mut keep: impl FnMut(&NameKey, usize) -> bool) {
        self.counts.retain(|k, v| keep(k, v.1));
    }
}

/// Counts names over the documents accepted by `filter`. Denied names are
/// removed before the threshold is applied.
pub fn census(
    corpus: &Corpus,
    source: &dyn NameSource,
    min_occurrences: usize,
    filter: impl Fn(&Document) -> bool + Sync,
) -> NameCensus {
    assert!(min_occurrences >= 1, "min_occurrences must be at least 1");
    let per_doc: Vec<Vec<NameMention>> = corpus
        .documents()
        .par_iter()
        .map(|d| {
            if filter(d) {
                source.names_in(d)
            } else {
                Vec::new()
            }
        })
        .collect();

    let mut counter = NameCounter::default();
    for mention in per_doc.iter().flatten() {
        counter.add(&mention.name);
    }
    counter.retain(|k, count| !source.is_denied(k) && count >= min_occurrences);

    NameCensus {
        entries: counter
            .ranked()
            .into_iter()
            .map(|(name, count)| CensusEntry { name, count })
            .collect(),
        min_occurrences,
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
struct AnnotationLine {
    doc_id: String,
    name: String,
    offset: usize,
}

/// Names supplied by an external tagger, one list per document.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Annotations {
    by_doc: HashMap<String, Vec<NameMention>>,
    denylist: Vec<Vec<String>>,
}

impl Annotations {
    pub fn get(&self, doc_id: &str) -> &[NameMention] {
        self.by_doc
            .get(doc_id)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    pub fn len(&self) -> usize {
        self.by_doc.values().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Applies a denylist to censuses built from these annotations.
    pub fn with_denylist<I: IntoIterator<Item = S>, S: AsRef<str>>(mut self, denylist: I) -> Self {
        self.denylist = denylist
            .into_iter()
            .map(|d| key_tokens(d.as_ref()))
            .filter(|t| !t.is_empty())
            .collect();
        self
    }
}

impl NameSource for Annotations {
    fn names_in(&self, doc: &Document) -> Vec<NameMention> {
        self.get(&doc.doc_id).to_vec()
    }

    fn is_denied(&self, key: &NameKey) -> bool {
        let toks = key_tokens(key.as_str());
        self.denylist.iter().any(|d| contains_seq(&toks, d))
    }
}

/// Reads `{"doc_id", "name", "offset"}` lines, checking each against the corpus.
pub fn read_annotations<R: BufRead>(reader: R, corpus: &Corpus) -> Result<Annotations, NerError> {
    let mut by_doc: HashMap<String, Vec<NameMention>> = HashMap::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let a: AnnotationLine = serde_json::from_str(&line).map_err(|e| NerError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        let doc = corpus
            .get(&a.doc_id)
            .ok_or_else(|| NerError::UnknownDocument(a.doc_id.clone()))?;
        let len = a.name.chars().count();
        if text::char_slice(&doc.text, a.offset, a.offset + len) != a.name {
            return Err(NerError::OffsetMismatch {
                doc_id: a.doc_id,
                name: a.name,
                offset: a.offset,
            });
        }
        by_doc.entry(a.doc_id).or_default().push(NameMention {
            name: a.name,
            offset: a.offset,
        });
    }
    for list in by_doc.values_mut() {
        list.sort_by(|x, y| x.offset.cmp(&y.offset).then_with(|| x.name.cmp(&y.name)));
    }
    Ok(Annotations {
        by_doc,
        denylist: Vec::new(),
    })
}

pub fn import_annotations(
    path: impl AsRef<Path>,
    corpus: &Corpus,
) -> Result<Annotations, NerError> {
    read_annotations(BufReader::new(File::open(path)?), corpus)
}

/// Writes every name found by `source` in the annotation line format.
pub fn export_annotations<W: Write>(
    corpus: &Corpus,
    source: &dyn NameSource,
    mut writer: W,
) -> io::Result<()> {
    for doc in corpus.documents() {
        for m in source.names_in(doc) {
            let line = AnnotationLine {
                doc_id: doc.doc_id.clone(),
                name: m.name,
                offset: m.offset,
            };
            serde_json::to_writer(&mut writer, &line)?;
            writer.write_all(b"\n")?;
        }
    }
    writer.flush()
}

/// Reads a plain-text name list: one entry per line, `#` starts a comment.
pub fn read_name_list(path: impl AsRef<Path>) -> io::Result<BTreeSet<String>> {
    let file = BufReader::new(File::open(path)?);
    let mut out = BTreeSet::new();
    for line in file.lines() {
        let line = line?;
        let entry = line.split('#').next().unwrap_or("").trim();
        if !entry.is_empty() {
            out.insert(normalize_whitespace(entry));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::DocKind;
    use chrono::DateTime;

    fn names(text: &str, config: &RecognizerConfig) -> Vec<String> {
        recognize_names(text, config)
            .unwrap()
            .into_iter()
            .map(|m| m.name)
            .collect()
    }

    fn heuristic_only() -> RecognizerConfig {
        RecognizerConfig::default()
    }

    #[test]
    fn gazetteer_exact_hit() {
        let config = RecognizerConfig {
            use_heuristic: false,
            ..RecognizerConfig::with_gazetteer(["Paul Ryan", "Donald Trump"])
        };
        let found = recognize_names("Paul Ryan praised Trump", &config).unwrap();
        assert_eq!(
            found,
            [NameMention {
                name: "Paul Ryan".into(),
                offset: 0
            }]
        );
        assert!(recognize_names("", &config).unwrap().is_empty());
    }

    #[test]
    fn gazetteer_longest_match_wins() {
        let config = RecognizerConfig {
            use_heuristic: false,
            ..RecognizerConfig::with_gazetteer(["Donald", "Donald Trump", "Donald Trump Jr"])
        };
        assert_eq!(
            names("so donald trump jr said", &config),
            ["donald trump jr"]
        );
        assert_eq!(
            names("Donald Trump and Donald", &config),
            ["Donald Trump", "Donald"]
        );
    }

    #[test]
    fn heuristic_basic_sentence() {
        let found = names(
            "Yesterday Mary Jones met Bob Smith in Medellín",
            &heuristic_only(),
        );
        assert_eq!(found, ["Mary Jones", "Bob Smith"]);
    }

    #[test]
    fn heuristic_titles_and_openers() {
        let c = heuristic_only();
        assert_eq!(names("We met Dr. Smith today.", &c), ["Smith"]);
        assert_eq!(names("President Obama spoke", &c), ["Obama"]);
        assert!(names("The senator spoke. Yesterday Mary left.", &c).is_empty());
        assert!(names("Chicago is big. Boston too.", &c).is_empty());
        assert!(names("One Two Three Four Five are words", &c).is_empty());
        assert_eq!(
            names("Ask Bob Smith, Mary Jones", &c),
            ["Ask Bob Smith", "Mary Jones"]
        );
    }

    #[test]
    fn denylist_blocks_heuristic_names() {
        let c = heuristic_only();
        assert!(names("we watched Facebook Live all night", &c).is_empty());
        assert!(names("we watched Google Maps Street", &c).is_empty());
    }

    #[test]
    fn gazetteer_denylist_conflict_rejected() {
        let mut c = RecognizerConfig::with_gazetteer(["Twitter"]);
        assert!(matches!(Recognizer::new(&c), Err(NerError::Conflict(_))));
        c.denylist.clear();
        assert!(Recognizer::new(&c).is_ok());
    }

    #[test]
    fn offsets_point_at_names() {
        let c = RecognizerConfig::with_gazetteer(["José Álvarez"]);
        let text = "Señor said: josé   álvarez and Mary Ann Lee disagree with Medellín Cartel";
        for m in recognize_names(text, &c).unwrap() {
            let len = m.name.chars().count();
            assert_eq!(text::char_slice(text, m.offset, m.offset + len), m.name);
        }
        assert_eq!(
            names(text, &c),
            ["josé   álvarez", "Mary Ann Lee", "Medellín Cartel"]
        );
    }

    /// Hand-annotated sentences: (text, expected names).
    const FIXTURE: &[(&str, &[&str])] = &[
        (
            "Yesterday Mary Jones met Bob Smith in Medellín.",
            &["Mary Jones", "Bob Smith"],
        ),
        (
            "The mayor thanked Rahm Emanuel for the speech.",
            &["Rahm Emanuel"],
        ),
        ("Mike Pence arrived late to the rally.", &["Mike Pence"]),
        (
            "I think Bernie Sanders would have won.",
            &["Bernie Sanders"],
        ),
        ("Nobody expected that from Gary Johnson.", &["Gary Johnson"]),
        ("When Mitt Romney lost, he went home.", &["Mitt Romney"]),
        ("Ask Dr. Carson about that.", &["Carson"]),
        ("Mr. Giuliani was the mayor of the city.", &["Giuliani"]),
        ("She said Hillary Clinton lied again.", &["Hillary Clinton"]),
        (
            "Colin Kaepernick kneeled during the anthem.",
            &["Colin Kaepernick"],
        ),
        (
            "Paul Ryan and Mitch McConnell disagree.",
            &["Paul Ryan", "Mitch McConnell"],
        ),
        ("Great article about Ryan Lochte today.", &["Ryan Lochte"]),
        ("Governor Rick Scott signed the bill.", &["Rick Scott"]),
        ("The weather is nice in Miami.", &[]),
        ("Honestly this is ridiculous.", &[]),
        ("Abraham Lincoln would be ashamed.", &["Abraham Lincoln"]),
        ("They shared it on Facebook again.", &[]),
        (
            "Our thoughts go to Ben Carson and his family.",
            &["Ben Carson"],
        ),
        ("Ms. Warren pushed back hard.", &["Warren"]),
        ("Why does Donald Trump keep tweeting?", &["Donald Trump"]),
        ("Sadly nothing changed.", &[]),
        (
            "Last week Elizabeth Warren spoke twice.",
            &["Elizabeth Warren"],
        ),
        ("If Joe Biden runs, he wins.", &["Joe Biden"]),
        ("Chris Christie was not invited.", &["Chris Christie"]),
        ("My vote goes to Jill Stein.", &["Jill Stein"]),
        ("This is why Barack Obama matters.", &["Barack Obama"]),
        ("Read the Twitter thread first.", &[]),
        (
            "Then Ted Cruz and Marco Rubio debated.",
            &["Ted Cruz", "Marco Rubio"],
        ),
        (
            "Tim Kaine spoke before Mike Pence did.",
            &["Tim Kaine", "Mike Pence"],
        ),
        ("Senator Bernie Sanders endorsed her.", &["Bernie Sanders"]),
    ];

    #[test]
    fn heuristic_matches_hand_annotation() {
        assert_eq!(FIXTURE.len(), 30);
        let c = heuristic_only();
        for (text, expected) in FIXTURE {
            assert_eq!(names(text, &c), *expected, "{text}");
        }
    }

    fn doc(id: &str, kind: DocKind, parent: Option<&str>, text: &str) -> Document {
        Document {
            doc_id: id.into(),
            kind,
            parent_id: parent.map(Into::into),
            page: "p".into(),
            created_at: DateTime::from_timestamp(0, 0).unwrap(),
            text: text.into(),
        }
    }

    fn toy_corpus() -> Corpus {
        Corpus::from_documents(vec![
            doc(
                "p1",
                DocKind::Post,
                None,
                "Ada Wong met Paul Ryan and Ada Wong.",
            ),
            doc(
                "c1",
                DocKind::Comment,
                Some("p1"),
                "ada wong again, also Ada  Wong",
            ),
            doc(
                "c2",
                DocKind::Comment,
                Some("p1"),
                "Paul Ryan. Facebook Live rocks",
            ),
            doc("c3", DocKind::Comment, Some("p1"), "Ada Wong for president"),
        ])
        .unwrap()
    }

    #[test]
    fn census_threshold_and_canonical_form() {
        let corpus = toy_corpus();
        let rec =
            Recognizer::new(&RecognizerConfig::with_gazetteer(["Ada Wong", "Paul Ryan"])).unwrap();
        let all = census(&corpus, &rec, 1, |_| true);
        assert_eq!(all.count("ada wong"), Some(5));
        assert_eq!(all.entries[0].name, "Ada Wong");
        assert_eq!(all.count("Paul Ryan"), Some(2));
        assert!(all.count("Facebook Live").is_none());

        assert!(census(&corpus, &rec, 6, |_| true)
            .count("Ada Wong")
            .is_none());
        assert_eq!(census(&corpus, &rec, 5, |_| true).len(), 1);

        let comments_only = census(&corpus, &rec, 1, |d| d.is_comment());
        assert_eq!(comments_only.count("Ada Wong"), Some(3));
        assert_eq!(all.with_threshold(3), census(&corpus, &rec, 3, |_| true));
    }

    #[test]
    fn annotations_import_and_errors() {
        let corpus = toy_corpus();
        let ok = r#"{"doc_id":"p1","name":"Paul Ryan","offset":13}"#;
        let ann = read_annotations(ok.as_bytes(), &corpus).unwrap();
        assert_eq!(ann.len(), 1);
        assert_eq!(ann.get("p1")[0].name, "Paul Ryan");

        let missing = r#"{"doc_id":"zzz","name":"Paul Ryan","offset":13}"#;
        assert!(matches!(
            read_annotations(missing.as_bytes(), &corpus),
            Err(NerError::UnknownDocument(d)) if d == "zzz"
        ));
        let shifted = r#"{"doc_id":"p1","name":"Paul Ryan","offset":12}"#;
        assert!(matches!(
            read_annotations(shifted.as_bytes(), &corpus),
            Err(NerError::OffsetMismatch { .. })
        ));
        assert!(matches!(
            read_annotations("{".as_bytes(), &corpus),
            Err(NerError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn export_then_import_preserves_entities() {
        let corpus = toy_corpus();
        let rec = Recognizer::new(&RecognizerConfig::with_gazetteer(["Ada Wong"])).unwrap();
        let mut buf = Vec::new();
        export_annotations(&corpus, &rec, &mut buf).unwrap();
        let ann = read_annotations(buf.as_slice(), &corpus).unwrap();
        for d in corpus.documents() {
            assert_eq!(ann.names_in(d), rec.names_in(d), "{}", d.doc_id);
        }
        let ann = ann.with_denylist(DEFAULT_DENYLIST);
        assert_eq!(
            census(&corpus, &ann, 1, |_| true),
            census(&corpus, &rec, 1, |_| true)
        );
    }

    #[test]
    fn name_list_file_format() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("names.txt");
        std::fs::write(&path, "# people\nPaul  Ryan\n\nMike Pence # VP\n").unwrap();
        let list = read_name_list(&path).unwrap();
        assert_eq!(
            list.into_iter().collect::<Vec<_>>(),
            ["Mike Pence", "Paul Ryan"]
        );
    }
}
