//! Posts, comments, and their line-delimited JSON representation.
//!
//! Each line of a corpus file is one [`Document`]:
//!
//! ```text
//! {"id":"p1","kind":"post","page":"nytimes","created_at":"2016-10-01T12:00:00Z","text":"..."}
//! {"id":"c1","kind":"comment","parent_id":"p1","page":"nytimes","created_at":"...","text":"..."}
//! ```
//!
//! Replies to comments are expected to be flattened: a comment's `parent_id`
//! always names the root post.

mod synthetic;

use std::collections::{HashMap, HashSet};
use std::fs::File;
use std::io::{self, BufRead, BufReader, Write};
use std::path::Path;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::text;
use crate::util;

pub use synthetic::{generate_synthetic, ChatterName, PlantedName, Scenario, SyntheticSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DocKind {
    Post,
    Comment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    #[serde(rename = "id")]
    pub doc_id: String,
    pub kind: DocKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub parent_id: Option<String>,
    pub page: String,
    /// Kept for provenance; no stage reads it.
    pub created_at: DateTime<Utc>,
    pub text: String,
}

impl Document {
    pub fn is_post(&self) -> bool {
        self.kind == DocKind::Post
    }

    pub fn is_comment(&self) -> bool {
        self.kind == DocKind::Comment
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("comment {comment} references missing post {parent}")]
    DanglingParent { comment: String, parent: String },
    #[error("duplicate document id {0}")]
    DuplicateId(String),
    #[error("document {doc_id}: {reason}")]
    InvalidLink { doc_id: String, reason: String },
    #[error("invalid synthetic spec: {}", .0.join("; "))]
    InvalidSpec(Vec<String>),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// An immutable, link-validated collection of documents.
#[derive(Debug, Clone)]
pub struct Corpus {
    documents: Vec<Document>,
    by_id: HashMap<String, usize>,
    comments_of: HashMap<String, Vec<String>>,
}

impl PartialEq for Corpus {
    fn eq(&self, other: &Self) -> bool {
        self.documents == other.documents
    }
}

/// Follows parent links from comment `i` up to its post.
fn root_post(
    documents: &[Document],
    by_id: &HashMap<String, usize>,
    i: usize,
) -> Result<usize, CorpusError> {
    let mut cur = i;
    for _ in 0..=documents.len() {
        let doc = &documents[cur];
        let Some(parent) = &doc.parent_id else {
            return Ok(cur);
        };
        cur = *by_id
            .get(parent)
            .ok_or_else(|| CorpusError::DanglingParent {
                comment: doc.doc_id.clone(),
                parent: parent.clone(),
            })?;
        if documents[cur].is_post() {
            return Ok(cur);
        }
    }
    Err(CorpusError::InvalidLink {
        doc_id: documents[i].doc_id.clone(),
        reason: "reply chain forms a cycle".into(),
    })
}

impl Corpus {
    /// Validates ids and post/comment links. Replies to comments are
    /// attached to the root post of their thread; other malformed links are
    /// rejected, never repaired.
    pub fn from_documents(mut documents: Vec<Document>) -> Result<Self, CorpusError> {
        let mut by_id = HashMap::with_capacity(documents.len());
        for (i, doc) in documents.iter().enumerate() {
            if by_id.insert(doc.doc_id.clone(), i).is_some() {
                return Err(CorpusError::DuplicateId(doc.doc_id.clone()));
            }
        }

        let mut roots: Vec<Option<usize>> = vec![None; documents.len()];
        for (i, doc) in documents.iter().enumerate() {
            match (doc.kind, &doc.parent_id) {
                (DocKind::Post, None) => {}
                (DocKind::Post, Some(_)) => {
                    return Err(CorpusError::InvalidLink {
                        doc_id: doc.doc_id.clone(),
                        reason: "a post cannot have a parent_id".into(),
                    })
                }
                (DocKind::Comment, None) => {
                    return Err(CorpusError::InvalidLink {
                        doc_id: doc.doc_id.clone(),
                        reason: "a comment needs a parent_id".into(),
                    })
                }
                (DocKind::Comment, Some(_)) => roots[i] = Some(root_post(&documents, &by_id, i)?),
            }
        }

        let mut comments_of: HashMap<String, Vec<String>> = documents
            .iter()
            .filter(|d| d.is_post())
            .map(|d| (d.doc_id.clone(), Vec::new()))
            .collect();
        for (i, root) in roots.into_iter().enumerate() {
            if let Some(r) = root {
                let root_id = documents[r].doc_id.clone();
                comments_of
                    .get_mut(&root_id)
                    .expect("every post has an entry")
                    .push(documents[i].doc_id.clone());
                documents[i].parent_id = Some(root_id);
            }
        }

        Ok(Corpus {
            documents,
            by_id,
            comments_of,
        })
    }

    pub fn empty() -> Self {
        Corpus {
            documents: Vec::new(),
            by_id: HashMap::new(),
            comments_of: HashMap::new(),
        }
    }

    pub fn documents(&self) -> &[Document] {
        &self.documents
    }

    pub fn len(&self) -> usize {
        self.documents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.documents.is_empty()
    }

    pub fn get(&self, doc_id: &str) -> Option<&Document> {
        self.by_id.get(doc_id).map(|&i| &self.documents[i])
    }

    /// Position of a document in corpus order.
    pub fn position(&self, doc_id: &str) -> Option<usize> {
        self.by_id.get(doc_id).copied()
    }

    /// Comment ids of a post, in corpus order. Empty for unknown ids.
    pub fn comments_of(&self, post_id: &str) -> &[String] {
        self.comments_of
            .get(post_id)
            .map(Vec::as_slice)
            .unwrap_or_default()
    }

    pub fn posts(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.is_post())
    }

    pub fn comments(&self) -> impl Iterator<Item = &Document> {
        self.documents.iter().filter(|d| d.is_comment())
    }

    /// Set of lowercased tokens occurring anywhere in the corpus.
    pub fn vocabulary(&self) -> HashSet<String> {
        self.documents
            .iter()
            .flat_map(|d| text::lower_tokens(&d.text))
            .collect()
    }
}

/// Reads a line-delimited JSON corpus. Blank lines are skipped.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let mut documents = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: Document = serde_json::from_str(&line).map_err(|e| CorpusError::Parse {
            line: i + 1,
            message: e.to_string(),
        })?;
        documents.push(doc);
    }
    Corpus::from_documents(documents)
}

pub fn load_corpus(path: impl AsRef<Path>) -> Result<Corpus, CorpusError> {
    let file = File::open(path)?;
    read_corpus(BufReader::new(file))
}

pub fn write_corpus<W: Write>(corpus: &Corpus, mut writer: W) -> io::Result<()> {
    for doc in corpus.documents() {
        serde_json::to_writer(&mut writer, doc)?;
        writer.write_all(b"\n")?;
    }
    writer.flush()
}

pub fn save_corpus(corpus: &Corpus, path: impl AsRef<Path>) -> io::Result<()> {
    util::write_atomic(path.as_ref(), |w| write_corpus(corpus, w))
}

#[cfg(test)]
mod tests {
    use super::*;

    const TOY: &str = r#"{"id":"p1","kind":"post","page":"nyt","created_at":"2016-10-01T12:00:00Z","text":"Paul Ryan spoke."}
{"id":"c1","kind":"comment","parent_id":"p1","page":"nyt","created_at":"2016-10-01T12:05:00Z","text":"Go Ryan"}
{"id":"c2","kind":"comment","parent_id":"p1","page":"nyt","created_at":"2016-10-01T12:06:00+02:00","text":"Trump!"}
"#;

    #[test]
    fn loads_minimal_file() {
        let corpus = read_corpus(TOY.as_bytes()).unwrap();
        assert_eq!(corpus.len(), 3);
        assert_eq!(corpus.comments_of("p1"), ["c1", "c2"]);
        assert!(corpus.comments_of("c1").is_empty());
        assert_eq!(corpus.posts().count(), 1);
    }

    #[test]
    fn empty_file_is_empty_corpus() {
        let corpus = read_corpus("".as_bytes()).unwrap();
        assert!(corpus.is_empty());
        let corpus = read_corpus("\n  \n".as_bytes()).unwrap();
        assert!(corpus.is_empty());
    }

    #[test]
    fn rejects_dangling_parent() {
        let data = r#"{"id":"c1","kind":"comment","parent_id":"nope","page":"x","created_at":"2016-10-01T12:00:00Z","text":"hi"}"#;
        match read_corpus(data.as_bytes()) {
            Err(CorpusError::DanglingParent { comment, parent }) => {
                assert_eq!(comment, "c1");
                assert_eq!(parent, "nope");
            }
            other => panic!("expected DanglingParent, got {other:?}"),
        }
    }

    #[test]
    fn rejects_duplicates_and_bad_links() {
        let dup = format!(
            "{}\n{}",
            TOY.lines().next().unwrap(),
            TOY.lines().next().unwrap()
        );
        assert!(matches!(
            read_corpus(dup.as_bytes()),
            Err(CorpusError::DuplicateId(id)) if id == "p1"
        ));

        let cycle = r#"{"id":"a","kind":"comment","parent_id":"b","page":"x","created_at":"2016-10-01T12:00:00Z","text":"x"}
{"id":"b","kind":"comment","parent_id":"a","page":"x","created_at":"2016-10-01T12:00:00Z","text":"x"}"#;
        assert!(matches!(
            read_corpus(cycle.as_bytes()),
            Err(CorpusError::InvalidLink { .. })
        ));

        let post_with_parent = r#"{"id":"p","kind":"post","parent_id":"q","page":"x","created_at":"2016-10-01T12:00:00Z","text":"x"}"#;
        assert!(matches!(
            read_corpus(post_with_parent.as_bytes()),
            Err(CorpusError::InvalidLink { .. })
        ));
    }

    #[test]
    fn replies_attach_to_root_post() {
        let data = format!(
            "{TOY}{}\n{}",
            r#"{"id":"c3","kind":"comment","parent_id":"c1","page":"nyt","created_at":"2016-10-01T12:00:00Z","text":"x"}"#,
            r#"{"id":"c4","kind":"comment","parent_id":"c3","page":"nyt","created_at":"2016-10-01T12:00:00Z","text":"y"}"#
        );
        let corpus = read_corpus(data.as_bytes()).unwrap();
        let root = corpus.get("c1").unwrap().parent_id.clone().unwrap();
        assert_eq!(
            corpus.get("c4").unwrap().parent_id.as_deref(),
            Some(root.as_str())
        );
        let comments = corpus.comments_of(&root);
        assert!(comments.iter().any(|c| c == "c3") && comments.iter().any(|c| c == "c4"));
    }

    #[test]
    fn parse_error_reports_line_number() {
        let data = format!("{}\n{{not json\n", TOY.lines().next().unwrap());
        match read_corpus(data.as_bytes()) {
            Err(CorpusError::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("expected Parse, got {other:?}"),
        }
        let missing_field = r#"{"id":"p","kind":"post","page":"x","text":"x"}"#;
        assert!(matches!(
            read_corpus(missing_field.as_bytes()),
            Err(CorpusError::Parse { line: 1, .. })
        ));
    }

    #[test]
    fn comments_may_precede_their_post() {
        let mut lines: Vec<&str> = TOY.lines().collect();
        lines.reverse();
        let corpus = read_corpus(lines.join("\n").as_bytes()).unwrap();
        assert_eq!(corpus.comments_of("p1"), ["c2", "c1"]);
    }

    #[test]
    fn save_and_reload_is_equal() {
        let corpus = read_corpus(TOY.as_bytes()).unwrap();
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        let again = read_corpus(buf.as_slice()).unwrap();
        assert_eq!(corpus, again);
        let text = String::from_utf8(buf).unwrap();
        assert!(!text.lines().next().unwrap().contains("parent_id"));
        assert!(text.contains(r#""created_at":"2016-10-01T10:06:00Z""#));
    }
}
