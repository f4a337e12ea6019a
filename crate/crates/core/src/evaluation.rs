//! Scores resolutions against the answers and aggregates them per name.
//!
//! Four numbers are reported for every name:
//!
//! * `cer`: the prediction is right *and* the true name was naturally among
//!   the k most frequent comment names,
//! * `global`: the prediction is right (the true name is always forced into
//!   the candidate list),
//! * `most_freq`: the most frequent comment name is the true name,
//! * `random`: expected accuracy of guessing uniformly among the top k,
//!   which is `1/k` when the true name is in the top k and `0` otherwise.
//!
//! Flat aggregates pool all trials; `mu` aggregates average the per-name values.

use std::collections::{BTreeMap, HashMap};
use std::io::{self, BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{CandidateSet, ScopeMode};
use crate::censorship::Answers;
use crate::cer::{ClassLabel, Resolution};
use crate::text::NameKey;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("no answer for post {0}")]
    MissingAnswer(String),
    #[error("no candidate set covers post {0}")]
    MissingCandidates(String),
    #[error("candidate set for post {post_id} targets {found:?}, answer is {expected:?}")]
    AnswerMismatch {
        post_id: String,
        expected: String,
        found: String,
    },
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub name: String,
    pub post_id: String,
    pub correct: bool,
    pub in_top_k: bool,
    pub most_freq_hit: bool,
    pub candidate_count: usize,
}

/// Most frequent natural candidate, ties broken lexicographically.
pub fn baseline_most_frequent(candidates: &CandidateSet) -> Option<String> {
    candidates.most_frequent()
}

/// Expected accuracy of a uniform guess among the top `k`.
pub fn baseline_random(candidates: &CandidateSet, k: usize) -> f64 {
    if candidates.in_top_k() {
        1.0 / k as f64
    } else {
        0.0
    }
}

/// One trial per resolution. Anything but an `ANON` prediction is wrong,
/// including abstentions.
pub fn score_trials(
    resolutions: &[Resolution],
    candidate_sets: &[CandidateSet],
    answers: &Answers,
) -> Result<Vec<TrialRecord>, EvalError> {
    let mut by_post: HashMap<&str, &CandidateSet> = HashMap::new();
    for set in candidate_sets {
        for post in &set.post_scope {
            by_post.insert(post.as_str(), set);
        }
    }
    resolutions
        .iter()
        .map(|r| {
            let name = answers
                .get(&r.post_id)
                .ok_or_else(|| EvalError::MissingAnswer(r.post_id.clone()))?;
            let set = by_post
                .get(r.post_id.as_str())
                .ok_or_else(|| EvalError::MissingCandidates(r.post_id.clone()))?;
            if NameKey::new(&set.true_name) != NameKey::new(name) {
                return Err(EvalError::AnswerMismatch {
                    post_id: r.post_id.clone(),
                    expected: name.to_string(),
                    found: set.true_name.clone(),
                });
            }
            let most_freq_hit =
                baseline_most_frequent(set).is_some_and(|m| NameKey::new(&m) == NameKey::new(name));
            Ok(TrialRecord {
                name: name.to_string(),
                post_id: r.post_id.clone(),
                correct: r.predicted_class == Some(ClassLabel::Anon),
                in_top_k: set.in_top_k(),
                most_freq_hit,
                candidate_count: set.k,
            })
        })
        .collect()
}

/// Raw counts behind a row of metrics.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrialCounts {
    pub posts: usize,
    pub correct: usize,
    pub correct_in_top_k: usize,
    pub most_freq_hits: usize,
    pub in_top_k: usize,
}

impl TrialCounts {
    fn add(&mut self, t: &TrialRecord) {
        self.posts += 1;
        self.correct += t.correct as usize;
        self.correct_in_top_k += (t.correct && t.in_top_k) as usize;
        self.most_freq_hits += t.most_freq_hit as usize;
        self.in_top_k += t.in_top_k as usize;
    }

    fn metrics(&self, k: usize) -> Metrics {
        if self.posts == 0 {
            return Metrics::default();
        }
        let n = self.posts as f64;
        Metrics {
            cer: self.correct_in_top_k as f64 / n,
            global: self.correct as f64 / n,
            most_freq: self.most_freq_hits as f64 / n,
            random: self.in_top_k as f64 / n / k as f64,
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub cer: f64,
    pub global: f64,
    pub most_freq: f64,
    pub random: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameResult {
    pub name: String,
    pub posts: usize,
    pub cer_accuracy: f64,
    pub global_accuracy: f64,
    pub most_freq_accuracy: f64,
    pub random_accuracy: f64,
    pub counts: TrialCounts,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ReportSettings {
    pub k: usize,
    pub nocc_min: Option<usize>,
    pub seeds: BTreeMap<String, u64>,
    pub scope: ScopeMode,
    pub metric_notes: Vec<String>,
}

impl ReportSettings {
    pub fn new(k: usize) -> Self {
        ReportSettings {
            k,
            metric_notes: vec![
                "cer = mean(correct and in_top_k); correct comes from the run with the true name forced into the candidates".into(),
                "random = mean(in_top_k) / k, closed-form expectation".into(),
            ],
            ..Default::default()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub settings: ReportSettings,
    pub names: Vec<NameResult>,
    pub flat: Metrics,
    pub mu_average: Metrics,
    pub totals: TrialCounts,
    pub total_names: usize,
    /// Unrounded posts per name.
    pub posts_per_name: f64,
}

/// Per-name rows in order of first appearance, plus flat and mu averages.
pub fn aggregate(trials: &[TrialRecord], k: usize) -> ExperimentReport {
    let mut order: Vec<&str> = Vec::new();
    let mut per_name: HashMap<&str, TrialCounts> = HashMap::new();
    let mut totals = TrialCounts::default();
    for t in trials {
        per_name
            .entry(t.name.as_str())
            .or_insert_with(|| {
                order.push(&t.name);
                TrialCounts::default()
            })
            .add(t);
        totals.add(t);
    }
    let names: Vec<NameResult> = order
        .iter()
        .map(|name| {
            let counts = per_name[name];
            let m = counts.metrics(k);
            NameResult {
                name: name.to_string(),
                posts: counts.posts,
                cer_accuracy: m.cer,
                global_accuracy: m.global,
                most_freq_accuracy: m.most_freq,
                random_accuracy: m.random,
                counts,
            }
        })
        .collect();

    let mut mu_average = Metrics::default();
    if !names.is_empty() {
        let n = names.len() as f64;
        mu_average = Metrics {
            cer: names.iter().map(|r| r.cer_accuracy).sum::<f64>() / n,
            global: names.iter().map(|r| r.global_accuracy).sum::<f64>() / n,
            most_freq: names.iter().map(|r| r.most_freq_accuracy).sum::<f64>() / n,
            random: names.iter().map(|r| r.random_accuracy).sum::<f64>() / n,
        };
    }
    ExperimentReport {
        settings: ReportSettings::new(k),
        flat: totals.metrics(k),
        mu_average,
        totals,
        total_names: names.len(),
        posts_per_name: if names.is_empty() {
            0.0
        } else {
            totals.posts as f64 / names.len() as f64
        },
        names,
    }
}

/// Two decimals, halves rounded away from zero.
pub fn fmt2(x: f64) -> String {
    format!("{:.2}", (x * 100.0).round() / 100.0)
}

pub const CSV_HEADER: [&str; 6] = ["name", "posts", "cer", "global", "most_freq", "random"];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportFormat {
    Csv,
    Json,
}

pub fn write_report_csv<W: Write>(report: &ExperimentReport, w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(CSV_HEADER)?;
    for r in &report.names {
        out.write_record([
            r.name.clone(),
            r.posts.to_string(),
            fmt2(r.cer_accuracy),
            fmt2(r.global_accuracy),
            fmt2(r.most_freq_accuracy),
            fmt2(r.random_accuracy),
        ])?;
    }
    out.flush()
}

pub fn write_report_json<W: Write>(report: &ExperimentReport, mut w: W) -> io::Result<()> {
    serde_json::to_writer_pretty(&mut w, report).map_err(io::Error::other)?;
    writeln!(w)
}

pub fn emit_report(
    report: &ExperimentReport,
    format: ReportFormat,
    path: impl AsRef<Path>,
) -> io::Result<()> {
    crate::write_atomic(path.as_ref(), |w| match format {
        ReportFormat::Csv => write_report_csv(report, w),
        ReportFormat::Json => write_report_json(report, w),
    })
}

pub fn read_report_json<R: io::Read>(r: R) -> Result<ExperimentReport, EvalError> {
    serde_json::from_reader(r).map_err(|e| EvalError::Parse {
        line: e.line(),
        message: e.to_string(),
    })
}

/// A row of the CSV report as read back.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub name: String,
    pub posts: usize,
    pub cer: f64,
    pub global: f64,
    pub most_freq: f64,
    pub random: f64,
}

pub fn read_report_csv<R: io::Read>(r: R) -> Result<Vec<CsvRow>, EvalError> {
    let mut reader = csv::Reader::from_reader(r);
    let header = reader.headers().map_err(|e| csv_error(1, e))?.clone();
    if header.iter().ne(CSV_HEADER) {
        return Err(EvalError::Parse {
            line: 1,
            message: format!("unexpected header {:?}", header.iter().collect::<Vec<_>>()),
        });
    }
    let mut rows = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_error(line, e))?;
        let num = |j: usize| -> Result<f64, EvalError> {
            rec[j].parse().map_err(|_| EvalError::Parse {
                line,
                message: format!("bad number {:?}", &rec[j]),
            })
        };
        rows.push(CsvRow {
            name: rec[0].to_string(),
            posts: rec[1].parse().map_err(|_| EvalError::Parse {
                line,
                message: format!("bad post count {:?}", &rec[1]),
            })?,
            cer: num(2)?,
            global: num(3)?,
            most_freq: num(4)?,
            random: num(5)?,
        });
    }
    Ok(rows)
}

fn csv_error(line: usize, e: csv::Error) -> EvalError {
    EvalError::Parse {
        line,
        message: e.to_string(),
    }
}

/// One row per (k, nocc) setting with the four metrics, flat and mu
/// averaged, ready for a grouped bar chart.
pub fn write_sweep_summary<W: Write>(reports: &[ExperimentReport], w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record([
        "k",
        "nocc",
        "names",
        "posts",
        "cer",
        "cer_mu",
        "global",
        "global_mu",
        "most_freq",
        "most_freq_mu",
        "random",
        "random_mu",
    ])?;
    for r in reports {
        let (f, m) = (r.flat, r.mu_average);
        out.write_record([
            r.settings.k.to_string(),
            r.settings
                .nocc_min
                .map(|n| n.to_string())
                .unwrap_or_default(),
            r.total_names.to_string(),
            r.totals.posts.to_string(),
            fmt2(f.cer),
            fmt2(m.cer),
            fmt2(f.global),
            fmt2(m.global),
            fmt2(f.most_freq),
            fmt2(m.most_freq),
            fmt2(f.random),
            fmt2(m.random),
        ])?;
    }
    out.flush()
}

pub fn write_trials<W: Write>(trials: &[TrialRecord], mut w: W) -> io::Result<()> {
    for t in trials {
        serde_json::to_writer(&mut w, t).map_err(io::Error::other)?;
        writeln!(w)?;
    }
    Ok(())
}

pub fn read_trials<R: BufRead>(r: R) -> Result<Vec<TrialRecord>, EvalError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line_text = line?;
        if line_text.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line_text).map_err(|e| EvalError::Parse {
                line: i + 1,
                message: e.to_string(),
            })?,
        );
    }
    Ok(out)
}
