//! The full experiment: census, eligibility, censoring, candidate
//! selection, training, resolution and scoring, plus the run directory
//! layout shared by the command line tool.
//!
//! Per-name work runs on a worker pool. Results are joined in census order,
//! so the output never depends on the number of workers.

use std::collections::{BTreeMap, HashSet};
use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::candidates::{
    extract_candidates, select_top_k, CandidateError, CandidateSet, ScopeMode,
};
use crate::censorship::{
    censor, plan_censorship, planned_snippets, write_censored, Answers, CensorError, CensorPlan,
    CensoredPost, MaskTokens, PostSelection,
};
use crate::cer::{
    self, build_examples, classes_for, fetch_training_snippets, resolve, Aggregation, CerError,
    FeatureSpec, Hyperparameters, Resolution, ResolveOptions, TrainingSummary,
};
use crate::corpus::{load_corpus, Corpus, CorpusError};
use crate::entity_recognition::{
    census, import_annotations, read_name_list, NameCensus, NameSource, NerError, Recognizer,
    RecognizerConfig,
};
use crate::evaluation::{
    aggregate, score_trials, write_report_csv, write_report_json, write_trials, EvalError,
    ExperimentReport, ReportSettings, TrialRecord,
};
use crate::snippet_index::{build_index, Index, SnippetParams};
use crate::text::NameKey;
use crate::{derive_seed, write_atomic};

pub const ENV_OUT_DIR: &str = "UNVEIL_OUT_DIR";
pub const ENV_WORKERS: &str = "UNVEIL_WORKERS";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Corpus(#[from] CorpusError),
    #[error(transparent)]
    Ner(#[from] NerError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error("{name}: {stage} failed: {message}")]
    Stage {
        name: String,
        stage: Stage,
        message: String,
    },
    #[error(transparent)]
    Io(#[from] io::Error),
}

impl PipelineError {
    /// 1 for invalid input or configuration, 2 for data errors, 3 for internal failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            PipelineError::Config(_) => 1,
            PipelineError::Corpus(_)
            | PipelineError::Ner(_)
            | PipelineError::Eval(_)
            | PipelineError::Io(_) => 2,
            PipelineError::Stage { .. } => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Census,
    Censor,
    Eligibility,
    Candidates,
    Train,
    Resolve,
}

impl std::fmt::Display for Stage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = serde_json::to_value(self).expect("unit variant");
        f.write_str(s.as_str().unwrap_or("?"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus_path: PathBuf,
    /// Precomputed name annotations; replaces the recognizer when set.
    pub annotations_path: Option<PathBuf>,
    pub gazetteer_path: Option<PathBuf>,
    pub denylist_path: Option<PathBuf>,
    pub use_heuristic: bool,

    pub k: usize,
    pub nocc_min: usize,
    pub comment_occurrence_min: usize,
    pub max_posts: usize,
    pub post_selection: PostSelection,
    pub scope: ScopeMode,

    pub window: usize,
    pub min_len: usize,
    pub min_examples: usize,

    pub epochs: usize,
    pub class_cap: usize,
    pub context_window: usize,
    pub bigrams: bool,
    pub aggregation: Aggregation,
    pub abstain_margin: Option<f64>,

    pub selection_seed: u64,
    pub mask_seed: u64,
    pub train_seed: u64,

    pub output_dir: PathBuf,
    pub workers: Option<usize>,
    /// Write the masked training snippets of every name to `dumps/`.
    pub dump_examples: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        let hyper = Hyperparameters::default();
        RunConfig {
            corpus_path: PathBuf::new(),
            annotations_path: None,
            gazetteer_path: None,
            denylist_path: None,
            use_heuristic: true,
            k: 10,
            nocc_min: 100,
            comment_occurrence_min: 50,
            max_posts: crate::censorship::DEFAULT_MAX_POSTS,
            post_selection: PostSelection::Uniform,
            scope: ScopeMode::Pooled,
            window: crate::snippet_index::DEFAULT_WINDOW,
            min_len: crate::snippet_index::DEFAULT_MIN_LEN,
            min_examples: cer::DEFAULT_MIN_EXAMPLES,
            epochs: hyper.epochs,
            class_cap: hyper.class_cap,
            context_window: hyper.features.window,
            bigrams: hyper.features.bigrams,
            aggregation: Aggregation::Sum,
            abstain_margin: None,
            selection_seed: 1,
            mask_seed: 2,
            train_seed: 3,
            output_dir: PathBuf::from("out"),
            workers: None,
            dump_examples: false,
        }
    }
}

impl RunConfig {
    /// Reads a `key = value` file. Missing keys take their defaults.
    pub fn from_file(path: impl AsRef<Path>) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path.as_ref())?;
        Self::from_str_with(&text, &[])
    }

    /// Parses a config text and applies `key=value` overrides on top.
    pub fn from_str_with(text: &str, overrides: &[String]) -> Result<Self, PipelineError> {
        let mut table: toml::Table =
            toml::from_str(text).map_err(|e| PipelineError::Config(e.to_string()))?;
        for o in overrides {
            let (key, value) = parse_override(o)?;
            table.insert(key, value);
        }
        table
            .try_into()
            .map_err(|e: toml::de::Error| PipelineError::Config(e.to_string()))
    }

    /// Applies `UNVEIL_OUT_DIR` and `UNVEIL_WORKERS` from `env`.
    pub fn apply_env(&mut self, env: impl Fn(&str) -> Option<String>) -> Result<(), PipelineError> {
        if let Some(dir) = env(ENV_OUT_DIR) {
            self.output_dir = PathBuf::from(dir);
        }
        if let Some(w) = env(ENV_WORKERS) {
            let n = w.trim().parse().map_err(|_| {
                PipelineError::Config(format!(
                    "{ENV_WORKERS} must be a positive integer, got {w:?}"
                ))
            })?;
            self.workers = Some(n);
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), PipelineError> {
        let mut problems = Vec::new();
        if self.k < 2 {
            problems.push(format!("k must be at least 2, got {}", self.k));
        }
        for (key, v) in [
            ("nocc_min", self.nocc_min),
            ("comment_occurrence_min", self.comment_occurrence_min),
            ("max_posts", self.max_posts),
            ("window", self.window),
            ("min_len", self.min_len),
            ("context_window", self.context_window),
            ("class_cap", self.class_cap),
        ] {
            if v < 1 {
                problems.push(format!("{key} must be at least 1"));
            }
        }
        if self.min_len > self.window {
            problems.push(format!(
                "min_len {} exceeds window {}",
                self.min_len, self.window
            ));
        }
        if self.workers == Some(0) {
            problems.push("workers must be at least 1".into());
        }
        if let Some(m) = self.abstain_margin {
            if !(m.is_finite() && m >= 0.0) {
                problems.push("abstain_margin must be a non-negative number".into());
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(PipelineError::Config(problems.join("; ")))
        }
    }

    pub fn snippet_params(&self) -> SnippetParams {
        SnippetParams {
            window: self.window,
            min_len: self.min_len,
        }
    }

    pub fn hyperparameters(&self, seed: u64) -> Hyperparameters {
        Hyperparameters {
            epochs: self.epochs,
            class_cap: self.class_cap,
            seed,
            features: FeatureSpec {
                window: self.context_window,
                bigrams: self.bigrams,
            },
        }
    }

    pub fn resolve_options(&self) -> ResolveOptions {
        ResolveOptions {
            aggregation: self.aggregation,
            abstain_margin: self.abstain_margin,
        }
    }

    pub fn report_settings(&self) -> ReportSettings {
        let mut s = ReportSettings::new(self.k);
        s.nocc_min = Some(self.nocc_min);
        s.scope = self.scope;
        s.seeds = BTreeMap::from([
            ("mask".to_string(), self.mask_seed),
            ("selection".to_string(), self.selection_seed),
            ("train".to_string(), self.train_seed),
        ]);
        s
    }

    /// Serialized form, as written to the manifest.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }
}

fn parse_override(o: &str) -> Result<(String, toml::Value), PipelineError> {
    let (key, raw) = o
        .split_once('=')
        .ok_or_else(|| PipelineError::Config(format!("override {o:?} is not key=value")))?;
    let key = key.trim().to_string();
    let raw = raw.trim();
    let value = toml::from_str::<toml::Table>(&format!("v = {raw}"))
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.to_string()));
    Ok((key, value))
}

/// The name source described by a config: annotations when given,
/// otherwise the recognizer.
pub fn name_source(
    config: &RunConfig,
    corpus: &Corpus,
) -> Result<Box<dyn NameSource>, PipelineError> {
    let denylist = match &config.denylist_path {
        Some(p) => read_name_list(p)?,
        None => crate::entity_recognition::DEFAULT_DENYLIST
            .iter()
            .map(|s| s.to_string())
            .collect(),
    };
    if let Some(path) = &config.annotations_path {
        return Ok(Box::new(
            import_annotations(path, corpus)?.with_denylist(&denylist),
        ));
    }
    let mut rc = RecognizerConfig {
        use_heuristic: config.use_heuristic,
        denylist,
        ..RecognizerConfig::default()
    };
    if let Some(p) = &config.gazetteer_path {
        rc.gazetteer = read_name_list(p)?;
    }
    Ok(Box::new(Recognizer::new(&rc)?))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SkippedName {
    pub name: String,
    pub stage: Stage,
    pub reason: String,
    /// Set when only one post was dropped.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub post_id: Option<String>,
}

/// One name after censoring.
#[derive(Debug, Clone)]
pub struct CensoredName {
    pub name: String,
    pub plan: CensorPlan,
    pub posts: Vec<CensoredPost>,
}

/// Censors every name in order. Mask tokens are unique across all names.
pub fn censor_names(
    index: &Index,
    corpus: &Corpus,
    names: &[String],
    config: &RunConfig,
    tokens: &mut MaskTokens,
) -> Result<(Vec<CensoredName>, Vec<SkippedName>), PipelineError> {
    let params = config.snippet_params();
    let mut done = Vec::new();
    let mut skipped = Vec::new();
    for name in names {
        let plan = match plan_censorship(
            index,
            corpus,
            name,
            config.max_posts,
            derive_seed(config.selection_seed, name),
            config.post_selection,
            params,
        ) {
            Ok(p) => p,
            Err(CensorError::NameNotFound(_)) => {
                skipped.push(SkippedName {
                    name: name.clone(),
                    stage: Stage::Censor,
                    reason: "no post yields a snippet of the name".into(),
                    post_id: None,
                });
                continue;
            }
            Err(e) => return Err(stage_error(name, Stage::Censor, e)),
        };
        let snippets = planned_snippets(index, corpus, &plan, params);
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(config.mask_seed, name));
        let set = censor(&plan, &snippets, tokens, &mut rng)
            .map_err(|e| stage_error(name, Stage::Censor, e))?;
        done.push(CensoredName {
            name: name.clone(),
            plan,
            posts: set.posts,
        });
    }
    Ok((done, skipped))
}

fn stage_error(name: &str, stage: Stage, e: impl std::fmt::Display) -> PipelineError {
    PipelineError::Stage {
        name: name.to_string(),
        stage,
        message: e.to_string(),
    }
}

/// Per-name diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NameRun {
    pub name: String,
    pub selected_posts: usize,
    pub censored_posts: usize,
    pub comment_occurrences: usize,
    pub training: Vec<TrainingSummary>,
    /// Candidates with too few training snippets.
    pub insufficient: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub census: NameCensus,
    pub report: ExperimentReport,
    pub trials: Vec<TrialRecord>,
    pub resolutions: Vec<Resolution>,
    pub candidate_sets: Vec<CandidateSet>,
    pub censored: Vec<CensoredPost>,
    pub answers: Answers,
    pub skipped: Vec<SkippedName>,
    pub name_runs: Vec<NameRun>,
    /// Masked training examples per name, when requested.
    pub dumps: Vec<(String, Vec<cer::TrainingExample>)>,
}

struct NameOutcome {
    run: Option<NameRun>,
    candidate_sets: Vec<CandidateSet>,
    resolutions: Vec<Resolution>,
    skipped: Vec<SkippedName>,
    dump: Vec<cer::TrainingExample>,
}

/// Runs a full experiment on an in-memory corpus.
pub fn run_experiment(
    config: &RunConfig,
    corpus: &Corpus,
    source: &dyn NameSource,
) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    let index = build_index(corpus);
    let name_census = census(corpus, source, config.nocc_min, |_| true);
    let names: Vec<String> = name_census.names().map(str::to_string).collect();

    let mut tokens = MaskTokens::for_corpus(corpus);
    let (censored, mut skipped) = censor_names(&index, corpus, &names, config, &mut tokens)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers.unwrap_or(0))
        .build()
        .map_err(|e| PipelineError::Config(e.to_string()))?;
    let outcomes: Vec<Result<NameOutcome, PipelineError>> = pool.install(|| {
        censored
            .par_iter()
            .map(|c| run_name(config, corpus, &index, source, c, &tokens))
            .collect()
    });

    let mut out = RunOutput {
        census: name_census,
        report: aggregate(&[], config.k),
        trials: Vec::new(),
        resolutions: Vec::new(),
        candidate_sets: Vec::new(),
        censored: Vec::new(),
        answers: Answers::default(),
        skipped: Vec::new(),
        name_runs: Vec::new(),
        dumps: Vec::new(),
    };
    for (c, outcome) in censored.iter().zip(outcomes) {
        let outcome = outcome?;
        skipped.extend(outcome.skipped);
        let Some(run) = outcome.run else {
            continue;
        };
        let resolved: HashSet<&str> = outcome
            .resolutions
            .iter()
            .map(|r| r.post_id.as_str())
            .collect();
        for post in &c.posts {
            if resolved.contains(post.post_id.as_str()) {
                out.answers.insert(post.post_id.clone(), c.name.clone());
                out.censored.push(post.clone());
            }
        }
        if config.dump_examples {
            out.dumps.push((c.name.clone(), outcome.dump));
        }
        out.name_runs.push(run);
        out.candidate_sets.extend(outcome.candidate_sets);
        out.resolutions.extend(outcome.resolutions);
    }
    out.skipped = skipped;
    out.trials = score_trials(&out.resolutions, &out.candidate_sets, &out.answers)?;
    out.report = aggregate(&out.trials, config.k);
    out.report.settings = config.report_settings();
    Ok(out)
}

fn skip(name: &str, stage: Stage, reason: impl Into<String>, post_id: Option<&str>) -> SkippedName {
    SkippedName {
        name: name.to_string(),
        stage,
        reason: reason.into(),
        post_id: post_id.map(str::to_string),
    }
}

fn run_name(
    config: &RunConfig,
    corpus: &Corpus,
    index: &Index,
    source: &dyn NameSource,
    c: &CensoredName,
    tokens: &MaskTokens,
) -> Result<NameOutcome, PipelineError> {
    let mut outcome = NameOutcome {
        run: None,
        candidate_sets: Vec::new(),
        resolutions: Vec::new(),
        skipped: Vec::new(),
        dump: Vec::new(),
    };
    let post_ids: Vec<String> = c.posts.iter().map(|p| p.post_id.clone()).collect();
    let pooled = extract_candidates(corpus, source, &post_ids);
    let occurrences = pooled.get(&c.name);
    if occurrences < config.comment_occurrence_min {
        outcome.skipped.push(skip(
            &c.name,
            Stage::Eligibility,
            format!(
                "{occurrences} occurrences in the comments of the censored posts, below {}",
                config.comment_occurrence_min
            ),
            None,
        ));
        return Ok(outcome);
    }

    let groups: Vec<(Vec<&CensoredPost>, CandidateSet)> = match config.scope {
        ScopeMode::Pooled => {
            let set = select_top_k(&pooled, config.k, &c.name, post_ids.clone())
                .map_err(|e| stage_error(&c.name, Stage::Candidates, e))?;
            vec![(c.posts.iter().collect(), set)]
        }
        ScopeMode::PerPost => {
            let mut groups = Vec::new();
            for post in &c.posts {
                let scope = vec![post.post_id.clone()];
                let counts = extract_candidates(corpus, source, &scope);
                match select_top_k(&counts, config.k, &c.name, scope) {
                    Ok(set) => groups.push((vec![post], set)),
                    Err(e @ CandidateError::FairnessViolation(_)) => outcome.skipped.push(skip(
                        &c.name,
                        Stage::Candidates,
                        e.to_string(),
                        Some(&post.post_id),
                    )),
                    Err(e) => return Err(stage_error(&c.name, Stage::Candidates, e)),
                }
            }
            groups
        }
    };

    let excluded: HashSet<String> = c.plan.selected_post_ids.iter().cloned().collect();
    let mut run = NameRun {
        name: c.name.clone(),
        selected_posts: c.plan.selected_post_ids.len(),
        censored_posts: c.posts.len(),
        comment_occurrences: occurrences,
        training: Vec::new(),
        insufficient: Vec::new(),
    };
    let mut train_tokens = tokens.fresh();
    train_tokens.reserve(tokens.used().iter().map(String::as_str));
    let mut rng =
        ChaCha8Rng::seed_from_u64(derive_seed(config.mask_seed, &format!("train:{}", c.name)));
    for (gi, (posts, set)) in groups.into_iter().enumerate() {
        let classes = classes_for(&set);
        let training = fetch_training_snippets(
            index,
            corpus,
            &set,
            &excluded,
            config.snippet_params(),
            config.min_examples,
        );
        for t in training.iter().filter(|t| t.insufficient) {
            if !run.insufficient.contains(&t.name) {
                run.insufficient.push(t.name.clone());
            }
        }
        let examples = build_examples(&training, &classes, &mut train_tokens, &mut rng)
            .map_err(|e| stage_error(&c.name, Stage::Train, e))?;
        let seed = derive_seed(config.train_seed, &format!("{}#{gi}", c.name));
        let model = match cer::train(&examples, &classes, config.hyperparameters(seed)) {
            Ok(m) => m,
            Err(CerError::EmptyTrainingSet) => {
                let post_id =
                    (config.scope == ScopeMode::PerPost).then(|| posts[0].post_id.as_str());
                outcome.skipped.push(skip(
                    &c.name,
                    Stage::Train,
                    "fewer than two candidates have training snippets",
                    post_id,
                ));
                continue;
            }
            Err(e) => return Err(stage_error(&c.name, Stage::Train, e)),
        };
        run.training.push(model.summary().clone());
        for post in posts {
            outcome
                .resolutions
                .push(resolve(&model, post, config.resolve_options()));
        }
        outcome.candidate_sets.push(set);
        if config.dump_examples {
            outcome.dump.extend(examples);
        }
    }
    if !outcome.resolutions.is_empty() {
        outcome.run = Some(run);
    }
    Ok(outcome)
}

/// Build metadata written next to every run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub config: RunConfig,
}

impl Manifest {
    pub fn new(config: &RunConfig) -> Self {
        Manifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            config: config.clone(),
        }
    }
}

pub mod files {
    pub const REPORT_JSON: &str = "report.json";
    pub const REPORT_CSV: &str = "report.csv";
    pub const TRIALS: &str = "trials.jsonl";
    pub const RESOLUTIONS: &str = "resolutions.jsonl";
    pub const CANDIDATES: &str = "candidates.jsonl";
    pub const CENSORED: &str = "censored.jsonl";
    pub const ANSWERS: &str = "answers.jsonl";
    pub const SKIPPED: &str = "skipped.jsonl";
    pub const NAMES: &str = "names.jsonl";
    pub const CENSUS: &str = "census.csv";
    pub const MANIFEST: &str = "manifest.json";
    pub const DUMPS: &str = "dumps";
}

fn write_jsonl<T: Serialize>(path: &Path, items: &[T]) -> io::Result<()> {
    write_atomic(path, |w| {
        for item in items {
            serde_json::to_writer(&mut *w, item).map_err(io::Error::other)?;
            writeln!(w)?;
        }
        Ok(())
    })
}

pub fn write_census<W: Write>(census: &NameCensus, w: W) -> io::Result<()> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(["name", "count"])?;
    for e in &census.entries {
        out.write_record([e.name.as_str(), &e.count.to_string()])?;
    }
    out.flush()
}

fn slug(name: &str) -> String {
    NameKey::new(name)
        .as_str()
        .chars()
        .map(|c| if c.is_alphanumeric() { c } else { '_' })
        .collect()
}

/// Writes every artifact of a run into `dir`.
pub fn write_run(dir: &Path, config: &RunConfig, out: &RunOutput) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    write_atomic(&dir.join(files::REPORT_JSON), |w| {
        write_report_json(&out.report, w)
    })?;
    write_atomic(&dir.join(files::REPORT_CSV), |w| {
        write_report_csv(&out.report, w)
    })?;
    write_atomic(&dir.join(files::TRIALS), |w| write_trials(&out.trials, w))?;
    write_jsonl(&dir.join(files::RESOLUTIONS), &out.resolutions)?;
    write_jsonl(&dir.join(files::CANDIDATES), &out.candidate_sets)?;
    write_atomic(&dir.join(files::CENSORED), |w| {
        write_censored(&out.censored, w)
    })?;
    write_atomic(&dir.join(files::ANSWERS), |w| out.answers.write(w))?;
    write_jsonl(&dir.join(files::SKIPPED), &out.skipped)?;
    write_jsonl(&dir.join(files::NAMES), &out.name_runs)?;
    write_atomic(&dir.join(files::CENSUS), |w| write_census(&out.census, w))?;
    for (name, examples) in &out.dumps {
        let path = dir.join(files::DUMPS).join(format!("{}.tsv", slug(name)));
        write_atomic(&path, |w| cer::write_training_dump(examples, w))?;
    }
    write_atomic(&dir.join(files::MANIFEST), |w| {
        serde_json::to_writer_pretty(&mut *w, &Manifest::new(config)).map_err(io::Error::other)?;
        writeln!(w)
    })
}

/// Loads the corpus named by the config, runs the experiment and writes the
/// run directory.
pub fn run_to_dir(config: &RunConfig) -> Result<RunOutput, PipelineError> {
    config.validate()?;
    if config.corpus_path.as_os_str().is_empty() {
        return Err(PipelineError::Config("corpus_path is not set".into()));
    }
    let corpus = load_corpus(&config.corpus_path)?;
    let source = name_source(config, &corpus)?;
    let out = run_experiment(config, &corpus, source.as_ref())?;
    write_run(&config.output_dir, config, &out)?;
    Ok(out)
}

/// Rebuilds the report of a finished run from its trials and manifest.
pub fn rerender_report(dir: &Path) -> Result<ExperimentReport, PipelineError> {
    let manifest: Manifest =
        serde_json::from_reader(BufReader::new(fs::File::open(dir.join(files::MANIFEST))?))
            .map_err(|e| PipelineError::Config(format!("manifest: {e}")))?;
    let trials =
        crate::evaluation::read_trials(BufReader::new(fs::File::open(dir.join(files::TRIALS))?))?;
    let mut report = aggregate(&trials, manifest.config.k);
    report.settings = manifest.config.report_settings();
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        RunConfig::default().validate().unwrap();
    }

    #[test]
    fn k_one_is_rejected() {
        let c = RunConfig {
            k: 1,
            ..Default::default()
        };
        let err = c.validate().unwrap_err();
        assert_eq!(err.exit_code(), 1);
        assert!(err.to_string().contains("k must be at least 2"));
    }

    #[test]
    fn file_then_overrides() {
        let c = RunConfig::from_str_with(
            "k = 5\nnocc_min = 200\nscope = \"per_post\"\n",
            &[
                "k=20".into(),
                "output_dir=/tmp/x".into(),
                "abstain_margin = 0.5".into(),
            ],
        )
        .unwrap();
        assert_eq!(c.k, 20);
        assert_eq!(c.nocc_min, 200);
        assert_eq!(c.scope, ScopeMode::PerPost);
        assert_eq!(c.output_dir, PathBuf::from("/tmp/x"));
        assert_eq!(c.abstain_margin, Some(0.5));
        assert_eq!(c.max_posts, 20);
    }

    #[test]
    fn unknown_keys_are_errors() {
        assert!(matches!(
            RunConfig::from_str_with("kk = 3", &[]),
            Err(PipelineError::Config(_))
        ));
        assert!(matches!(
            RunConfig::from_str_with("", &["nonsense".into()]),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn env_overrides() {
        let mut c = RunConfig::default();
        c.apply_env(|k| match k {
            ENV_OUT_DIR => Some("/tmp/o".into()),
            ENV_WORKERS => Some("3".into()),
            _ => None,
        })
        .unwrap();
        assert_eq!(c.output_dir, PathBuf::from("/tmp/o"));
        assert_eq!(c.workers, Some(3));
        assert!(c.apply_env(|_| Some("x".into())).is_err());
    }

    #[test]
    fn config_round_trips_through_toml() {
        let c = RunConfig {
            abstain_margin: Some(0.25),
            annotations_path: Some("a.jsonl".into()),
            ..Default::default()
        };
        assert_eq!(RunConfig::from_str_with(&c.to_toml(), &[]).unwrap(), c);
    }
}
