mod common;

use std::collections::HashSet;

use common::{scenario_corpus, scenario_recognizer, seeded_config};
use unveil::candidates::ScopeMode;
use unveil::censorship::MaskTokens;
use unveil::corpus::{save_corpus, Corpus, Scenario};
use unveil::pipeline::{
    censor_names, rerender_report, run_experiment, run_to_dir, RunConfig, RunOutput, Stage,
};
use unveil::snippet_index::build_index;
use unveil::text::lower_tokens;

fn scenario() -> Scenario {
    Scenario {
        names: 6,
        post_count: 8,
        comment_count: 20,
        chatter_rates: vec![0.6],
        seed: 5,
        ..Default::default()
    }
}

fn config() -> RunConfig {
    seeded_config(5, 5, 50)
}

fn run(sc: &Scenario, config: &RunConfig) -> (Corpus, RunOutput) {
    let corpus = scenario_corpus(sc);
    let out = run_experiment(config, &corpus, &scenario_recognizer(sc)).unwrap();
    (corpus, out)
}

#[test]
fn run_outputs_are_consistent() {
    let sc = scenario();
    let (_, out) = run(&sc, &config());
    assert!(!out.trials.is_empty());
    assert_eq!(out.trials.len(), out.resolutions.len());
    assert_eq!(out.censored.len(), out.resolutions.len());
    assert_eq!(out.answers.len(), out.resolutions.len());
    for (r, post) in out.resolutions.iter().zip(&out.censored) {
        assert_eq!(r.post_id, post.post_id);
        let truth = out.answers.get(&r.post_id).unwrap();
        let set = out
            .candidate_sets
            .iter()
            .find(|s| s.post_scope.contains(&r.post_id))
            .unwrap();
        assert_eq!(set.top_k.len(), 5);
        assert!(set.top_k.iter().any(|n| n == truth));
        assert_eq!(r.scores.len(), set.top_k.len());
        if let Some(p) = &r.predicted_name {
            assert!(set.top_k.contains(p));
        }
        let needle = lower_tokens(truth);
        for s in &post.snippets {
            let hay = lower_tokens(&s.censored_text);
            assert!(!hay.windows(needle.len()).any(|w| w == needle));
            assert!(!s.mask_spans().is_empty());
        }
    }
    let tokens: Vec<&str> = out
        .censored
        .iter()
        .flat_map(|p| &p.snippets)
        .map(|s| s.mask_token.as_str())
        .collect();
    assert_eq!(tokens.len(), tokens.iter().collect::<HashSet<_>>().len());
}

#[test]
fn standalone_censoring_matches_the_run() {
    let sc = scenario();
    let config = config();
    let (corpus, out) = run(&sc, &config);
    let index = build_index(&corpus);
    let names: Vec<String> = out.census.names().map(str::to_string).collect();
    let mut tokens = MaskTokens::for_corpus(&corpus);
    let (censored, _) = censor_names(&index, &corpus, &names, &config, &mut tokens).unwrap();
    let standalone: Vec<_> = censored.into_iter().flat_map(|c| c.posts).collect();
    for post in &out.censored {
        assert!(standalone
            .iter()
            .any(|p| p.post_id == post.post_id && p.snippets == post.snippets));
    }
}

#[test]
fn per_post_scope_restricts_candidate_sets() {
    let sc = scenario();
    let config = RunConfig {
        scope: ScopeMode::PerPost,
        ..config()
    };
    let (_, out) = run(&sc, &config);
    assert!(!out.candidate_sets.is_empty());
    for set in &out.candidate_sets {
        assert_eq!(set.post_scope.len(), 1);
    }
    let scoped: HashSet<&str> = out
        .candidate_sets
        .iter()
        .map(|s| s.post_scope[0].as_str())
        .collect();
    assert_eq!(scoped.len(), out.resolutions.len());
    for skip in out.skipped.iter().filter(|s| s.post_id.is_some()) {
        assert!(matches!(skip.stage, Stage::Candidates | Stage::Train));
        assert!(!scoped.contains(skip.post_id.as_deref().unwrap()));
    }
}

#[test]
fn high_comment_threshold_skips_every_name() {
    let sc = scenario();
    let config = RunConfig {
        comment_occurrence_min: 100_000,
        ..config()
    };
    let (_, out) = run(&sc, &config);
    assert!(out.trials.is_empty());
    assert!(out.report.names.is_empty());
    assert!(!out.skipped.is_empty());
    assert!(out
        .skipped
        .iter()
        .all(|s| matches!(s.stage, Stage::Censor | Stage::Eligibility)));
    assert!(out.skipped.iter().any(|s| s.stage == Stage::Eligibility));
    assert_eq!(out.skipped.len(), out.census.len());
}

#[test]
fn report_rerenders_from_the_run_directory() {
    let dir = tempfile::tempdir().unwrap();
    let sc = scenario();
    let corpus_path = dir.path().join("corpus.jsonl");
    save_corpus(&scenario_corpus(&sc), &corpus_path).unwrap();
    let gazetteer = dir.path().join("names.txt");
    std::fs::write(&gazetteer, sc.all_names().join("\n")).unwrap();
    let config = RunConfig {
        corpus_path,
        gazetteer_path: Some(gazetteer),
        output_dir: dir.path().join("out"),
        ..config()
    };
    let out = run_to_dir(&config).unwrap();
    assert_eq!(rerender_report(&config.output_dir).unwrap(), out.report);
}
