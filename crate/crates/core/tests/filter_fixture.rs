mod support;

use std::sync::Arc;

use genderprobe_core::corpus::{ingest_plain, ingest_swag};
use genderprobe_core::filter::filter_corpus;
use genderprobe_core::{FilterConfig, HeuristicCoref, Lexicon, RejectionReason};

use support::fixture;

// (line, reason) for every fixture sentence rejected with the default config.
const REJECTED: [(&str, RejectionReason); 8] = [
    ("1", RejectionReason::SomeoneAntecedent),
    ("3", RejectionReason::ExtraSexIndicator),
    ("4", RejectionReason::MultiplePronouns),
    ("5", RejectionReason::NoGenderedPronoun),
    ("9", RejectionReason::ExtraSexIndicator),
    ("10", RejectionReason::ExtraSexIndicator),
    ("11", RejectionReason::MultiplePronouns),
    ("12", RejectionReason::NoQualifyingCluster),
];

fn run(cfg: &FilterConfig) -> genderprobe_core::FilterOutcome {
    let lex = Arc::new(Lexicon::bundled());
    let records = ingest_plain(fixture("filter_fixture.txt")).unwrap().records;
    assert_eq!(records.len(), 12);
    filter_corpus(&records, &lex, &HeuristicCoref::new(lex.clone()), cfg)
}

#[test]
fn default_config_matches_hand_trace() {
    let out = run(&FilterConfig::default());
    let accepted: Vec<_> = out.accepted.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(accepted, ["2", "6", "7", "8"]);
    let rejected: Vec<_> = out
        .rejected
        .iter()
        .map(|r| (r.id.as_str(), r.reason))
        .collect();
    assert_eq!(rejected, REJECTED);

    let by_id = |id: &str| out.accepted.iter().find(|s| s.id == id).unwrap();
    assert_eq!(
        by_id("2").masked,
        "The belly dancer dances on stage shaking [MASK] hips and body."
    );
    assert_eq!(by_id("6").antecedent.as_deref(), Some("The nurse"));
    assert_eq!(by_id("6").masked, "The nurse is looking after [MASK] patients.");
    assert_eq!(by_id("7").masked, "[MASK] hands tremble as the crowd watches.");
    assert_eq!(by_id("8").antecedent.as_deref(), Some("The mechanic"));

    let s = &out.stats;
    assert_eq!(s.total, 12);
    assert_eq!(s.single_pronoun, 9);
    assert_eq!(s.no_other_indicator, 6);
    assert_eq!(s.coref_resolved, 6);
    assert_eq!(s.accepted, 4);
    assert_eq!(s.rejected_extra_sex_indicator, 3);
    assert_eq!(s.rejected_multiple_pronouns, 2);
}

#[test]
fn someone_flag_off_accepts_the_haymaker_sentence() {
    let cfg = FilterConfig {
        exclude_someone_antecedent: false,
        ..FilterConfig::default()
    };
    let out = run(&cfg);
    let accepted: Vec<_> = out.accepted.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(accepted, ["1", "2", "6", "7", "8"]);
    let first = &out.accepted[0];
    assert_eq!(
        first.masked,
        "Someone winds up [MASK] right arm and knocks the fighter down with a haymaker."
    );
    assert_eq!(first.pronoun, "his");
    assert_eq!(first.antecedent.as_deref(), Some("Someone"));
}

#[test]
fn swag_layout_gives_the_same_verdicts() {
    let lex = Arc::new(Lexicon::bundled());
    let ingested = ingest_swag(fixture("filter_fixture.csv")).unwrap();
    assert_eq!(ingested.skipped, 0);
    let out = filter_corpus(
        &ingested.records,
        &lex,
        &HeuristicCoref::new(lex.clone()),
        &FilterConfig::default(),
    );
    let accepted: Vec<_> = out.accepted.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(accepted, ["1001", "1005", "1006", "1007"]);
    assert_eq!(out.rejected.len(), 8);
}

#[test]
fn coref_can_be_switched_off() {
    let cfg = FilterConfig {
        require_coref_criteria: false,
        ..FilterConfig::default()
    };
    let out = run(&cfg);
    let accepted: Vec<_> = out.accepted.iter().map(|s| s.id.as_str()).collect();
    assert_eq!(accepted, ["1", "2", "6", "7", "8", "12"]);
    assert!(out.accepted.iter().all(|s| s.coref_provider == "none"));
}
