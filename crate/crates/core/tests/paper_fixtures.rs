mod support;

use genderprobe_core::annotation::{accuracy, consensus_from_log, AnnotationLabel, LabelStore};
use genderprobe_core::bias::{audit_corpus, bias_score};
use genderprobe_core::jsonl::read_jsonl;
use genderprobe_core::report::{
    histogram, histogram_csv, parse_histogram_csv, parse_report_json, report_json, summarize,
    DEFAULT_BIN_WIDTH,
};
use genderprobe_core::{
    BiasConfig, BiasResult, Lexicon, MaskedSample, MlmConfig, StubProvider, Verdict,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use support::fixture;

fn audit(stub: &str, tag: &str) -> Vec<BiasResult> {
    let samples: Vec<MaskedSample> = read_jsonl(fixture("paper_samples.jsonl")).unwrap();
    let provider = StubProvider::from_path(fixture(stub), tag).unwrap();
    let mut results = audit_corpus(
        &samples,
        &provider,
        &MlmConfig::default(),
        &Lexicon::bundled(),
        &BiasConfig::default(),
        "[MASK]",
    )
    .unwrap();
    results.retain(|r| r.error.is_none());
    results
}

#[test]
fn worked_scores_from_stub_fixtures() {
    let uncased = audit("stub_bert_uncased.json", "bert-base-uncased");
    let distil = audit("stub_distilbert.json", "distilbert-base-uncased");
    let got: Vec<(&str, f64)> = uncased
        .iter()
        .chain(&distil)
        .map(|r| (r.sample_id.as_str(), r.score.unwrap()))
        .collect();
    let want = [("stand", 0.6905), ("arm", 0.5569), ("arm", 0.9467)];
    assert_eq!(got.len(), want.len());
    for ((id, s), (wid, w)) in got.iter().zip(want) {
        assert_eq!(*id, wid);
        assert!((s - w).abs() < 1e-4, "{id}: {s} vs {w}");
    }
    let rounded: Vec<f64> = got.iter().map(|(_, s)| (s * 100.0).round() / 100.0).collect();
    assert_eq!(rounded, [0.69, 0.56, 0.95]);
    assert!(uncased.iter().chain(&distil).all(|r| r.verdict == Verdict::MaleBiased));
    assert_eq!(distil[0].p_female, Some(0.0305));
}

#[test]
fn worked_scores_directly() {
    for (pm, pf, want) in [(0.435, 0.195, 0.6905), (0.142, 0.113, 0.5569), (0.542, 0.0305, 0.9467)] {
        let oracle = pm / (pm + pf);
        let got = bias_score(pm, pf).unwrap();
        assert!((got - want).abs() < 1e-4);
        assert!((got - oracle).abs() < 1e-15);
    }
}

#[test]
fn table2_accuracy_from_log() {
    let labels: Vec<AnnotationLabel> = read_jsonl(fixture("table2_labels.jsonl")).unwrap();
    let results = consensus_from_log(&labels, 3).unwrap();
    assert_eq!(results.len(), 663);
    assert_eq!(results.iter().filter(|r| r.is_biased).count(), 602);
    let acc = accuracy(&results).unwrap();
    assert!((acc - 602.0 / 663.0).abs() < 1e-12);
    // 602/663 is 90.7994%; the published figure truncates it.
    assert!((acc * 100.0 - 90.79).abs() <= 0.01);
    assert_eq!((acc * 10_000.0).trunc() / 100.0, 90.79);
}

#[test]
fn table2_accuracy_through_the_store() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("labels.jsonl");
    std::fs::copy(fixture("table2_labels.jsonl"), &log).unwrap();
    let samples: Vec<MaskedSample> = read_jsonl(fixture("table2_samples.jsonl")).unwrap();
    let store = LabelStore::open(samples, &log).unwrap();
    let report = store.report(3).unwrap();
    assert_eq!((report.n_samples, report.n_biased), (663, 602));
    assert!((report.accuracy.unwrap() - 0.9079).abs() < 1e-4);
    let progress = store.progress();
    assert_eq!(progress.labeled.len(), 4);
    assert!(progress.labeled.values().all(|&n| n <= 663));
}

fn check_bucket(path: &str, counts: (usize, usize, usize, usize), male: f64, female: f64) {
    let results: Vec<BiasResult> = read_jsonl(fixture(path)).unwrap();
    let s = summarize(&results);
    assert_eq!(s.n_total, 663);
    assert_eq!((s.n_male, s.n_female, s.n_undetermined, s.n_neutral), counts);
    assert!((s.avg_male_score.unwrap() - male).abs() < 1e-9);
    assert!((s.avg_female_score.unwrap() - female).abs() < 1e-9);

    let h = histogram(&results, DEFAULT_BIN_WIDTH).unwrap();
    assert_eq!(h.total(), s.n_total - s.n_undetermined);

    let back = parse_report_json(&report_json(&s, &h)).unwrap();
    let six = |x: f64| (x * 1e6).round();
    assert_eq!(six(back.summary.avg_male_score.unwrap()), six(male));
    assert_eq!(six(back.summary.avg_female_score.unwrap()), six(female));
    assert_eq!(back.summary.n_male, counts.0);
    let csv_bins = parse_histogram_csv(&histogram_csv(&h)).unwrap();
    for (a, b) in csv_bins.iter().zip(&h.bins) {
        assert_eq!(six(a.lower_edge), six(b.lower_edge));
        assert_eq!(a.count, b.count);
    }
}

#[test]
fn bert_uncased_distribution_fixture() {
    check_bucket("results_bert_uncased.jsonl", (542, 65, 33, 23), 0.556, 0.47);
}

#[test]
fn bert_cased_distribution_fixture() {
    check_bucket("results_bert_cased.jsonl", (575, 43, 45, 0), 0.550, 0.483);
}

#[test]
fn gaussian_scores_peak_next_to_point_55() {
    let mut rng = ChaCha8Rng::seed_from_u64(55);
    let scores: Vec<f64> = (0..1000)
        .map(|_| {
            let (u1, u2): (f64, f64) = (rng.random_range(f64::EPSILON..1.0), rng.random());
            let z = (-2.0 * u1.ln()).sqrt() * (std::f64::consts::TAU * u2).cos();
            (0.55 + 0.05 * z).clamp(0.0, 1.0)
        })
        .collect();
    let results: Vec<BiasResult> = scores
        .iter()
        .map(|&s| BiasResult {
            sample_id: "g".into(),
            p_male: Some(s),
            p_female: Some(1.0 - s),
            score: Some(s),
            verdict: Verdict::Neutral,
            model_tag: "g".into(),
            error: None,
        })
        .collect();
    let h = histogram(&results, 0.025).unwrap();
    for b in &h.bins {
        let direct = scores
            .iter()
            .filter(|&&s| s >= b.lower_edge && (s < b.lower_edge + 0.025 || (s == 1.0 && b.lower_edge >= 0.975)))
            .count();
        assert_eq!(b.count, direct, "bin {}", b.lower_edge);
    }
    let mode = h.bins.iter().max_by_key(|b| b.count).unwrap();
    // 0.55 is a bin edge; both neighbouring bins have the same expected mass.
    assert!([0.525, 0.55].contains(&mode.lower_edge), "mode at {}", mode.lower_edge);
}
