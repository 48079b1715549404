//! The four-step probe filter: pronoun scan, sex-indicator check, coreference
//! cluster check, then masking of the single gendered pronoun.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{tokenize, SentenceRecord, Token};
use crate::coref::{CorefCluster, CorefProvider, Mention};
use crate::lexicon::{Gender, Lexicon};

pub const DEFAULT_MASK_TOKEN: &str = "[MASK]";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterConfig {
    pub mask_token: String,
    /// Reject clusters whose non-pronoun mention is headed by "someone".
    pub exclude_someone_antecedent: bool,
    /// When off, sentences passing the indicator check are accepted without
    /// consulting the coreference provider.
    pub require_coref_criteria: bool,
    /// Upper bound on sentences processed concurrently.
    pub parallelism: usize,
}

impl Default for FilterConfig {
    fn default() -> Self {
        FilterConfig {
            mask_token: DEFAULT_MASK_TOKEN.to_owned(),
            exclude_someone_antecedent: true,
            require_coref_criteria: true,
            parallelism: 4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RejectionReason {
    NoGenderedPronoun,
    MultiplePronouns,
    ExtraSexIndicator,
    NoQualifyingCluster,
    SomeoneAntecedent,
    CorefError,
}

impl RejectionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            RejectionReason::NoGenderedPronoun => "no_gendered_pronoun",
            RejectionReason::MultiplePronouns => "multiple_pronouns",
            RejectionReason::ExtraSexIndicator => "extra_sex_indicator",
            RejectionReason::NoQualifyingCluster => "no_qualifying_cluster",
            RejectionReason::SomeoneAntecedent => "someone_antecedent",
            RejectionReason::CorefError => "coref_error",
        }
    }
}

impl fmt::Display for RejectionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A probe sentence with its single gendered pronoun replaced by a mask.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MaskedSample {
    pub id: String,
    pub original: String,
    pub masked: String,
    pub pronoun: String,
    pub pronoun_gender: Gender,
    pub pronoun_token_index: usize,
    pub antecedent: Option<String>,
    pub coref_provider: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejection_reason: Option<RejectionReason>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejection {
    pub id: String,
    pub reason: RejectionReason,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PronounScan {
    pub pronoun_indices: Vec<usize>,
    pub indicator_count: usize,
}

pub fn pronoun_scan(tokens: &[Token], lex: &Lexicon) -> PronounScan {
    let mut pronoun_indices = Vec::new();
    let mut indicator_count = 0;
    for (i, t) in tokens.iter().enumerate() {
        let class = lex.classify(&t.lower);
        if class.is_pronoun() {
            pronoun_indices.push(i);
        }
        if class.is_sex_indicator() {
            indicator_count += 1;
        }
    }
    PronounScan {
        pronoun_indices,
        indicator_count,
    }
}

/// Outcome of the cluster criteria.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ClusterCheck<'a> {
    /// The qualifying cluster's non-pronoun mention, if a cluster was consulted.
    Accept(Option<&'a Mention>),
    Reject(RejectionReason),
}

fn is_pronoun_mention(m: &Mention, tokens: &[Token], lex: &Lexicon) -> bool {
    m.len() == 1
        && tokens
            .get(m.start)
            .is_some_and(|t| lex.classify(&t.lower).is_pronoun())
}

/// Lowercased last token of a mention with any possessive suffix removed.
fn mention_head(m: &Mention, tokens: &[Token]) -> String {
    let last = &tokens[m.end - 1].lower;
    last.strip_suffix("'s")
        .or_else(|| last.strip_suffix("’s"))
        .unwrap_or(last)
        .to_owned()
}

/// Accepts when some cluster has exactly two mentions, one of them a gendered
/// pronoun, and (if configured) the other not headed by "someone".
pub fn cluster_check<'a>(
    clusters: &'a [CorefCluster],
    tokens: &[Token],
    lex: &Lexicon,
    cfg: &FilterConfig,
) -> ClusterCheck<'a> {
    if !cfg.require_coref_criteria {
        return ClusterCheck::Accept(None);
    }
    let mut saw_someone = false;
    for cluster in clusters {
        let [a, b] = &cluster.mentions[..] else {
            continue;
        };
        let other = match (is_pronoun_mention(a, tokens, lex), is_pronoun_mention(b, tokens, lex)) {
            (true, false) => b,
            (false, true) => a,
            _ => continue,
        };
        if cfg.exclude_someone_antecedent && mention_head(other, tokens) == "someone" {
            saw_someone = true;
            continue;
        }
        return ClusterCheck::Accept(Some(other));
    }
    ClusterCheck::Reject(if saw_someone {
        RejectionReason::SomeoneAntecedent
    } else {
        RejectionReason::NoQualifyingCluster
    })
}

/// Replaces the pronoun's character span with the mask token; every other
/// byte of the sentence is left untouched.
pub fn mask(
    record: &SentenceRecord,
    tokens: &[Token],
    pronoun_index: usize,
    lex: &Lexicon,
    cfg: &FilterConfig,
) -> MaskedSample {
    let tok = &tokens[pronoun_index];
    let gender = lex
        .classify(&tok.lower)
        .gender()
        .expect("mask target must be a gendered pronoun");
    let text = &record.text;
    let mut masked = String::with_capacity(text.len() + cfg.mask_token.len());
    masked.push_str(&text[..tok.start]);
    masked.push_str(&cfg.mask_token);
    masked.push_str(&text[tok.end..]);
    MaskedSample {
        id: record.id.clone(),
        original: text.clone(),
        masked,
        pronoun: tok.surface.clone(),
        pronoun_gender: gender,
        pronoun_token_index: pronoun_index,
        antecedent: None,
        coref_provider: String::new(),
        rejection_reason: None,
    }
}

/// Per-stage counts for one filter run.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct FilterStats {
    pub total: usize,
    pub single_pronoun: usize,
    pub no_other_indicator: usize,
    pub coref_resolved: usize,
    pub accepted: usize,
    pub rejected_no_gendered_pronoun: usize,
    pub rejected_multiple_pronouns: usize,
    pub rejected_extra_sex_indicator: usize,
    pub rejected_coref_error: usize,
    pub rejected_no_qualifying_cluster: usize,
    pub rejected_someone_antecedent: usize,
}

impl FilterStats {
    fn count_rejection(&mut self, reason: RejectionReason) {
        match reason {
            RejectionReason::NoGenderedPronoun => self.rejected_no_gendered_pronoun += 1,
            RejectionReason::MultiplePronouns => self.rejected_multiple_pronouns += 1,
            RejectionReason::ExtraSexIndicator => self.rejected_extra_sex_indicator += 1,
            RejectionReason::NoQualifyingCluster => self.rejected_no_qualifying_cluster += 1,
            RejectionReason::SomeoneAntecedent => self.rejected_someone_antecedent += 1,
            RejectionReason::CorefError => self.rejected_coref_error += 1,
        }
    }
}

#[derive(Debug, Clone, Default)]
pub struct FilterOutcome {
    pub accepted: Vec<MaskedSample>,
    pub rejected: Vec<Rejection>,
    pub stats: FilterStats,
}

// How far a single sentence got through the pipeline.
enum Verdict {
    Accepted(MaskedSample),
    Rejected(RejectionReason),
}

#[derive(Default, Clone, Copy)]
struct Progress {
    single_pronoun: bool,
    no_other_indicator: bool,
    coref_resolved: bool,
}

fn filter_one(
    record: &SentenceRecord,
    lex: &Lexicon,
    coref: &dyn CorefProvider,
    cfg: &FilterConfig,
) -> (Verdict, Progress) {
    let mut progress = Progress::default();
    let tokens = tokenize(&record.text);
    let scan = pronoun_scan(&tokens, lex);
    let pronoun_index = match scan.pronoun_indices[..] {
        [] => return (Verdict::Rejected(RejectionReason::NoGenderedPronoun), progress),
        [i] => i,
        _ => return (Verdict::Rejected(RejectionReason::MultiplePronouns), progress),
    };
    progress.single_pronoun = true;
    if scan.indicator_count != 1 {
        return (Verdict::Rejected(RejectionReason::ExtraSexIndicator), progress);
    }
    progress.no_other_indicator = true;

    let mut sample = mask(record, &tokens, pronoun_index, lex, cfg);
    if !cfg.require_coref_criteria {
        sample.coref_provider = "none".to_owned();
        return (Verdict::Accepted(sample), progress);
    }
    let clusters = match coref.resolve(&record.text, &tokens) {
        Ok(c) => c,
        Err(e) => {
            log::warn!("coreference failed for {}: {e}", record.id);
            return (Verdict::Rejected(RejectionReason::CorefError), progress);
        }
    };
    progress.coref_resolved = true;
    match cluster_check(&clusters, &tokens, lex, cfg) {
        ClusterCheck::Accept(antecedent) => {
            sample.antecedent = antecedent.map(|m| m.text.clone());
            sample.coref_provider = coref.name().to_owned();
            (Verdict::Accepted(sample), progress)
        }
        ClusterCheck::Reject(reason) => (Verdict::Rejected(reason), progress),
    }
}

/// Runs every record through the filter. Output order follows input order.
pub fn filter_corpus(
    records: &[SentenceRecord],
    lex: &Lexicon,
    coref: &dyn CorefProvider,
    cfg: &FilterConfig,
) -> FilterOutcome {
    let run = || -> Vec<(Verdict, Progress)> {
        records
            .par_iter()
            .map(|r| filter_one(r, lex, coref, cfg))
            .collect()
    };
    let verdicts = match rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.parallelism.max(1))
        .build()
    {
        Ok(pool) => pool.install(run),
        Err(e) => {
            log::warn!("cannot start filter thread pool ({e}); running on the global pool");
            run()
        }
    };

    let mut out = FilterOutcome::default();
    out.stats.total = records.len();
    for (record, (verdict, progress)) in records.iter().zip(verdicts) {
        out.stats.single_pronoun += usize::from(progress.single_pronoun);
        out.stats.no_other_indicator += usize::from(progress.no_other_indicator);
        out.stats.coref_resolved += usize::from(progress.coref_resolved);
        match verdict {
            Verdict::Accepted(sample) => {
                out.stats.accepted += 1;
                out.accepted.push(sample);
            }
            Verdict::Rejected(reason) => {
                out.stats.count_rejection(reason);
                out.rejected.push(Rejection {
                    id: record.id.clone(),
                    reason,
                });
            }
        }
    }
    out
}
