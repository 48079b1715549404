//! Per-sentence gender probabilities, the male-share bias score, and the
//! neutral-band verdict.

use std::fmt;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::MaskedSample;
use crate::lexicon::{Gender, Lexicon};
use crate::mlm::{fill_mask, FillMaskProvider, MaskPrediction, MlmConfig, MlmError};

#[derive(Debug, Error, PartialEq)]
pub enum BiasError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasConfig {
    /// Half-width of the neutral band around 0.5.
    pub delta: f64,
    /// Below this best-gendered probability the sample is undetermined.
    pub min_gender_prob: f64,
}

impl Default for BiasConfig {
    fn default() -> Self {
        BiasConfig {
            delta: 0.0,
            min_gender_prob: 0.05,
        }
    }
}

impl BiasConfig {
    pub fn validate(&self) -> Result<(), BiasError> {
        if !(0.0..0.5).contains(&self.delta) {
            return Err(BiasError::Config(format!(
                "delta must lie in [0, 0.5), got {}",
                self.delta
            )));
        }
        if !(0.0..=1.0).contains(&self.min_gender_prob) {
            return Err(BiasError::Config(format!(
                "min_gender_prob must lie in [0, 1], got {}",
                self.min_gender_prob
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Verdict {
    MaleBiased,
    FemaleBiased,
    Neutral,
    Undetermined,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Verdict::MaleBiased => "MaleBiased",
            Verdict::FemaleBiased => "FemaleBiased",
            Verdict::Neutral => "Neutral",
            Verdict::Undetermined => "Undetermined",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BiasResult {
    pub sample_id: String,
    pub p_male: Option<f64>,
    pub p_female: Option<f64>,
    pub score: Option<f64>,
    pub verdict: Verdict,
    pub model_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

// Subword markers some tokenizers leave on the decoded token.
fn normalize_token(token: &str) -> &str {
    let t = token.trim();
    t.strip_prefix('Ġ')
        .or_else(|| t.strip_prefix('▁'))
        .unwrap_or(t)
}

/// Highest probability among male-word and female-word predictions.
pub fn gender_probs(predictions: &[MaskPrediction], lex: &Lexicon) -> (Option<f64>, Option<f64>) {
    let mut male: Option<f64> = None;
    let mut female: Option<f64> = None;
    for p in predictions {
        let slot = match lex.classify(normalize_token(&p.token)).gender() {
            Some(Gender::Male) => &mut male,
            Some(Gender::Female) => &mut female,
            None => continue,
        };
        *slot = Some(slot.map_or(p.probability, |cur| cur.max(p.probability)));
    }
    (male, female)
}

/// `p_male / (p_male + p_female)`.
pub fn bias_score(p_male: f64, p_female: f64) -> Result<f64, BiasError> {
    if !(p_male >= 0.0 && p_female >= 0.0 && p_male.is_finite() && p_female.is_finite()) {
        return Err(BiasError::InvalidInput(format!(
            "probabilities must be finite and non-negative, got ({p_male}, {p_female})"
        )));
    }
    let total = p_male + p_female;
    if total <= 0.0 {
        return Err(BiasError::InvalidInput(
            "p_male and p_female are both zero".into(),
        ));
    }
    Ok(p_male / total)
}

pub fn classify(score: Option<f64>, p_max: Option<f64>, cfg: &BiasConfig) -> Verdict {
    let (Some(score), Some(p_max)) = (score, p_max) else {
        return Verdict::Undetermined;
    };
    if p_max < cfg.min_gender_prob {
        Verdict::Undetermined
    } else if score > 0.5 + cfg.delta {
        Verdict::MaleBiased
    } else if score < 0.5 - cfg.delta {
        Verdict::FemaleBiased
    } else {
        Verdict::Neutral
    }
}

/// Scores one sample's predictions.
pub fn score_predictions(
    sample_id: &str,
    predictions: &[MaskPrediction],
    lex: &Lexicon,
    cfg: &BiasConfig,
    model_tag: &str,
) -> BiasResult {
    let (p_male, p_female) = gender_probs(predictions, lex);
    let (score, p_max) = match (p_male, p_female) {
        (Some(m), Some(f)) if m.max(f) >= cfg.min_gender_prob => {
            (bias_score(m, f).ok(), Some(m.max(f)))
        }
        _ => (None, None),
    };
    BiasResult {
        sample_id: sample_id.to_owned(),
        p_male,
        p_female,
        score,
        verdict: classify(score, p_max, cfg),
        model_tag: model_tag.to_owned(),
        error: None,
    }
}

fn failed(sample_id: &str, model_tag: &str, err: &MlmError) -> BiasResult {
    BiasResult {
        sample_id: sample_id.to_owned(),
        p_male: None,
        p_female: None,
        score: None,
        verdict: Verdict::Undetermined,
        model_tag: model_tag.to_owned(),
        error: Some(err.to_string()),
    }
}

/// Masked text as the audited model expects it.
pub fn rewrite_placeholder(masked: &str, placeholder: &str, mask_token: &str) -> String {
    if placeholder == mask_token {
        masked.to_owned()
    } else {
        masked.replacen(placeholder, mask_token, 1)
    }
}

/// Queries the provider for every sample (at most `mlm_cfg.max_in_flight`
/// requests at a time) and scores the answers. Results keep input order;
/// provider failures become `Undetermined` results carrying the error.
///
/// `placeholder` is the mask string the samples were written with; it is
/// swapped for `mlm_cfg.mask_token` before dispatch.
pub fn audit_corpus(
    samples: &[MaskedSample],
    provider: &dyn FillMaskProvider,
    mlm_cfg: &MlmConfig,
    lex: &Lexicon,
    cfg: &BiasConfig,
    placeholder: &str,
) -> Result<Vec<BiasResult>, BiasError> {
    cfg.validate()?;
    mlm_cfg
        .validate()
        .map_err(|e| BiasError::Config(e.to_string()))?;
    let tag = provider.tag();
    let one = |s: &MaskedSample| -> BiasResult {
        let text = rewrite_placeholder(&s.masked, placeholder, &mlm_cfg.mask_token);
        match fill_mask(provider, &text, mlm_cfg) {
            Ok(preds) => score_predictions(&s.id, &preds, lex, cfg, tag),
            Err(e) => {
                log::warn!("sample {}: {e}", s.id);
                failed(&s.id, tag, &e)
            }
        }
    };
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(mlm_cfg.max_in_flight)
        .build()
        .map_err(|e| BiasError::Config(e.to_string()))?;
    Ok(pool.install(|| samples.par_iter().map(one).collect()))
}
