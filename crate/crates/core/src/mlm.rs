//! Fill-mask providers: a blocking HTTP client for hosted inference endpoints
//! and a fixture-backed stub.

use std::collections::HashMap;
use std::fs;
use std::path::Path;
use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::filter::DEFAULT_MASK_TOKEN;

/// Tolerance on the sum of returned probabilities.
pub const PROBABILITY_SUM_SLACK: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MlmError {
    #[error("invalid input: {0}")]
    InvalidInput(String),
    #[error("provider error: {0}")]
    Provider(String),
    #[error("no fixture entry for {0:?}")]
    FixtureMiss(String),
    #[error("cannot load stub fixture: {0}")]
    Fixture(String),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MaskPrediction {
    pub token: String,
    pub probability: f64,
}

impl MaskPrediction {
    pub fn new(token: impl Into<String>, probability: f64) -> Self {
        MaskPrediction {
            token: token.into(),
            probability,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlmConfig {
    pub endpoint_url: String,
    /// The audited model's mask token, e.g. `[MASK]` or `<mask>`.
    pub mask_token: String,
    pub top_k: usize,
    pub timeout_secs: f64,
    pub max_in_flight: usize,
}

impl Default for MlmConfig {
    fn default() -> Self {
        MlmConfig {
            endpoint_url: String::new(),
            mask_token: DEFAULT_MASK_TOKEN.to_owned(),
            top_k: 10,
            timeout_secs: 30.0,
            max_in_flight: 4,
        }
    }
}

impl MlmConfig {
    pub fn validate(&self) -> Result<(), MlmError> {
        if self.top_k == 0 {
            return Err(MlmError::InvalidInput("top_k must be at least 1".into()));
        }
        if self.max_in_flight == 0 {
            return Err(MlmError::InvalidInput("max_in_flight must be at least 1".into()));
        }
        if self.mask_token.is_empty() {
            return Err(MlmError::InvalidInput("mask token must not be empty".into()));
        }
        if !(self.timeout_secs > 0.0 && self.timeout_secs.is_finite()) {
            return Err(MlmError::InvalidInput("timeout must be positive".into()));
        }
        Ok(())
    }

    pub fn timeout(&self) -> Duration {
        Duration::from_secs_f64(self.timeout_secs)
    }
}

pub trait FillMaskProvider: Send + Sync {
    /// Identity of the audited model, recorded in every result.
    fn tag(&self) -> &str;

    /// Raw predictions for the single masked position in `text`.
    fn predict(&self, text: &str, top_k: usize) -> Result<Vec<MaskPrediction>, MlmError>;
}

/// Queries `provider` and normalizes its answer: probabilities are checked,
/// sorted descending and truncated to `cfg.top_k`.
pub fn fill_mask(
    provider: &dyn FillMaskProvider,
    masked_text: &str,
    cfg: &MlmConfig,
) -> Result<Vec<MaskPrediction>, MlmError> {
    let count = masked_text.matches(cfg.mask_token.as_str()).count();
    if count != 1 {
        return Err(MlmError::InvalidInput(format!(
            "expected exactly one {} in {masked_text:?}, found {count}",
            cfg.mask_token
        )));
    }
    let mut preds = provider.predict(masked_text, cfg.top_k)?;
    if let Some(bad) = preds
        .iter()
        .find(|p| !(0.0..=1.0).contains(&p.probability))
    {
        return Err(MlmError::Provider(format!(
            "probability {} for {:?} outside [0, 1]",
            bad.probability, bad.token
        )));
    }
    preds.sort_by(|a, b| b.probability.total_cmp(&a.probability));
    preds.truncate(cfg.top_k);
    let total: f64 = preds.iter().map(|p| p.probability).sum();
    if total > 1.0 + PROBABILITY_SUM_SLACK {
        return Err(MlmError::Provider(format!(
            "probabilities sum to {total}, more than 1"
        )));
    }
    Ok(preds)
}

/// Serves predictions from a JSON map of exact masked text to prediction list.
#[derive(Debug, Clone)]
pub struct StubProvider {
    tag: String,
    entries: HashMap<String, Vec<MaskPrediction>>,
}

impl StubProvider {
    pub fn new(tag: impl Into<String>, entries: HashMap<String, Vec<MaskPrediction>>) -> Self {
        StubProvider {
            tag: tag.into(),
            entries,
        }
    }

    pub fn from_path(path: impl AsRef<Path>, tag: impl Into<String>) -> Result<Self, MlmError> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|e| MlmError::Fixture(format!("{}: {e}", path.display())))?;
        let entries = serde_json::from_str(&text)
            .map_err(|e| MlmError::Fixture(format!("{}: {e}", path.display())))?;
        Ok(StubProvider::new(tag, entries))
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl FillMaskProvider for StubProvider {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn predict(&self, text: &str, _top_k: usize) -> Result<Vec<MaskPrediction>, MlmError> {
        self.entries
            .get(text)
            .cloned()
            .ok_or_else(|| MlmError::FixtureMiss(text.to_owned()))
    }
}

#[derive(Serialize)]
struct FillMaskRequest<'a> {
    inputs: &'a str,
    top_k: usize,
}

#[derive(Deserialize)]
struct WirePrediction {
    token_str: String,
    score: f64,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum WireResponse {
    Flat(Vec<WirePrediction>),
    // Some servers wrap single-mask answers in an outer list.
    Nested(Vec<Vec<WirePrediction>>),
}

/// Client for endpoints speaking `POST {"inputs", "top_k"}` →
/// `[{"token_str", "score"}, ...]`.
#[derive(Debug, Clone)]
pub struct HttpFillMask {
    url: String,
    tag: String,
    bearer: Option<String>,
    client: reqwest::blocking::Client,
}

impl HttpFillMask {
    pub fn new(
        url: impl Into<String>,
        tag: impl Into<String>,
        timeout: Duration,
        bearer: Option<String>,
    ) -> Result<Self, MlmError> {
        let client = reqwest::blocking::Client::builder()
            .timeout(timeout)
            .build()
            .map_err(|e| MlmError::Provider(e.to_string()))?;
        Ok(HttpFillMask {
            url: url.into(),
            tag: tag.into(),
            bearer,
            client,
        })
    }

    fn attempt(&self, text: &str, top_k: usize) -> Result<Vec<MaskPrediction>, Attempt> {
        let mut req = self.client.post(&self.url).json(&FillMaskRequest {
            inputs: text,
            top_k,
        });
        if let Some(token) = &self.bearer {
            req = req.bearer_auth(token);
        }
        let resp = req.send().map_err(|e| {
            let transient = e.is_timeout() || e.is_connect() || e.is_request();
            Attempt {
                transient,
                error: MlmError::Provider(e.to_string()),
            }
        })?;
        let status = resp.status();
        if !status.is_success() {
            return Err(Attempt {
                transient: status.is_server_error() || status.as_u16() == 429,
                error: MlmError::Provider(format!("HTTP {}", status.as_u16())),
            });
        }
        let body = resp.text().map_err(|e| Attempt {
            transient: true,
            error: MlmError::Provider(e.to_string()),
        })?;
        parse_fill_mask_response(&body).map_err(|error| Attempt {
            transient: false,
            error,
        })
    }
}

struct Attempt {
    transient: bool,
    error: MlmError,
}

impl FillMaskProvider for HttpFillMask {
    fn tag(&self) -> &str {
        &self.tag
    }

    fn predict(&self, text: &str, top_k: usize) -> Result<Vec<MaskPrediction>, MlmError> {
        match self.attempt(text, top_k) {
            Ok(p) => Ok(p),
            Err(first) if first.transient => {
                log::debug!("retrying fill-mask request after: {}", first.error);
                self.attempt(text, top_k).map_err(|a| a.error)
            }
            Err(first) => Err(first.error),
        }
    }
}

/// Decodes a fill-mask response body.
pub fn parse_fill_mask_response(body: &str) -> Result<Vec<MaskPrediction>, MlmError> {
    let wire: WireResponse = serde_json::from_str(body)
        .map_err(|e| MlmError::Provider(format!("malformed payload: {e}")))?;
    let flat = match wire {
        WireResponse::Flat(v) => v,
        WireResponse::Nested(mut v) if v.len() == 1 => v.remove(0),
        WireResponse::Nested(v) => {
            return Err(MlmError::Provider(format!(
                "expected predictions for one mask, got {}",
                v.len()
            )))
        }
    };
    Ok(flat
        .into_iter()
        .map(|p| MaskPrediction::new(p.token_str, p.score))
        .collect())
}
